#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace hdavca {

// FMAP v1 exchange format, little-endian, no padding:
//   "FMAP" | u32 version (=1) | u32 ndims | ndims x u32 dims | prod(dims) x f32
// Feature maps use dims (C, H, W); disparity maps use (1, H, W).
inline constexpr char kFmapMagic[4] = {'F', 'M', 'A', 'P'};
inline constexpr std::uint32_t kFmapVersion = 1;

struct FmapArray {
  std::vector<std::uint32_t> dims;
  std::vector<float> data;
};

FmapArray read_fmap(const std::string& path);
FmapArray parse_fmap(const std::vector<unsigned char>& bytes);
std::vector<unsigned char> serialize_fmap(const FmapArray& array);
void write_fmap(const FmapArray& array, const std::string& path);

struct FeatureMapTensor {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<float> data;  // channel-major, then row-major

  // Throws kDimension unless channels >= 1 and data matches C*H*W.
  void validate() const;
};

FeatureMapTensor read_feature_map(const std::string& path);
void write_feature_map(const FeatureMapTensor& tensor, const std::string& path);

std::vector<double> channel_means(const FeatureMapTensor& tensor);

// 1 - Pearson(a, b). A constant vector yields 1.
double correlation_distance(const std::vector<double>& a, const std::vector<double>& b);

// Correlation distance between the channel-mean vectors of two maps; spatial
// sizes may differ, channel counts may not.
double semantic_feature(const FeatureMapTensor& original, const FeatureMapTensor& retargeted);

}  // namespace hdavca
