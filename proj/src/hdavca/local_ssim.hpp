#pragma once

#include <cstddef>

#include "hdavca/image.hpp"
#include "hdavca/keypoints.hpp"

namespace hdavca {

inline constexpr int kSsimPatchSize = 33;
inline constexpr int kSsimPatchHalf = 16;
inline constexpr int kSsimWindowSize = 11;
inline constexpr double kSsimWindowSigma = 1.5;
inline constexpr double kSsimC1 = (0.01 * 255) * (0.01 * 255);
inline constexpr double kSsimC2 = (0.03 * 255) * (0.03 * 255);

enum class BorderMode { kClamp, kDrop };
enum class SsimPooling { kMeanMap, kCenterWindow };

struct LocalSsimParams {
  SiftParams sift;
  BorderMode border = BorderMode::kClamp;
  SsimPooling pooling = SsimPooling::kMeanMap;
};

struct LocalSsimFeature {
  double value = 0.0;
  std::size_t n_matches = 0;
};

// SSIM between two 33x33 patches: Gaussian-weighted (11x11, sigma 1.5)
// statistics per window, pooled over all window positions or taken from the
// centered window only.
double windowed_ssim(const GrayImage& a, const GrayImage& b,
                     SsimPooling pooling = SsimPooling::kMeanMap);

LocalSsimFeature local_ssim_feature(const GrayImage& original_left, const GrayImage& retargeted_left,
                                    const LocalSsimParams& params = {});

// Same, with precomputed keypoint matches (retargeted -> original).
LocalSsimFeature local_ssim_from_matches(const GrayImage& original_left,
                                         const GrayImage& retargeted_left,
                                         const std::vector<MatchPair>& matches,
                                         const LocalSsimParams& params = {});

}  // namespace hdavca
