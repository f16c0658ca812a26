#include "hdavca/semantic.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "hdavca/error.hpp"

namespace hdavca {

namespace {

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xFFu));
}

std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace

FmapArray parse_fmap(const std::vector<unsigned char>& bytes) {
  if (bytes.size() < 4) Fail(ErrorCode::kFormat, "truncated file");
  if (std::memcmp(bytes.data(), kFmapMagic, 4) != 0) Fail(ErrorCode::kFormat, "bad magic");
  if (bytes.size() < 12) Fail(ErrorCode::kFormat, "truncated file");
  if (get_u32(bytes.data() + 4) != kFmapVersion) Fail(ErrorCode::kFormat, "bad version");
  const std::uint32_t ndims = get_u32(bytes.data() + 8);
  if (ndims == 0 || ndims > 8) Fail(ErrorCode::kFormat, "bad dimension count");
  std::size_t pos = 12;
  if (bytes.size() < pos + 4ull * ndims) Fail(ErrorCode::kFormat, "truncated file");

  FmapArray out;
  std::uint64_t count = 1;
  for (std::uint32_t i = 0; i < ndims; ++i) {
    const std::uint32_t d = get_u32(bytes.data() + pos);
    pos += 4;
    out.dims.push_back(d);
    count *= d;
    if (count > (1ull << 34)) Fail(ErrorCode::kFormat, "payload too large");
  }
  const std::uint64_t payload = count * 4;
  if (bytes.size() - pos < payload) Fail(ErrorCode::kFormat, "truncated file");
  if (bytes.size() - pos > payload) Fail(ErrorCode::kFormat, "trailing bytes after payload");

  out.data.resize(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    const float f = std::bit_cast<float>(get_u32(bytes.data() + pos + 4 * i));
    if (!std::isfinite(f)) Fail(ErrorCode::kFormat, "non-finite payload");
    out.data[i] = f;
  }
  return out;
}

FmapArray read_fmap(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorCode::kIo, "unreadable file: " + path);
  const std::vector<unsigned char> bytes{std::istreambuf_iterator<char>(in),
                                         std::istreambuf_iterator<char>()};
  try {
    return parse_fmap(bytes);
  } catch (const Error& e) {
    throw Error(e.code(), std::string(e.what()) + ": " + path);
  }
}

std::vector<unsigned char> serialize_fmap(const FmapArray& array) {
  std::uint64_t count = 1;
  for (auto d : array.dims) count *= d;
  Require(!array.dims.empty() && count == array.data.size(), ErrorCode::kDimension,
          "FMAP dims do not match payload length");
  std::vector<unsigned char> out(kFmapMagic, kFmapMagic + 4);
  out.reserve(12 + 4 * array.dims.size() + 4 * array.data.size());
  put_u32(out, kFmapVersion);
  put_u32(out, static_cast<std::uint32_t>(array.dims.size()));
  for (auto d : array.dims) put_u32(out, d);
  for (float f : array.data) {
    Require(std::isfinite(f), ErrorCode::kInvalidArgument, "non-finite payload");
    put_u32(out, std::bit_cast<std::uint32_t>(f));
  }
  return out;
}

void write_fmap(const FmapArray& array, const std::string& path) {
  const auto bytes = serialize_fmap(array);
  std::ofstream out(path, std::ios::binary);
  if (!out) Fail(ErrorCode::kIo, "cannot write file: " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) Fail(ErrorCode::kIo, "cannot write file: " + path);
}

void FeatureMapTensor::validate() const {
  Require(channels >= 1 && height >= 1 && width >= 1, ErrorCode::kDimension,
          "feature map needs positive dimensions");
  Require(data.size() == static_cast<std::size_t>(channels) * height * width,
          ErrorCode::kDimension, "feature map payload does not match C*H*W");
}

FeatureMapTensor read_feature_map(const std::string& path) {
  FmapArray a = read_fmap(path);
  if (a.dims.size() != 3) Fail(ErrorCode::kDimension, "feature map must have dims (C, H, W): " + path);
  FeatureMapTensor t{static_cast<int>(a.dims[0]), static_cast<int>(a.dims[1]),
                     static_cast<int>(a.dims[2]), std::move(a.data)};
  t.validate();
  return t;
}

void write_feature_map(const FeatureMapTensor& tensor, const std::string& path) {
  tensor.validate();
  write_fmap({{static_cast<std::uint32_t>(tensor.channels), static_cast<std::uint32_t>(tensor.height),
               static_cast<std::uint32_t>(tensor.width)},
              tensor.data},
             path);
}

std::vector<double> channel_means(const FeatureMapTensor& tensor) {
  tensor.validate();
  const std::size_t plane = static_cast<std::size_t>(tensor.height) * tensor.width;
  std::vector<double> means(tensor.channels);
  for (int c = 0; c < tensor.channels; ++c) {
    double sum = 0.0;
    const float* p = tensor.data.data() + c * plane;
    for (std::size_t i = 0; i < plane; ++i) sum += p[i];
    means[c] = sum / static_cast<double>(plane);
  }
  return means;
}

double correlation_distance(const std::vector<double>& a, const std::vector<double>& b) {
  Require(a.size() == b.size(), ErrorCode::kDimension, "length mismatch");
  if (a.size() < 2) return 1.0;
  const double n = static_cast<double>(a.size());
  double mean_a = 0.0, mean_b = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    mean_a += a[i];
    mean_b += b[i];
  }
  mean_a /= n;
  mean_b /= n;
  double cross = 0.0, ss_a = 0.0, ss_b = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - mean_a;
    const double db = b[i] - mean_b;
    cross += da * db;
    ss_a += da * da;
    ss_b += db * db;
  }
  if (ss_a <= 0.0 || ss_b <= 0.0) return 1.0;
  return std::clamp(1.0 - cross / std::sqrt(ss_a * ss_b), 0.0, 2.0);
}

double semantic_feature(const FeatureMapTensor& original, const FeatureMapTensor& retargeted) {
  Require(original.channels == retargeted.channels, ErrorCode::kDimension,
          "channel mismatch between feature maps");
  return correlation_distance(channel_means(original), channel_means(retargeted));
}

}  // namespace hdavca
