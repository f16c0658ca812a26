#include "hdavca/disparity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "hdavca/error.hpp"
#include "hdavca/semantic.hpp"

namespace hdavca {

DisparityMap estimate_disparity(const StereoPair& pair, const BlockMatchParams& params) {
  Require(params.block >= 1 && params.block % 2 == 1, ErrorCode::kInvalidArgument,
          "block size must be odd and positive");
  Require(params.search_range >= 0, ErrorCode::kInvalidArgument, "negative search range");
  const int w = pair.width();
  const int h = pair.height();
  const int r = params.block / 2;
  if (w <= 2 * params.search_range || w < params.block || h < params.block) {
    Fail(ErrorCode::kDimension, "image narrower than search window");
  }

  const GrayImage& left = pair.left;
  const GrayImage& right = pair.right;
  const int x_lo = r, x_hi = w - 1 - r;  // inclusive range of block centers
  const int y_lo = r, y_hi = h - 1 - r;

  std::vector<double> best_cost(static_cast<std::size_t>(w) * h, std::numeric_limits<double>::infinity());
  std::vector<int> best_d(best_cost.size(), 0);
  std::vector<double> colsum(static_cast<std::size_t>(w) * h, 0.0);

  for (int k = 0; k <= 2 * params.search_range; ++k) {
    // 0, -1, +1, -2, +2, ...: strict improvement keeps the earlier candidate.
    const int d = (k % 2 == 1) ? -(k + 1) / 2 : k / 2;
    // Block centers x with both [x-r, x+r] and [x-d-r, x-d+r] inside the image.
    const int cx_lo = std::max(x_lo, r + d);
    const int cx_hi = std::min(x_hi, w - 1 - r + d);
    if (cx_lo > cx_hi) continue;
    const int px_lo = cx_lo - r, px_hi = cx_hi + r;

    for (int y = y_lo; y <= y_hi; ++y) {
      double* cs = colsum.data() + static_cast<std::size_t>(y) * w;
      for (int x = px_lo; x <= px_hi; ++x) {
        double s = 0.0;
        for (int dy = -r; dy <= r; ++dy) s += std::abs(left.at(x, y + dy) - right.at(x - d, y + dy));
        cs[x] = s;
      }
      for (int x = cx_lo; x <= cx_hi; ++x) {
        double s = 0.0;
        for (int dx = -r; dx <= r; ++dx) s += cs[x + dx];
        const std::size_t i = static_cast<std::size_t>(y) * w + x;
        if (s < best_cost[i]) {
          best_cost[i] = s;
          best_d[i] = d;
        }
      }
    }
  }

  DisparityMap out{Raster(w, h), static_cast<double>(params.search_range)};
  for (int y = 0; y < h; ++y) {
    const int sy = std::clamp(y, y_lo, y_hi);
    for (int x = 0; x < w; ++x) {
      const int sx = std::clamp(x, x_lo, x_hi);
      out.values.at(x, y) = best_d[static_cast<std::size_t>(sy) * w + sx];
    }
  }
  return out;
}

DisparityMap load_disparity(const std::string& path, int expected_width, int expected_height) {
  FmapArray a = read_fmap(path);
  if (a.dims.size() != 3 || a.dims[0] != 1) {
    Fail(ErrorCode::kDimension, "dim mismatch: disparity file must have dims (1, H, W): " + path);
  }
  if (static_cast<int>(a.dims[1]) != expected_height || static_cast<int>(a.dims[2]) != expected_width) {
    Fail(ErrorCode::kDimension, "dim mismatch: disparity file " + path + " is " +
                                    std::to_string(a.dims[2]) + "x" + std::to_string(a.dims[1]) +
                                    ", expected " + std::to_string(expected_width) + "x" +
                                    std::to_string(expected_height));
  }
  DisparityMap out{Raster(expected_width, expected_height), 0.0};
  auto dst = out.values.data();
  double max_abs = 0.0;
  for (std::size_t i = 0; i < dst.size(); ++i) {
    dst[i] = a.data[i];
    max_abs = std::max(max_abs, std::abs(dst[i]));
  }
  out.search_range = std::ceil(max_abs);
  return out;
}

void save_disparity(const DisparityMap& map, const std::string& path) {
  FmapArray a;
  a.dims = {1u, static_cast<std::uint32_t>(map.height()), static_cast<std::uint32_t>(map.width())};
  a.data.reserve(map.values.size());
  for (double v : map.values.data()) a.data.push_back(static_cast<float>(v));
  write_fmap(a, path);
}

}  // namespace hdavca
