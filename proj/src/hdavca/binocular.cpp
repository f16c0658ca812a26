#include "hdavca/binocular.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>
#include <vector>

#include "hdavca/error.hpp"

namespace hdavca {

void ComfortZone::validate() const {
  Require(d_min < d_max, ErrorCode::kInvalidArgument, "comfort zone needs d_min < d_max");
  Require(alpha >= 0 && beta >= 0, ErrorCode::kInvalidArgument, "comfort zone weights must be >= 0");
  Require(std::abs(alpha + beta - 1.0) <= 1e-9, ErrorCode::kInvalidArgument,
          "comfort zone weights must satisfy alpha + beta = 1");
}

namespace {

double guarded(double x) {
  const double mag = std::max(std::abs(x), kRatioGuard);
  return x < 0 ? -mag : mag;
}

}  // namespace

double disparity_range_feature(const DisparityMap& disparity, const ComfortZone& zone) {
  Require(!disparity.values.empty(), ErrorCode::kInvalidArgument, "empty disparity map");
  const auto [lo_it, hi_it] = std::minmax_element(disparity.values.data().begin(),
                                                  disparity.values.data().end());
  const double d_l = *lo_it;
  const double d_u = *hi_it;
  return zone.alpha * (zone.d_min - d_l) / guarded(d_l) +
         zone.beta * (zone.d_max - d_u) / guarded(d_u);
}

PerceptualAlternation perceptual_alternation_feature(const StereoPair& pair,
                                                     const DisparityMap& disparity) {
  const int m = disparity.width();
  const int n = disparity.height();
  Require(m >= 4 && n >= 1, ErrorCode::kDimension, "perceptual alternation needs width >= 4");
  Require(pair.width() == m && pair.height() == n, ErrorCode::kDimension,
          "disparity map and stereo pair differ in size");
  const Raster& d = disparity.values;

  auto column_mean = [&](int first, int count) {
    double s = 0.0;
    for (int y = 0; y < n; ++y) {
      for (int x = first; x < first + count; ++x) s += d.at(x, y);
    }
    return s / (static_cast<double>(count) * n);
  };
  const double b_l = column_mean(0, 1);
  const double b_r = column_mean(m - 1, 1);
  const int max_width = std::max(1, m / 4);
  const int w_l = std::clamp(static_cast<int>(std::lround(std::abs(b_l))), 1, max_width);
  const int w_r = std::clamp(static_cast<int>(std::lround(std::abs(b_r))), 1, max_width);

  auto energy = [](const GrayImage& img) {
    double mean = 0.0;
    for (double v : img.data()) mean += v;
    mean /= static_cast<double>(img.size());
    double e = 0.0;
    for (double v : img.data()) e += (v - mean) * (v - mean);
    return e / static_cast<double>(img.size());
  };

  PerceptualAlternation out;
  out.a_l = column_mean(0, w_l);
  out.a_r = column_mean(m - w_r, w_r);
  out.r_e = std::max(energy(pair.left), kRatioGuard) / std::max(energy(pair.right), kRatioGuard);
  return out;
}

int jndd_bin(double disparity) {
  const double a = std::abs(disparity);
  if (a < 64) return 1;
  if (a < 128) return 2;
  if (a < 192) return 3;
  return 4;
}

double jndd_threshold(int bin) {
  static constexpr double kThresholds[4] = {21.0, 19.0, 18.0, 20.0};
  Require(bin >= 1 && bin <= 4, ErrorCode::kInvalidArgument, "JNDD bin out of range");
  return kThresholds[bin - 1];
}

RankPatch jndd_rank(const Patch3& patch, RankMode mode) {
  RankPatch ranks{};
  if (mode == RankMode::kIndependentBins) {
    for (int i = 0; i < 9; ++i) ranks[i] = jndd_bin(patch[i]);
    return ranks;
  }
  const double center = patch[4];
  const int bin = jndd_bin(center);
  const double step = jndd_threshold(bin);
  for (int i = 0; i < 9; ++i) {
    // Truncation keeps sub-JND differences of either sign on the center level.
    ranks[i] = bin + static_cast<int>(std::trunc((patch[i] - center) / step));
  }
  ranks[4] = bin;
  return ranks;
}

PatchGradients patch_gradients(const Patch3& p) {
  auto at = [&p](int r, int c) { return p[r * 3 + c]; };
  double h = 0.0, v = 0.0, d1 = 0.0, d2 = 0.0;
  for (int r = 0; r < 3; ++r) {
    for (int c = 1; c < 3; ++c) {
      const double diff = at(r, c) - at(r, c - 1);
      h += diff * diff;
    }
  }
  for (int r = 1; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) {
      const double diff = at(r, c) - at(r - 1, c);
      v += diff * diff;
    }
  }
  for (int r = 1; r < 3; ++r) {
    for (int c = 1; c < 3; ++c) {
      const double diff = at(r, c) - at(r - 1, c - 1);
      d1 += diff * diff;
    }
  }
  for (int r = 0; r < 2; ++r) {
    for (int c = 1; c < 3; ++c) {
      const double diff = at(r, c) - at(r + 1, c - 1);
      d2 += diff * diff;
    }
  }
  return {std::sqrt(h / 6.0), std::sqrt(v / 6.0), std::sqrt(d1 / 4.0) + std::sqrt(d2 / 4.0)};
}

namespace {

double magnitude(const PatchGradients& g) {
  return std::sqrt(g.g_h * g.g_h + g.g_v * g.g_v + g.g_d * g.g_d);
}

std::pair<double, double> mean_var(const std::vector<double>& xs) {
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  return {mean, var / static_cast<double>(xs.size())};
}

}  // namespace

std::pair<double, double> disparity_intensity_feature(const DisparityMap& disparity, double weight,
                                                      RankMode mode, TilingMode tiling) {
  const Raster& d = disparity.values;
  Require(d.width() >= 3 && d.height() >= 3, ErrorCode::kDimension,
          "disparity map smaller than 3x3");
  Require(weight >= 0.0 && weight <= 1.0, ErrorCode::kInvalidArgument,
          "branch weight must lie in [0, 1]");
  const int stride = tiling == TilingMode::kPartition ? 3 : 1;
  std::vector<double> ranked, raw;
  for (int y = 0; y + 3 <= d.height(); y += stride) {
    for (int x = 0; x + 3 <= d.width(); x += stride) {
      Patch3 patch;
      for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) patch[r * 3 + c] = d.at(x + c, y + r);
      }
      const RankPatch ranks = jndd_rank(patch, mode);
      Patch3 rank_values;
      std::transform(ranks.begin(), ranks.end(), rank_values.begin(),
                     [](int v) { return static_cast<double>(v); });
      ranked.push_back(magnitude(patch_gradients(rank_values)));
      raw.push_back(magnitude(patch_gradients(patch)));
    }
  }
  const auto [m_rank, v_rank] = mean_var(ranked);
  const auto [m_non, v_non] = mean_var(raw);
  return {weight * m_rank + (1 - weight) * m_non, weight * v_rank + (1 - weight) * v_non};
}

BinocularFeatures binocular_features(const StereoPair& pair, const DisparityMap& disparity,
                                     const BinocularParams& params) {
  params.zone.validate();
  BinocularFeatures out;
  out.f_dr = disparity_range_feature(disparity, params.zone);
  out.f_pa = perceptual_alternation_feature(pair, disparity);
  if (params.normalize_disparity && disparity.search_range > 0) {
    DisparityMap scaled = disparity;
    const double s = 255.0 / disparity.search_range;
    for (double& v : scaled.values.data()) v *= s;
    std::tie(out.did_m, out.did_v) =
        disparity_intensity_feature(scaled, params.did_weight, params.rank_mode, params.tiling);
  } else {
    std::tie(out.did_m, out.did_v) =
        disparity_intensity_feature(disparity, params.did_weight, params.rank_mode, params.tiling);
  }
  return out;
}

}  // namespace hdavca
