#pragma once

#include <array>
#include <span>
#include <utility>

#include "hdavca/image.hpp"

namespace hdavca {

enum class Orientation { kH = 0, kV = 1, kD1 = 2, kD2 = 3 };

inline constexpr int kDnssScales = 2;
inline constexpr int kDnssOrientations = 4;
inline constexpr int kDnssLength = 64;

struct AggdParams {
  double eta = 0.0;
  double lambda = 0.0;
  double sigma_l2 = 0.0;
  double sigma_r2 = 0.0;
};

// Substituted for fits on degenerate (all-zero or too small) sample sets.
inline constexpr AggdParams kDegenerateAggd{0.0, 10.0, 0.0, 0.0};

// Layout: index = ((scale * 4 + orientation) * 2 + map) * 4 + param, where
// map 0 is the summation map, map 1 the difference map and param runs over
// (eta, lambda, sigma_l2, sigma_r2).
struct DnssFeature {
  std::array<double, kDnssLength> values{};
};

struct DnssParams {
  int zca_patch = 8;
  double zca_epsilon = 1e-5;
  double mscn_c = 1.0;
};

constexpr int dnss_index(int scale, Orientation o, int map, int param) {
  return ((scale * kDnssOrientations + static_cast<int>(o)) * 2 + map) * 4 + param;
}

// (left + right, left - right), no clipping.
std::pair<RealMap, RealMap> sum_diff_maps(const StereoPair& pair);

// Patch ZCA: all overlapping patch x patch windows are centered, one whitening
// matrix is estimated from their pooled covariance, and the whitened value of
// each window's center pixel is written back. Borders replicate.
RealMap zca_whiten(const RealMap& map, int patch = 8, double epsilon = 1e-5);

// Mean-subtracted contrast-normalized coefficients with a 7x7 Gaussian
// (sigma 7/6) and replicated borders.
RealMap mscn(const RealMap& map, double c = 1.0);

// Neighbor products on the (h-1) x (w-1) region where all four orientations
// are defined: H (0,+1), V (+1,0), D1 (+1,+1), D2 (+1,-1).
RealMap paired_products(const RealMap& map, Orientation orientation);

// Moment-matching AGGD fit; throws kDegenerate ("degenerate sample set") for
// fewer than 64 samples or an all-zero set.
AggdParams fit_aggd(std::span<const double> samples);

// Shape function rho(lambda) = Gamma(2/l)^2 / (Gamma(1/l) Gamma(3/l)).
double aggd_rho(double lambda);

DnssFeature dnss_feature(const StereoPair& pair, const DnssParams& params = {});

}  // namespace hdavca
