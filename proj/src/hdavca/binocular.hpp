#pragma once

#include <array>
#include <utility>

#include "hdavca/disparity.hpp"
#include "hdavca/image.hpp"

namespace hdavca {

// Comfort zone bounds in pixels and the weights of the minimum-disparity
// (alpha) and maximum-disparity (beta) terms of the range feature.
struct ComfortZone {
  double d_min = -79.55;
  double d_max = 79.55;
  double alpha = 0.6;
  double beta = 0.4;

  // Throws kInvalidArgument unless d_min < d_max, alpha, beta >= 0 and
  // alpha + beta == 1 (to 1e-9).
  void validate() const;
};

enum class RankMode {
  kJndSteps,         // neighbors graded by whole JND steps from the center
  kIndependentBins,  // every pixel binned by its own |d|
};

enum class TilingMode { kPartition, kSliding };

struct BinocularParams {
  ComfortZone zone;
  double did_weight = 0.5;
  RankMode rank_mode = RankMode::kJndSteps;
  TilingMode tiling = TilingMode::kPartition;
  // Rescale disparities by 255 / search_range before the intensity feature.
  bool normalize_disparity = false;
};

struct PerceptualAlternation {
  double a_l = 0.0;
  double a_r = 0.0;
  double r_e = 1.0;
};

struct BinocularFeatures {
  double f_dr = 0.0;
  PerceptualAlternation f_pa;
  double did_m = 0.0;
  double did_v = 0.0;

  std::array<double, 6> as_array() const {
    return {f_dr, f_pa.a_l, f_pa.a_r, f_pa.r_e, did_m, did_v};
  }
};

// Row-major 3x3 patch.
using Patch3 = std::array<double, 9>;
using RankPatch = std::array<int, 9>;

struct PatchGradients {
  double g_h = 0.0;
  double g_v = 0.0;
  double g_d = 0.0;
};

inline constexpr double kRatioGuard = 1e-6;

double disparity_range_feature(const DisparityMap& disparity, const ComfortZone& zone);

PerceptualAlternation perceptual_alternation_feature(const StereoPair& pair,
                                                     const DisparityMap& disparity);

// JNDD bin (1..4) of a disparity magnitude and that bin's perceptible step.
int jndd_bin(double disparity);
double jndd_threshold(int bin);

RankPatch jndd_rank(const Patch3& patch, RankMode mode = RankMode::kJndSteps);

PatchGradients patch_gradients(const Patch3& patch);

// (m, v): branch-weighted mean and variance of per-patch gradient magnitudes
// over the ranked and raw disparity patches.
std::pair<double, double> disparity_intensity_feature(const DisparityMap& disparity, double weight,
                                                      RankMode mode = RankMode::kJndSteps,
                                                      TilingMode tiling = TilingMode::kPartition);

BinocularFeatures binocular_features(const StereoPair& pair, const DisparityMap& disparity,
                                     const BinocularParams& params = {});

}  // namespace hdavca
