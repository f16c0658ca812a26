#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hdavca/features.hpp"

namespace hdavca {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct SvrParams {
  double c = 256.0;
  double gamma = 1.0 / 72.0;
  double epsilon = 0.1;
  double tolerance = 1e-3;
  long max_iterations = 1000000;
};

// f(x) = sum_i coef_i * exp(-gamma * |sv_i - x|^2) + bias
struct KernelExpansion {
  RowMatrix support_vectors;
  std::vector<double> coefficients;
  double bias = 0.0;
  double gamma = 1.0;

  double evaluate(std::span<const double> x) const;
};

// Full dual state of an epsilon-SVR solve. alpha has 2n entries: alpha[i]
// pairs with +1 (upper tube side) and alpha[n + i] with -1.
struct SvrSolution {
  KernelExpansion expansion;
  std::vector<double> alpha;
  std::vector<double> beta;  // alpha[i] - alpha[n + i]
  double objective = 0.0;   // 0.5 a'Qa + p'a
  double max_violation = 0.0;
  long iterations = 0;
};

double rbf_kernel(std::span<const double> a, std::span<const double> b, double gamma);

// SMO with maximal-violating-pair working-set selection on the standard
// 2n-variable epsilon-SVR dual. Inputs are used as given (no scaling).
SvrSolution solve_svr(const RowMatrix& x, std::span<const double> y, const SvrParams& params);

// Post-hoc KKT check of a dual state: max over violating pairs of
// (-y_i G_i) - (-y_j G_j).
double kkt_violation(const RowMatrix& x, std::span<const double> y, const SvrParams& params,
                     std::span<const double> alpha);

// Per-dimension min-max map onto [-1, 1] over the active dims. Constant and
// masked dims map to 0.
struct Scaler {
  std::vector<double> min;
  std::vector<double> max;
  FeatureMask mask = FeatureMask::all();

  static Scaler fit(const std::vector<FeatureVector>& xs, const FeatureMask& mask);
  std::array<double, kFeatureLength> apply(const std::array<double, kFeatureLength>& x) const;
};

struct ScaledSet {
  RowMatrix x;
  Scaler scaler;
};

ScaledSet scale_features(const std::vector<FeatureVector>& xs, const FeatureMask& mask);

struct SvrModel {
  FeatureMask mask = FeatureMask::all();
  Scaler scaler;
  SvrParams params;
  KernelExpansion expansion;
};

SvrModel svr_train(const std::vector<FeatureVector>& xs, std::span<const double> y,
                   const SvrParams& params, const FeatureMask& mask = FeatureMask::all());

double svr_predict(const SvrModel& model, const FeatureVector& x);
// Throws kDimension unless x has 72 entries.
double svr_predict(const SvrModel& model, std::span<const double> x);

struct GridSearchResult {
  double c = 0.0;
  double gamma = 0.0;
  double cv_mse = 0.0;
};

// k-fold search over C in 2^[c_lo, c_hi] and gamma in 2^[g_lo, g_hi] on
// already scaled inputs; picks the lowest mean squared error.
GridSearchResult grid_search(const RowMatrix& x, std::span<const double> y, const SvrParams& base,
                             std::uint64_t seed, int folds = 3, int c_lo = 0, int c_hi = 12,
                             int g_lo = -10, int g_hi = 2);

std::string model_to_json(const SvrModel& model);
SvrModel model_from_json(const std::string& text);
void save_model(const SvrModel& model, const std::string& path);
SvrModel load_model(const std::string& path);

}  // namespace hdavca
