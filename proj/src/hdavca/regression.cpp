#include "hdavca/regression.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"

#include "hdavca/error.hpp"
#include "hdavca/rng.hpp"

namespace hdavca {

double rbf_kernel(std::span<const double> a, std::span<const double> b, double gamma) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::exp(-gamma * s);
}

double KernelExpansion::evaluate(std::span<const double> x) const {
  Require(support_vectors.rows() == 0 || static_cast<std::size_t>(support_vectors.cols()) == x.size(),
          ErrorCode::kDimension, "input length does not match support vectors");
  double f = bias;
  for (Eigen::Index i = 0; i < support_vectors.rows(); ++i) {
    const std::span<const double> sv(support_vectors.row(i).data(), support_vectors.cols());
    f += coefficients[i] * rbf_kernel(sv, x, gamma);
  }
  return f;
}

namespace {

constexpr double kTau = 1e-12;

RowMatrix kernel_matrix(const RowMatrix& x, double gamma) {
  const Eigen::Index n = x.rows();
  RowMatrix k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const std::span<const double> xi(x.row(i).data(), x.cols());
    k(i, i) = 1.0;
    for (Eigen::Index j = 0; j < i; ++j) {
      const std::span<const double> xj(x.row(j).data(), x.cols());
      k(i, j) = k(j, i) = rbf_kernel(xi, xj, gamma);
    }
  }
  return k;
}

// Dual gradient G = Q a + p for the 2n-variable problem.
struct Dual {
  const RowMatrix& k;
  std::span<const double> target;
  double epsilon;
  std::size_t n;

  int sign(std::size_t t) const { return t < n ? 1 : -1; }
  double p(std::size_t t) const { return t < n ? epsilon - target[t] : epsilon + target[t - n]; }
  double q(std::size_t s, std::size_t t) const { return sign(s) * sign(t) * k(s % n, t % n); }
};

std::vector<double> gradient(const Dual& dual, std::span<const double> alpha) {
  const std::size_t m = 2 * dual.n;
  std::vector<double> g(m);
  for (std::size_t s = 0; s < m; ++s) {
    double acc = dual.p(s);
    for (std::size_t t = 0; t < m; ++t) {
      if (alpha[t] != 0.0) acc += dual.q(s, t) * alpha[t];
    }
    g[s] = acc;
  }
  return g;
}

struct WorkingPair {
  std::ptrdiff_t i = -1;
  std::ptrdiff_t j = -1;
  double violation = 0.0;
};

WorkingPair select_pair(const Dual& dual, std::span<const double> alpha, std::span<const double> g,
                        double c) {
  double g_max = -std::numeric_limits<double>::infinity();   // max -y G over I_up
  double g_max2 = -std::numeric_limits<double>::infinity();  // max  y G over I_low
  WorkingPair wp;
  for (std::size_t t = 0; t < 2 * dual.n; ++t) {
    const int y = dual.sign(t);
    const bool below_upper = alpha[t] < c;
    const bool above_lower = alpha[t] > 0;
    const bool in_up = y == 1 ? below_upper : above_lower;
    const bool in_low = y == 1 ? above_lower : below_upper;
    if (in_up && -y * g[t] > g_max) {
      g_max = -y * g[t];
      wp.i = static_cast<std::ptrdiff_t>(t);
    }
    if (in_low && y * g[t] > g_max2) {
      g_max2 = y * g[t];
      wp.j = static_cast<std::ptrdiff_t>(t);
    }
  }
  wp.violation = (wp.i < 0 || wp.j < 0) ? 0.0 : g_max + g_max2;
  return wp;
}

double compute_bias(const Dual& dual, std::span<const double> alpha, std::span<const double> g, double c) {
  double ub = std::numeric_limits<double>::infinity();
  double lb = -std::numeric_limits<double>::infinity();
  double sum_free = 0.0;
  std::size_t n_free = 0;
  for (std::size_t t = 0; t < 2 * dual.n; ++t) {
    const int y = dual.sign(t);
    const double yg = y * g[t];
    if (alpha[t] >= c) {
      if (y == -1) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else if (alpha[t] <= 0) {
      if (y == 1) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else {
      ++n_free;
      sum_free += yg;
    }
  }
  const double rho = n_free > 0 ? sum_free / static_cast<double>(n_free) : (ub + lb) / 2.0;
  return -rho;
}

}  // namespace

SvrSolution solve_svr(const RowMatrix& x, std::span<const double> y, const SvrParams& params) {
  const std::size_t n = static_cast<std::size_t>(x.rows());
  Require(n >= 2 && y.size() == n, ErrorCode::kInvalidArgument,
          "SVR training needs at least two samples with one label each");
  Require(params.c > 0 && params.gamma > 0 && params.epsilon >= 0, ErrorCode::kInvalidArgument,
          "SVR needs C > 0, gamma > 0, epsilon >= 0");
  for (double v : y) Require(std::isfinite(v), ErrorCode::kInvalidArgument, "labels must be finite");

  const RowMatrix k = kernel_matrix(x, params.gamma);
  const Dual dual{k, y, params.epsilon, n};
  const std::size_t m = 2 * n;
  const double c = params.c;

  std::vector<double> alpha(m, 0.0);
  std::vector<double> g(m);
  for (std::size_t t = 0; t < m; ++t) g[t] = dual.p(t);

  SvrSolution sol;
  long iter = 0;
  for (; iter < params.max_iterations; ++iter) {
    const WorkingPair wp = select_pair(dual, alpha, g, c);
    if (wp.i < 0 || wp.j < 0 || wp.violation < params.tolerance) break;
    const std::size_t i = static_cast<std::size_t>(wp.i);
    const std::size_t j = static_cast<std::size_t>(wp.j);
    const double qii = k(i % n, i % n);
    const double qjj = k(j % n, j % n);
    const double qij = dual.q(i, j);
    const double old_i = alpha[i];
    const double old_j = alpha[j];

    if (dual.sign(i) != dual.sign(j)) {
      double quad = qii + qjj + 2 * qij;
      if (quad <= 0) quad = kTau;
      const double delta = (-g[i] - g[j]) / quad;
      const double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0) {
        if (alpha[j] < 0) { alpha[j] = 0; alpha[i] = diff; }
      } else {
        if (alpha[i] < 0) { alpha[i] = 0; alpha[j] = -diff; }
      }
      if (diff > 0) {
        if (alpha[i] > c) { alpha[i] = c; alpha[j] = c - diff; }
      } else {
        if (alpha[j] > c) { alpha[j] = c; alpha[i] = c + diff; }
      }
    } else {
      double quad = qii + qjj - 2 * qij;
      if (quad <= 0) quad = kTau;
      const double delta = (g[i] - g[j]) / quad;
      const double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > c) {
        if (alpha[i] > c) { alpha[i] = c; alpha[j] = sum - c; }
      } else {
        if (alpha[j] < 0) { alpha[j] = 0; alpha[i] = sum; }
      }
      if (sum > c) {
        if (alpha[j] > c) { alpha[j] = c; alpha[i] = sum - c; }
      } else {
        if (alpha[i] < 0) { alpha[i] = 0; alpha[j] = sum; }
      }
    }

    const double d_i = alpha[i] - old_i;
    const double d_j = alpha[j] - old_j;
    for (std::size_t t = 0; t < m; ++t) g[t] += dual.q(i, t) * d_i + dual.q(j, t) * d_j;
  }

  sol.iterations = iter;
  sol.max_violation = select_pair(dual, alpha, g, c).violation;
  double obj = 0.0;
  for (std::size_t t = 0; t < m; ++t) obj += alpha[t] * (g[t] + dual.p(t));
  sol.objective = 0.5 * obj;

  sol.beta.resize(n);
  std::vector<Eigen::Index> support;
  for (std::size_t i = 0; i < n; ++i) {
    sol.beta[i] = alpha[i] - alpha[n + i];
    if (sol.beta[i] != 0.0) support.push_back(static_cast<Eigen::Index>(i));
  }
  sol.expansion.gamma = params.gamma;
  sol.expansion.bias = compute_bias(dual, alpha, g, c);
  sol.expansion.support_vectors.resize(static_cast<Eigen::Index>(support.size()), x.cols());
  for (std::size_t s = 0; s < support.size(); ++s) {
    sol.expansion.support_vectors.row(static_cast<Eigen::Index>(s)) = x.row(support[s]);
    sol.expansion.coefficients.push_back(sol.beta[support[s]]);
  }
  sol.alpha = std::move(alpha);
  return sol;
}

double kkt_violation(const RowMatrix& x, std::span<const double> y, const SvrParams& params,
                     std::span<const double> alpha) {
  const std::size_t n = static_cast<std::size_t>(x.rows());
  Require(alpha.size() == 2 * n, ErrorCode::kDimension, "dual vector must have 2n entries");
  const RowMatrix k = kernel_matrix(x, params.gamma);
  const Dual dual{k, y, params.epsilon, n};
  const auto g = gradient(dual, alpha);
  return select_pair(dual, alpha, g, params.c).violation;
}

Scaler Scaler::fit(const std::vector<FeatureVector>& xs, const FeatureMask& mask) {
  Require(!xs.empty(), ErrorCode::kInvalidArgument, "cannot fit a scaler on an empty set");
  Scaler s;
  s.mask = mask;
  s.min.assign(kFeatureLength, 0.0);
  s.max.assign(kFeatureLength, 0.0);
  for (int d = 0; d < kFeatureLength; ++d) {
    if (!mask.active(d)) continue;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& v : xs) {
      lo = std::min(lo, v.values[d]);
      hi = std::max(hi, v.values[d]);
    }
    s.min[d] = lo;
    s.max[d] = hi;
  }
  return s;
}

std::array<double, kFeatureLength> Scaler::apply(const std::array<double, kFeatureLength>& x) const {
  std::array<double, kFeatureLength> out{};
  for (int d = 0; d < kFeatureLength; ++d) {
    if (!mask.active(d) || !(max[d] > min[d])) continue;
    out[d] = -1.0 + 2.0 * (x[d] - min[d]) / (max[d] - min[d]);
  }
  return out;
}

ScaledSet scale_features(const std::vector<FeatureVector>& xs, const FeatureMask& mask) {
  ScaledSet out{RowMatrix(static_cast<Eigen::Index>(xs.size()), kFeatureLength), Scaler::fit(xs, mask)};
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const auto row = out.scaler.apply(xs[i].values);
    for (int d = 0; d < kFeatureLength; ++d) out.x(static_cast<Eigen::Index>(i), d) = row[d];
  }
  return out;
}

SvrModel svr_train(const std::vector<FeatureVector>& xs, std::span<const double> y,
                   const SvrParams& params, const FeatureMask& mask) {
  Require(xs.size() == y.size(), ErrorCode::kInvalidArgument, "feature and label counts differ");
  ScaledSet scaled = scale_features(xs, mask);
  SvrModel model;
  model.mask = mask;
  model.scaler = std::move(scaled.scaler);
  model.params = params;
  model.expansion = solve_svr(scaled.x, y, params).expansion;
  return model;
}

double svr_predict(const SvrModel& model, const FeatureVector& x) {
  const auto scaled = model.scaler.apply(x.values);
  return model.expansion.evaluate(scaled);
}

double svr_predict(const SvrModel& model, std::span<const double> x) {
  Require(x.size() == kFeatureLength, ErrorCode::kDimension, "length mismatch: expected 72 features");
  FeatureVector v;
  std::copy(x.begin(), x.end(), v.values.begin());
  return svr_predict(model, v);
}

GridSearchResult grid_search(const RowMatrix& x, std::span<const double> y, const SvrParams& base,
                             std::uint64_t seed, int folds, int c_lo, int c_hi, int g_lo, int g_hi) {
  const std::size_t n = static_cast<std::size_t>(x.rows());
  Require(folds >= 2 && n >= static_cast<std::size_t>(2 * folds), ErrorCode::kInvalidArgument,
          "grid search needs at least two samples per fold");
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  auto rng = make_rng(seed, 0x67726964ull);
  shuffle_in_place(order, rng);
  std::vector<int> fold_of(n);
  for (std::size_t i = 0; i < n; ++i) fold_of[order[i]] = static_cast<int>(i % folds);

  GridSearchResult best{0, 0, std::numeric_limits<double>::infinity()};
  for (int ce = c_lo; ce <= c_hi; ++ce) {
    for (int ge = g_lo; ge <= g_hi; ++ge) {
      SvrParams p = base;
      p.c = std::ldexp(1.0, ce);
      p.gamma = std::ldexp(1.0, ge);
      double sse = 0.0;
      for (int f = 0; f < folds; ++f) {
        std::vector<Eigen::Index> tr, te;
        for (std::size_t i = 0; i < n; ++i) (fold_of[i] == f ? te : tr).push_back(static_cast<Eigen::Index>(i));
        RowMatrix xtr(static_cast<Eigen::Index>(tr.size()), x.cols());
        std::vector<double> ytr;
        for (std::size_t r = 0; r < tr.size(); ++r) {
          xtr.row(static_cast<Eigen::Index>(r)) = x.row(tr[r]);
          ytr.push_back(y[tr[r]]);
        }
        const auto sol = solve_svr(xtr, ytr, p);
        for (auto i : te) {
          const double e = sol.expansion.evaluate({x.row(i).data(), static_cast<std::size_t>(x.cols())}) - y[i];
          sse += e * e;
        }
      }
      const double mse = sse / static_cast<double>(n);
      if (mse < best.cv_mse) best = {p.c, p.gamma, mse};
    }
  }
  return best;
}

namespace {

constexpr int kModelVersion = 1;
constexpr const char* kModelFormat = "hdavca-svr";

}  // namespace

std::string model_to_json(const SvrModel& model) {
  using nlohmann::json;
  json j;
  j["format"] = kModelFormat;
  j["version"] = kModelVersion;
  j["feature_length"] = kFeatureLength;
  j["feature_mask"] = model.mask.to_string();
  j["params"] = {{"c", model.params.c},
                 {"gamma", model.params.gamma},
                 {"epsilon", model.params.epsilon},
                 {"tolerance", model.params.tolerance},
                 {"max_iterations", model.params.max_iterations}};
  j["scaler"] = {{"min", model.scaler.min}, {"max", model.scaler.max}};
  j["kernel"] = {{"type", "rbf"}, {"gamma", model.expansion.gamma}};
  j["bias"] = model.expansion.bias;
  j["coefficients"] = model.expansion.coefficients;
  json svs = json::array();
  for (Eigen::Index i = 0; i < model.expansion.support_vectors.rows(); ++i) {
    const auto row = model.expansion.support_vectors.row(i);
    svs.push_back(std::vector<double>(row.data(), row.data() + row.size()));
  }
  j["support_vectors"] = std::move(svs);
  return j.dump(1);
}

SvrModel model_from_json(const std::string& text) {
  using nlohmann::json;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception&) {
    Fail(ErrorCode::kFormat, "malformed model file");
  }
  try {
    if (j.at("format").get<std::string>() != kModelFormat) Fail(ErrorCode::kFormat, "malformed model file");
    if (j.at("version").get<int>() != kModelVersion) Fail(ErrorCode::kFormat, "model version mismatch");
    if (j.at("feature_length").get<int>() != kFeatureLength) Fail(ErrorCode::kFormat, "model feature length mismatch");
    SvrModel m;
    m.mask = FeatureMask::parse(j.at("feature_mask").get<std::string>());
    const auto& p = j.at("params");
    m.params.c = p.at("c").get<double>();
    m.params.gamma = p.at("gamma").get<double>();
    m.params.epsilon = p.at("epsilon").get<double>();
    m.params.tolerance = p.at("tolerance").get<double>();
    m.params.max_iterations = p.at("max_iterations").get<long>();
    m.scaler.mask = m.mask;
    m.scaler.min = j.at("scaler").at("min").get<std::vector<double>>();
    m.scaler.max = j.at("scaler").at("max").get<std::vector<double>>();
    if (m.scaler.min.size() != kFeatureLength || m.scaler.max.size() != kFeatureLength) {
      Fail(ErrorCode::kFormat, "malformed model file: scaler length");
    }
    for (int d = 0; d < kFeatureLength; ++d) {
      if (m.scaler.min[d] > m.scaler.max[d]) Fail(ErrorCode::kFormat, "malformed model file: scaler min > max");
    }
    m.expansion.gamma = j.at("kernel").at("gamma").get<double>();
    m.expansion.bias = j.at("bias").get<double>();
    m.expansion.coefficients = j.at("coefficients").get<std::vector<double>>();
    const auto svs = j.at("support_vectors").get<std::vector<std::vector<double>>>();
    if (svs.size() != m.expansion.coefficients.size()) {
      Fail(ErrorCode::kFormat, "malformed model file: support vector count");
    }
    m.expansion.support_vectors.resize(static_cast<Eigen::Index>(svs.size()), kFeatureLength);
    for (std::size_t i = 0; i < svs.size(); ++i) {
      if (svs[i].size() != kFeatureLength) Fail(ErrorCode::kFormat, "malformed model file: support vector length");
      for (int d = 0; d < kFeatureLength; ++d) m.expansion.support_vectors(static_cast<Eigen::Index>(i), d) = svs[i][d];
    }
    return m;
  } catch (const json::exception&) {
    Fail(ErrorCode::kFormat, "malformed model file");
  }
}

void save_model(const SvrModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) Fail(ErrorCode::kIo, "cannot write file: " + path);
  out << model_to_json(model) << '\n';
  if (!out) Fail(ErrorCode::kIo, "cannot write file: " + path);
}

SvrModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) Fail(ErrorCode::kIo, "unreadable file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return model_from_json(ss.str());
}

}  // namespace hdavca
