#include <cmath>
#include <fstream>
#include <numeric>

#include "doctest.h"
#include "helpers.hpp"
#include "hdavca/error.hpp"
#include "hdavca/regression.hpp"

using namespace hdavca;

namespace {

struct Problem {
  RowMatrix x;
  std::vector<double> y;
};

Problem sin_problem(int n, int dims, std::uint64_t seed, double noise) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::normal_distribution<double> g(0.0, noise);
  Problem p{RowMatrix(n, dims), {}};
  for (int i = 0; i < n; ++i) {
    double r2 = 0;
    for (int d = 0; d < dims; ++d) {
      p.x(i, d) = u(rng);
      r2 += p.x(i, d) * p.x(i, d);
    }
    p.y.push_back(std::sin(std::sqrt(r2)) + g(rng));
  }
  return p;
}

std::vector<std::vector<double>> rows_of(const RowMatrix& m) {
  std::vector<std::vector<double>> out;
  for (Eigen::Index i = 0; i < m.rows(); ++i) out.emplace_back(m.row(i).data(), m.row(i).data() + m.cols());
  return out;
}

double expand(const KernelExpansion& e, std::span<const double> x) {
  double s = e.bias;
  for (std::size_t i = 0; i < e.coefficients.size(); ++i) {
    double d2 = 0;
    for (std::size_t t = 0; t < x.size(); ++t) {
      const double diff = e.support_vectors(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t)) - x[t];
      d2 += diff * diff;
    }
    s += e.coefficients[i] * std::exp(-e.gamma * d2);
  }
  return s;
}

std::vector<FeatureVector> feature_rows(int n, std::uint64_t seed, std::vector<double>& y) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 5.0);
  std::vector<FeatureVector> xs(n);
  y.clear();
  for (auto& v : xs) {
    for (int d : {0, 3, 65, 66, 71}) v.values[d] = u(rng);
    y.push_back(v.values[0] - 0.3 * v.values[65] + 0.1 * v.values[71] * v.values[3]);
  }
  return xs;
}

}  // namespace

TEST_SUITE("regression") {
  TEST_CASE("constant target is reproduced within the tube") {
    const auto p = sin_problem(30, 3, 1, 0.0);
    const std::vector<double> y(30, 2.5);
    SvrParams params;
    params.epsilon = 0.1;
    const auto sol = solve_svr(p.x, y, params);
    for (Eigen::Index i = 0; i < p.x.rows(); ++i) {
      CHECK(std::abs(sol.expansion.evaluate({p.x.row(i).data(), 3}) - 2.5) <= 0.1 + 1e-9);
    }
  }

  TEST_CASE("noisy sine fixture fits") {
    const auto p = sin_problem(200, 5, 2, 0.01);
    SvrParams params;
    params.c = 256;
    params.gamma = 0.2;
    params.epsilon = 0.01;
    const auto sol = solve_svr(p.x, p.y, params);
    std::vector<double> pred;
    for (Eigen::Index i = 0; i < p.x.rows(); ++i) pred.push_back(sol.expansion.evaluate({p.x.row(i).data(), 5}));
    CHECK(oracle::rmse(pred, p.y) < 0.1);
  }

  TEST_CASE("dual feasibility and KKT") {
    const auto p = sin_problem(60, 4, 3, 0.05);
    SvrParams params;
    params.c = 4;
    params.gamma = 0.5;
    params.epsilon = 0.02;
    const auto sol = solve_svr(p.x, p.y, params);
    double sum = 0;
    for (double b : sol.beta) {
      CHECK(std::abs(b) <= params.c + 1e-12);
      sum += b;
    }
    CHECK(std::abs(sum) < 1e-9);
    for (double a : sol.alpha) {
      CHECK(a >= 0.0);
      CHECK(a <= params.c);
    }
    CHECK(sol.max_violation < params.tolerance);
    CHECK(kkt_violation(p.x, p.y, params, sol.alpha) < params.tolerance);
    std::vector<double> flipped = sol.alpha;
    flipped[0] = params.c - flipped[0];
    flipped[p.y.size()] = params.c - flipped[p.y.size()];
    CHECK(kkt_violation(p.x, p.y, params, flipped) > params.tolerance);
  }

  TEST_CASE("dual objective matches the projected-gradient oracle") {
    for (std::uint64_t seed : {4, 5, 6}) {
      const auto p = sin_problem(15, 3, seed, 0.1);
      SvrParams params;
      params.c = 2;
      params.gamma = 0.7;
      params.epsilon = 0.05;
      params.tolerance = 1e-6;
      const auto sol = solve_svr(p.x, p.y, params);
      const auto ref = oracle::svr_dual_projected_gradient(rows_of(p.x), p.y, params.c, params.gamma,
                                                           params.epsilon);
      CHECK(std::abs(sol.objective - ref.objective) < 1e-3);
    }
  }

  TEST_CASE("scaling") {
    std::vector<FeatureVector> one(1);
    one[0].values.fill(3.0);
    const auto s1 = scale_features(one, FeatureMask::all());
    for (int d = 0; d < kFeatureLength; ++d) CHECK(s1.x(0, d) == 0.0);

    std::vector<FeatureVector> two(2);
    two[1].values[5] = 10.0;
    two[0].values[71] = 4.0;
    const auto s2 = scale_features(two, FeatureMask::all() & FeatureMask::of({Family::kDnss}));
    CHECK(s2.x(0, 5) == -1.0);
    CHECK(s2.x(1, 5) == 1.0);
    CHECK(s2.x(0, 71) == 0.0);

    std::vector<double> y;
    const auto xs = feature_rows(20, 7, y);
    const auto s = scale_features(xs, FeatureMask::all());
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const auto again = s.scaler.apply(xs[i].values);
      for (int d = 0; d < kFeatureLength; ++d) CHECK(again[d] == s.x(static_cast<Eigen::Index>(i), d));
    }
  }

  TEST_CASE("prediction equals a direct kernel expansion") {
    std::vector<double> y;
    const auto xs = feature_rows(40, 8, y);
    const auto model = svr_train(xs, y, SvrParams{});
    std::vector<double> yt;
    const auto held = feature_rows(5, 9, yt);
    for (const auto& v : held) {
      std::vector<double> scaled(kFeatureLength, 0.0);
      for (int d = 0; d < kFeatureLength; ++d) {
        const double lo = model.scaler.min[d], hi = model.scaler.max[d];
        if (hi > lo) scaled[d] = 2.0 * (v.values[d] - lo) / (hi - lo) - 1.0;
      }
      const double p = svr_predict(model, v);
      CHECK(std::abs(p - expand(model.expansion, scaled)) < 1e-9);
      CHECK(p == svr_predict(model, v));
    }
    CHECK_THROWS_WITH_AS(svr_predict(model, std::vector<double>(71, 0.0)), doctest::Contains("length mismatch"),
                         Error);
  }

  TEST_CASE("support vectors of a hard fit sit within the tube") {
    std::vector<double> y;
    const auto xs = feature_rows(25, 10, y);
    SvrParams params;
    params.c = 1e4;
    params.gamma = 0.5;
    params.epsilon = 0.05;
    const auto model = svr_train(xs, y, params);
    for (std::size_t i = 0; i < xs.size(); ++i) CHECK(std::abs(svr_predict(model, xs[i]) - y[i]) <= 0.05 + 2e-3);
  }

  TEST_CASE("model JSON round trip") {
    std::vector<double> y;
    const auto xs = feature_rows(30, 11, y);
    const auto model = svr_train(xs, y, SvrParams{}, FeatureMask::of({Family::kLocalSsim, Family::kDisparityRange}));
    const auto dir = testing::scratch_dir("model_rt");
    const auto path = (dir / "m.json").string();
    save_model(model, path);
    const auto back = load_model(path);
    CHECK(back.mask == model.mask);
    for (const auto& v : xs) CHECK(std::abs(svr_predict(back, v) - svr_predict(model, v)) < 1e-12);

    std::ifstream in(path);
    std::string text((std::istreambuf_iterator<char>(in)), {});
    CHECK_THROWS_AS(model_from_json(text.substr(0, text.size() / 2)), Error);
    auto bumped = text;
    const auto pos = bumped.find("\"version\": 1");
    REQUIRE(pos != std::string::npos);
    bumped.replace(pos, 12, "\"version\": 9");
    CHECK_THROWS_WITH_AS(model_from_json(bumped), "model version mismatch", Error);
  }

  TEST_CASE("no support vectors predicts the bias") {
    SvrModel m;
    m.scaler.min.assign(kFeatureLength, 0.0);
    m.scaler.max.assign(kFeatureLength, 0.0);
    m.expansion.bias = 1.25;
    m.expansion.support_vectors = RowMatrix(0, kFeatureLength);
    CHECK(svr_predict(m, FeatureVector{}) == 1.25);
    const auto back = model_from_json(model_to_json(m));
    CHECK(svr_predict(back, FeatureVector{}) == 1.25);
  }

  TEST_CASE("training order does not change predictions") {
    std::vector<double> y;
    const auto xs = feature_rows(40, 12, y);
    std::vector<std::size_t> order(xs.size());
    std::iota(order.begin(), order.end(), 0);
    std::reverse(order.begin(), order.end());
    std::swap(order[3], order[17]);
    std::vector<FeatureVector> px;
    std::vector<double> py;
    for (auto i : order) {
      px.push_back(xs[i]);
      py.push_back(y[i]);
    }
    SvrParams params;
    params.tolerance = 1e-8;
    const auto a = svr_train(xs, y, params), b = svr_train(px, py, params);
    for (const auto& v : xs) CHECK(svr_predict(a, v) == doctest::Approx(svr_predict(b, v)).epsilon(1e-6));
  }

  TEST_CASE("identical inputs with different labels still train") {
    std::vector<FeatureVector> xs(6);
    const std::vector<double> y{1, 2, 3, 4, 5, 6};
    const auto m = svr_train(xs, y, SvrParams{});
    CHECK(std::isfinite(svr_predict(m, xs[0])));
  }

  TEST_CASE("grid search picks a point on the grid") {
    const auto p = sin_problem(40, 2, 13, 0.01);
    const auto r = grid_search(p.x, p.y, SvrParams{}, 1, 3, 0, 4, -2, 1);
    CHECK(std::log2(r.c) == doctest::Approx(std::round(std::log2(r.c))));
    CHECK(r.c >= 1);
    CHECK(r.c <= 16);
    CHECK(r.gamma >= 0.25);
    CHECK(r.gamma <= 2);
    CHECK(r.cv_mse >= 0);
  }
}
