#include <atomic>
#include <cmath>
#include <cstdlib>
#include <set>

#include "doctest.h"
#include "datasets.hpp"
#include "helpers.hpp"
#include "hdavca/error.hpp"
#include "hdavca/eval.hpp"

using namespace hdavca;

namespace {

std::vector<double> random_vec(std::size_t n, std::uint64_t seed, bool ties = false) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  std::vector<double> v(n);
  for (auto& e : v) e = ties ? std::round(u(rng)) : u(rng);
  return v;
}

}  // namespace

TEST_SUITE("eval") {
  TEST_CASE("metric examples") {
    const std::vector<double> a{1, 2, 3}, b{2, 4, 7};
    CHECK(plcc(a, b) == doctest::Approx(0.9934).epsilon(1e-4));
    CHECK(plcc(a, a) == doctest::Approx(1.0));
    CHECK(plcc(a, std::vector<double>{-1, -2, -3}) == doctest::Approx(-1.0));
    CHECK(rmse(std::vector<double>{0, 0}, std::vector<double>{3, 4}) == doctest::Approx(3.5355).epsilon(1e-4));
    CHECK(rmse(a, a) == 0.0);
    CHECK(rmse(a, std::vector<double>{2, 3, 4}) == doctest::Approx(1.0));
    CHECK(krcc(a, b) == doctest::Approx(1.0));
    CHECK(krcc(a, std::vector<double>{3, 2, 1}) == doctest::Approx(-1.0));
    const std::vector<double> p{1, 2, 2, 4}, m{1, 3, 2, 4};
    CHECK(srcc(p, m) == doctest::Approx(oracle::spearman(p, m)).epsilon(1e-12));
    CHECK(srcc(a, std::vector<double>{std::exp(1.0), std::exp(2.0), std::exp(3.0)}) == doctest::Approx(1.0));
  }

  TEST_CASE("metric errors") {
    const std::vector<double> c{2, 2, 2}, a{1, 2, 3};
    CHECK_THROWS_WITH_AS(plcc(c, a), "constant input", Error);
    CHECK_THROWS_WITH_AS(srcc(c, a), "constant ranks", Error);
    CHECK_THROWS_AS(plcc(a, std::vector<double>{1, 2}), Error);
    CHECK_THROWS_AS(rmse(std::vector<double>{}, std::vector<double>{}), Error);
    CHECK_THROWS_AS(krcc(std::vector<double>{1}, std::vector<double>{1}), Error);
  }

  TEST_CASE("metrics agree with brute force on random vectors") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const bool ties = seed % 2 == 1;
      const auto a = random_vec(50, seed, ties), b = random_vec(50, seed + 100, ties);
      CHECK(std::abs(plcc(a, b) - oracle::pearson(a, b)) < 1e-9);
      CHECK(std::abs(srcc(a, b) - oracle::spearman(a, b)) < 1e-9);
      CHECK(std::abs(krcc(a, b) - oracle::kendall_tau_b(a, b)) < 1e-9);
      CHECK(std::abs(rmse(a, b) - oracle::rmse(a, b)) < 1e-9);
      const auto r = average_ranks(a);
      const auto ref = oracle::ranks(a);
      for (std::size_t i = 0; i < r.size(); ++i) CHECK(r[i] == ref[i]);
    }
    const auto a = random_vec(10, 77, true), b = random_vec(10, 78, true);
    CHECK(std::abs(krcc(a, b) - oracle::kendall_tau_b(a, b)) < 1e-12);
  }

  TEST_CASE("invariances") {
    const auto a = random_vec(30, 1), b = random_vec(30, 2);
    std::vector<double> affine, cubed;
    for (double v : a) {
      affine.push_back(3.0 * v - 7.0);
      cubed.push_back(v * v * v);
    }
    CHECK(plcc(affine, b) == doctest::Approx(plcc(a, b)).epsilon(1e-12));
    CHECK(srcc(cubed, b) == doctest::Approx(srcc(a, b)).epsilon(1e-12));
  }

  TEST_CASE("logistic mapping fits a sigmoid exactly") {
    std::vector<double> x, y;
    for (int i = 0; i < 40; ++i) {
      x.push_back(i * 0.25);
      y.push_back(1.0 + 4.0 / (1.0 + std::exp(-(x.back() - 5.0) / 1.5)));
    }
    const auto q = logistic_map(x, y);
    CHECK(oracle::rmse(q, y) < 1e-4);
  }

  TEST_CASE("split arithmetic") {
    std::vector<std::string> ids;
    for (int i = 0; i < 10; ++i) ids.push_back("c" + std::to_string(i));
    SplitParams p;
    p.n_splits = 1;
    const auto s = make_split(ids, p, 0);
    CHECK(s.train.size() == 8);
    CHECK(s.test.size() == 2);

    std::vector<std::string> pairs;
    for (int i = 0; i < 10; ++i) pairs.push_back("g" + std::to_string(i / 3));
    const auto g = make_split(pairs, p, 0);
    std::set<std::string> train_groups, test_groups;
    for (auto i : g.train) train_groups.insert(pairs[i]);
    for (auto i : g.test) test_groups.insert(pairs[i]);
    for (const auto& t : test_groups) CHECK(train_groups.count(t) == 0);
    CHECK(g.train.size() + g.test.size() == 10);
    CHECK(!g.test.empty());

    CHECK_THROWS_AS(make_split(std::vector<std::string>{"a", "b", "c"}, p, 0), Error);
    CHECK_THROWS_AS(make_split(std::vector<std::string>(8, "same"), p, 0), Error);
  }

  TEST_CASE("splits are reproducible and vary with index and seed") {
    std::vector<std::string> ids;
    for (int i = 0; i < 40; ++i) ids.push_back("c" + std::to_string(i));
    SplitParams p;
    CHECK(make_split(ids, p, 3).test == make_split(ids, p, 3).test);
    CHECK(make_split(ids, p, 3).test != make_split(ids, p, 4).test);
    SplitParams q = p;
    q.seed = 2;
    CHECK(make_split(ids, p, 3).test != make_split(ids, q, 3).test);
  }

  TEST_CASE("learnable fixture and determinism") {
    const auto data = testing::learnable_dataset();
    SplitParams p;
    p.n_splits = 20;
    const auto a = cross_validate(data, FeatureMask::all(), SvrParams{}, p);
    CHECK(a.splits.size() == 20);
    CHECK(a.mean.plcc > 0.99);
    CHECK(a.median.plcc > 0.99);
    CHECK(a.to_json() == cross_validate(data, FeatureMask::all(), SvrParams{}, p).to_json());
    for (const auto& s : a.splits) {
      CHECK(s.metrics.rmse >= 0);
      CHECK(std::abs(s.metrics.krcc) <= 1);
      CHECK(s.n_train + s.n_test == data.size());
    }
  }

  TEST_CASE("worker count does not change the report") {
    const auto data = testing::learnable_dataset(40);
    SplitParams p;
    p.n_splits = 6;
    ::setenv("HDAVCA_WORKERS", "1", 1);
    CHECK(worker_count() == 1);
    const auto serial = cross_validate(data, FeatureMask::all(), SvrParams{}, p).to_json();
    ::setenv("HDAVCA_WORKERS", "3", 1);
    CHECK(worker_count() == 3);
    const auto threaded = cross_validate(data, FeatureMask::all(), SvrParams{}, p).to_json();
    ::unsetenv("HDAVCA_WORKERS");
    CHECK(serial == threaded);
  }

  TEST_CASE("no test-row leaks into fitting") {
    const auto data = testing::learnable_dataset(40);
    for (bool grid : {false, true}) {
      SplitParams p;
      p.n_splits = 4;
      p.grid_search = grid;
      std::atomic<int> calls{0};
      std::atomic<int> leaks{0};
      cross_validate(data, FeatureMask::all(), SvrParams{}, p,
                     [&](int split, const std::vector<std::size_t>& rows) {
                       ++calls;
                       const auto s = make_split(data.content_ids, p, split);
                       for (auto r : rows)
                         if (std::find(s.test.begin(), s.test.end(), r) != s.test.end()) ++leaks;
                     });
      CHECK(calls >= 4);
      CHECK(leaks == 0);
    }
  }

  TEST_CASE("ablation degrades without the signal family") {
    const auto data = testing::learnable_dataset(60);
    SplitParams p;
    p.n_splits = 5;
    const auto rows = ablate(data, SvrParams{}, p);
    REQUIRE(rows.size() == 6);
    CHECK(rows[4].name == "All");
    CHECK(rows[4].report.mask.count() == 72);
    CHECK(rows[5].report.mask.count() == 70);
    // Row 2 drops the semantic family, which carries most of the signal.
    CHECK(rows[2].report.mean.plcc < rows[4].report.mean.plcc - 0.1);
    const auto table = ablation_to_table(rows);
    CHECK(table.find("DF+D-NSS") != std::string::npos);
  }

  TEST_CASE("parallel_for rethrows the first failing index") {
    ::setenv("HDAVCA_WORKERS", "4", 1);
    try {
      parallel_for(10, [](std::size_t i) {
        if (i == 7) throw Error(ErrorCode::kInternal, "seven");
        if (i == 3) throw Error(ErrorCode::kInternal, "three");
      });
      FAIL("expected an exception");
    } catch (const Error& e) {
      CHECK(std::string(e.what()) == "three");
    }
    ::unsetenv("HDAVCA_WORKERS");
  }
}
