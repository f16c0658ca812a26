#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "hdavca/binocular.hpp"
#include "hdavca/error.hpp"

using namespace hdavca;

namespace {

DisparityMap constant_map(int w, int h, double v) { return {Raster(w, h, v), 128}; }

// Independent re-derivation of the tile statistics: explicit difference
// lists per direction, JND grading by truncated steps from the center.
struct TileStats {
  double m_rank = 0, v_rank = 0, m_raw = 0, v_raw = 0;
};

double rms(const std::vector<double>& d) {
  double s = 0;
  for (double x : d) s += x * x;
  return std::sqrt(s / static_cast<double>(d.size()));
}

double grad_magnitude(const double p[3][3]) {
  std::vector<double> h, v, d1, d2;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 2; ++c) h.push_back(p[r][c + 1] - p[r][c]);
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 3; ++c) v.push_back(p[r + 1][c] - p[r][c]);
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) {
      d1.push_back(p[r + 1][c + 1] - p[r][c]);
      d2.push_back(p[r][c + 1] - p[r + 1][c]);
    }
  const double gh = rms(h), gv = rms(v), gd = rms(d1) + rms(d2);
  return std::sqrt(gh * gh + gv * gv + gd * gd);
}

TileStats brute_force_tiles(const Raster& d) {
  const double edges[] = {64, 128, 192};
  const double steps[] = {21, 19, 18, 20};
  std::vector<double> ranked, raw;
  for (int ty = 0; ty + 3 <= d.height(); ty += 3) {
    for (int tx = 0; tx + 3 <= d.width(); tx += 3) {
      double p[3][3], q[3][3];
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) p[r][c] = d.at(tx + c, ty + r);
      const double center = p[1][1];
      int bin = 1;
      for (double e : edges)
        if (std::abs(center) >= e) ++bin;
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) {
          const double steps_away = (p[r][c] - center) / steps[bin - 1];
          q[r][c] = bin + (steps_away >= 0 ? std::floor(steps_away) : std::ceil(steps_away));
        }
      ranked.push_back(grad_magnitude(q));
      raw.push_back(grad_magnitude(p));
    }
  }
  auto mv = [](const std::vector<double>& x, double& m, double& v) {
    m = 0;
    for (double e : x) m += e;
    m /= static_cast<double>(x.size());
    v = 0;
    for (double e : x) v += (e - m) * (e - m);
    v /= static_cast<double>(x.size());
  };
  TileStats s;
  mv(ranked, s.m_rank, s.v_rank);
  mv(raw, s.m_raw, s.v_raw);
  return s;
}

}  // namespace

TEST_SUITE("binocular") {
  TEST_CASE("disparity range anchors") {
    const ComfortZone zone;
    CHECK(std::abs(disparity_range_feature(constant_map(8, 4, 10.0), zone) -
                   (0.6 * (-79.55 - 10.0) / 10.0 + 0.4 * (79.55 - 10.0) / 10.0)) < 1e-12);
    CHECK(std::abs(disparity_range_feature(constant_map(8, 4, 10.0), zone) + 2.591) < 1e-6);
    DisparityMap span = constant_map(8, 4, 0.0);
    span.values.at(0, 0) = -79.55;
    span.values.at(7, 3) = 79.55;
    CHECK(disparity_range_feature(span, zone) == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
    DisparityMap with_zero = constant_map(8, 4, 5.0);
    with_zero.values.at(2, 2) = 0.0;
    CHECK(std::isfinite(disparity_range_feature(with_zero, zone)));
  }

  TEST_CASE("disparity range does not increase with the maximum beyond the zone") {
    const ComfortZone zone;
    double prev = std::numeric_limits<double>::infinity();
    for (double du : {80.0, 100.0, 140.0, 200.0}) {
      DisparityMap m = constant_map(8, 4, 10.0);
      m.values.at(3, 1) = du;
      const double r = disparity_range_feature(m, zone);
      CHECK(r <= prev);
      prev = r;
    }
  }

  TEST_CASE("comfort zone validation") {
    ComfortZone z;
    z.alpha = 0.7;
    CHECK_THROWS_AS(z.validate(), Error);
    z = ComfortZone{};
    z.d_min = 100;
    CHECK_THROWS_AS(z.validate(), Error);
  }

  TEST_CASE("perceptual alternation") {
    const auto flat = StereoPair(Raster(100, 10, 50.0), Raster(100, 10, 50.0));
    auto pa = perceptual_alternation_feature(flat, constant_map(100, 10, 0.0));
    CHECK(pa.a_l == 0.0);
    CHECK(pa.a_r == 0.0);
    CHECK(pa.r_e == 1.0);

    const auto tex = testing::random_raster(100, 10, 4);
    pa = perceptual_alternation_feature(StereoPair(tex, tex), constant_map(100, 10, 0.0));
    CHECK(pa.r_e == doctest::Approx(1.0).epsilon(1e-12));

    pa = perceptual_alternation_feature(StereoPair(tex, testing::random_raster(100, 10, 5)),
                                        constant_map(100, 10, 20.0));
    CHECK(pa.a_l == doctest::Approx(20.0));
    CHECK(pa.a_r == doctest::Approx(20.0));

    // Boundary width follows |b_l| = 2: only the first two columns count.
    DisparityMap d = constant_map(100, 10, 0.0);
    for (int y = 0; y < 10; ++y) {
      d.values.at(0, y) = 2.0;
      d.values.at(1, y) = 4.0;
      d.values.at(2, y) = 50.0;
    }
    pa = perceptual_alternation_feature(StereoPair(tex, tex), d);
    CHECK(pa.a_l == doctest::Approx(3.0));
    CHECK(pa.a_r == doctest::Approx(0.0));

    CHECK_THROWS_AS(perceptual_alternation_feature(StereoPair(Raster(3, 3), Raster(3, 3)), constant_map(3, 3, 0)),
                    Error);
  }

  TEST_CASE("jndd bins and ranks") {
    CHECK(jndd_bin(0) == 1);
    CHECK(jndd_bin(63.9) == 1);
    CHECK(jndd_bin(-64) == 2);
    CHECK(jndd_bin(191.99) == 3);
    CHECK(jndd_bin(255) == 4);
    CHECK(jndd_threshold(1) == 21);
    CHECK(jndd_threshold(4) == 20);

    Patch3 same;
    same.fill(100.0);
    for (int r : jndd_rank(same)) CHECK(r == 2);

    Patch3 p;
    p.fill(10.0);
    p[0] = 35.0;
    p[1] = 10.5;
    p[2] = 9.5;
    p[3] = -40.0;
    const auto r = jndd_rank(p);
    CHECK(r[4] == 1);
    CHECK(r[0] == 2);
    CHECK(r[1] == 1);
    CHECK(r[2] == 1);
    CHECK(r[3] == -1);

    const auto ind = jndd_rank({0, 70, 130, 200, 10, -70, 0, 0, 0}, RankMode::kIndependentBins);
    CHECK(ind == RankPatch{1, 2, 3, 4, 1, 2, 1, 1, 1});
  }

  TEST_CASE("jndd offsets are unchanged by a sub-JND translation") {
    const Patch3 p{12, 40, 5, 30, 20, 18, 61, 3, 25};
    Patch3 q = p;
    for (double& v : q) v += 0.25;
    CHECK(jndd_rank(p) == jndd_rank(q));
  }

  TEST_CASE("patch gradients") {
    Patch3 flat;
    flat.fill(3.0);
    const auto z = patch_gradients(flat);
    CHECK(z.g_h == 0.0);
    CHECK(z.g_v == 0.0);
    CHECK(z.g_d == 0.0);

    const auto ramp = patch_gradients({0, 1, 2, 0, 1, 2, 0, 1, 2});
    CHECK(ramp.g_h == 1.0);
    CHECK(ramp.g_v == 0.0);
    CHECK(ramp.g_d == 2.0);

    const auto spike = patch_gradients({0, 0, 0, 0, 1, 0, 0, 0, 0});
    CHECK(spike.g_h == doctest::Approx(std::sqrt(2.0 / 6.0)).epsilon(1e-15));
    CHECK(spike.g_v == doctest::Approx(std::sqrt(2.0 / 6.0)).epsilon(1e-15));

    const Patch3 p{1, 5, 2, 8, 3, 3, 0, 7, 4};
    Patch3 q = p;
    for (double& v : q) v += 50;
    const auto a = patch_gradients(p), b = patch_gradients(q);
    CHECK(a.g_h == doctest::Approx(b.g_h));
    CHECK(a.g_v == doctest::Approx(b.g_v));
    CHECK(a.g_d == doctest::Approx(b.g_d));
  }

  TEST_CASE("disparity intensity distribution") {
    for (double w : {0.0, 0.5, 1.0}) {
      const auto [m, v] = disparity_intensity_feature(constant_map(9, 9, 37.0), w);
      CHECK(m == 0.0);
      CHECK(v == 0.0);
    }
    CHECK_THROWS_AS(disparity_intensity_feature(constant_map(2, 5, 0.0), 0.5), Error);
    CHECK_THROWS_AS(disparity_intensity_feature(constant_map(6, 6, 0.0), 1.5), Error);

    // 6x6 step maps: one aligned with the tile grid, one cutting through tiles.
    for (int edge : {3, 2, 4}) {
      DisparityMap d = constant_map(6, 6, 0.0);
      for (int y = 0; y < 6; ++y)
        for (int x = edge; x < 6; ++x) d.values.at(x, y) = 100.0;
      const auto ref = brute_force_tiles(d.values);
      const auto [m, v] = disparity_intensity_feature(d, 0.5);
      CHECK(m == doctest::Approx(0.5 * ref.m_rank + 0.5 * ref.m_raw).epsilon(1e-12));
      CHECK(v == doctest::Approx(0.5 * ref.v_rank + 0.5 * ref.v_raw).epsilon(1e-12));
      const auto [m0, v0] = disparity_intensity_feature(d, 0.0);
      CHECK(m0 == doctest::Approx(ref.m_raw).epsilon(1e-12));
      CHECK(v0 == doctest::Approx(ref.v_raw).epsilon(1e-12));
    }

    // Random map, remainder rows and columns discarded.
    DisparityMap r{testing::random_raster(11, 8, 9, -150, 150), 128};
    const auto ref = brute_force_tiles(r.values);
    const auto [m, v] = disparity_intensity_feature(r, 0.3);
    CHECK(m == doctest::Approx(0.3 * ref.m_rank + 0.7 * ref.m_raw).epsilon(1e-12));
    CHECK(v == doctest::Approx(0.3 * ref.v_rank + 0.7 * ref.v_raw).epsilon(1e-12));
  }

  TEST_CASE("assembled features") {
    const auto flat = StereoPair(Raster(30, 12, 80.0), Raster(30, 12, 80.0));
    const auto f = binocular_features(flat, constant_map(30, 12, 0.0));
    CHECK(std::isfinite(f.f_dr));
    CHECK(f.f_pa.a_l == 0.0);
    CHECK(f.f_pa.a_r == 0.0);
    CHECK(f.f_pa.r_e == 1.0);
    CHECK(f.did_m == 0.0);
    CHECK(f.did_v == 0.0);
    CHECK(f.as_array().size() == 6);
  }
}
