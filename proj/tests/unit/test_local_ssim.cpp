#include "doctest.h"
#include "helpers.hpp"
#include "hdavca/error.hpp"
#include "hdavca/fixtures.hpp"
#include "hdavca/local_ssim.hpp"

using namespace hdavca;

TEST_SUITE("local_ssim") {
  TEST_CASE("identical patches give 1") {
    const auto p = testing::random_raster(33, 33, 1);
    CHECK(windowed_ssim(p, p) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(windowed_ssim(p, p, SsimPooling::kCenterWindow) == doctest::Approx(1.0).epsilon(1e-12));
  }

  TEST_CASE("mean shift lowers only the luminance term") {
    const auto p = testing::random_raster(33, 33, 2, 50, 200);
    Raster q = p;
    for (double& v : q.data()) v += 10;
    const double s = windowed_ssim(p, q);
    CHECK(s < 1.0);
    CHECK(s > 0.0);
  }

  TEST_CASE("matches the per-window reference on seeded patches") {
    for (std::uint64_t seed = 42; seed < 52; ++seed) {
      const auto a = testing::random_raster(33, 33, seed);
      const auto b = testing::random_raster(33, 33, seed + 1000);
      const double ref = oracle::ssim_patch_mean(testing::to_grid(a), testing::to_grid(b));
      CHECK(std::abs(windowed_ssim(a, b) - ref) < 1e-9);
      const double center = oracle::ssim_window(testing::to_grid(a), testing::to_grid(b), 11, 11);
      CHECK(std::abs(windowed_ssim(a, b, SsimPooling::kCenterWindow) - center) < 1e-9);
    }
  }

  TEST_CASE("wrong patch size is rejected") {
    CHECK_THROWS_WITH_AS(windowed_ssim(Raster(32, 33), Raster(32, 33)), doctest::Contains("wrong patch size"), Error);
  }

  TEST_CASE("identity retargeting gives 1") {
    const auto pair = synth_stereo_pair(fixture_scenes()[0], 200, 120);
    const auto f = local_ssim_feature(pair.left, pair.left);
    REQUIRE(f.n_matches > 0);
    CHECK(f.value == doctest::Approx(1.0).epsilon(1e-12));
  }

  TEST_CASE("blur lowers the feature") {
    const auto pair = synth_stereo_pair(fixture_scenes()[1], 200, 120);
    const double identity = local_ssim_feature(pair.left, pair.left).value;
    const auto blurred = gaussian_blur(pair.left, 5.0);
    const auto f = local_ssim_feature(pair.left, blurred);
    CHECK(f.value < identity);
  }

  TEST_CASE("flat images fall back to zero") {
    const auto f = local_ssim_feature(Raster(64, 64, 90.0), Raster(64, 64, 90.0));
    CHECK(f.value == 0.0);
    CHECK(f.n_matches == 0);
  }

  TEST_CASE("too small images are rejected") {
    CHECK_THROWS_AS(local_ssim_feature(Raster(20, 40), Raster(40, 40)), Error);
  }

  TEST_CASE("border keypoints are clamped or dropped") {
    const auto img = testing::random_raster(64, 64, 3);
    Keypoint k;
    k.x = 2;
    k.y = 60;
    const std::vector<MatchPair> m = {{k, k, 0.0}};
    LocalSsimParams clamp;
    CHECK(local_ssim_from_matches(img, img, m, clamp).n_matches == 1);
    LocalSsimParams drop;
    drop.border = BorderMode::kDrop;
    CHECK(local_ssim_from_matches(img, img, m, drop).n_matches == 0);
  }
}
