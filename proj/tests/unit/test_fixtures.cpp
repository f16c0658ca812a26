#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "helpers.hpp"
#include "hdavca/disparity.hpp"
#include "hdavca/fixtures.hpp"
#include "hdavca/semantic.hpp"

using namespace hdavca;

namespace {

SyntheticScene one_object(double disparity) { return {19, {{70, 30, 60, 50, disparity, 30}}}; }

// Share of object-interior pixels whose estimate lies within tol of expect.
double hit_rate(const DisparityMap& d, int x0, int x1, int y0, int y1, double expect, double tol) {
  int hits = 0, n = 0;
  for (int y = y0; y < y1; ++y)
    for (int x = x0; x < x1; ++x, ++n)
      if (std::abs(d.values.at(x, y) - expect) <= tol) ++hits;
  return static_cast<double>(hits) / n;
}

}  // namespace

TEST_SUITE("fixtures") {
  TEST_CASE("zero disparity renders identical views") {
    const auto p = synth_stereo_pair(one_object(0), 200, 110);
    CHECK(p.left == p.right);
  }

  TEST_CASE("rendering is deterministic") {
    const auto a = synth_stereo_pair(fixture_scenes()[2], 160, 90);
    const auto b = synth_stereo_pair(fixture_scenes()[2], 160, 90);
    CHECK(a.left == b.left);
    CHECK(a.right == b.right);
  }

  TEST_CASE("block matching recovers the object disparity") {
    const auto p = synth_stereo_pair(one_object(10), 200, 110);
    const auto d = estimate_disparity(p, {9, 32});
    CHECK(hit_rate(d, 76, 124, 36, 74, 10.0, 0.0) > 0.95);
    const auto truth = scene_disparity(one_object(10), 200, 110);
    CHECK(truth.values.at(100, 50) == 10.0);
    CHECK(truth.values.at(10, 10) == 0.0);
  }

  TEST_CASE("scaling compresses disparity") {
    const auto p = scale_retarget(synth_stereo_pair(one_object(10), 200, 110), 0.7);
    CHECK(p.width() == 140);
    const auto d = estimate_disparity(p, {9, 32});
    // Object spans columns 49..91 after scaling.
    CHECK(hit_rate(d, 54, 84, 36, 74, 7.0, 1.0) > 0.9);
    const auto sd = scale_disparity(scene_disparity(one_object(10), 200, 110), 0.7);
    CHECK(sd.width() == 140);
    CHECK(sd.values.at(70, 55) == doctest::Approx(7.0));
  }

  TEST_CASE("crop and scale widths") {
    const StereoPair wide(Raster(1920, 4, 5.0), Raster(1920, 4, 5.0));
    CHECK(crop_retarget(wide, 0.7).width() == 1344);
    CHECK(scale_retarget(wide, 0.7).width() == 1344);
    const auto scaled = scale_retarget(wide, 0.7);
    for (double v : scaled.left.data()) CHECK(v == doctest::Approx(5.0));
  }

  TEST_CASE("ratio 1 is the identity") {
    const auto p = synth_stereo_pair(fixture_scenes()[0], 120, 60);
    CHECK(crop_retarget(p, 1.0).left == p.left);
    const auto s = scale_retarget(p, 1.0);
    for (std::size_t i = 0; i < s.left.size(); ++i) CHECK(s.left.data()[i] == doctest::Approx(p.left.data()[i]));
  }

  TEST_CASE("crop keeps surviving columns exactly and drops edge objects") {
    const SyntheticScene scene{5, {{90, 20, 20, 20, 0, 60}, {0, 20, 20, 20, 0, 60}}};
    const auto p = synth_stereo_pair(scene, 200, 60);
    const auto c = crop_retarget(p, 0.7);
    REQUIRE(c.width() == 140);
    CHECK(c.left == crop(p.left, 30, 0, 140, 60));
    CHECK(c.right == crop(p.right, 30, 0, 140, 60));
    const auto truth = crop_disparity(scene_disparity({5, {{90, 20, 20, 20, 8, 60}, {0, 20, 20, 20, 8, 60}}}, 200, 60), 0.7);
    int object_cols = 0;
    for (int x = 0; x < 140; ++x) object_cols += truth.values.at(x, 30) != 0.0;
    CHECK(object_cols == 20);
  }

  TEST_CASE("pseudo feature maps") {
    const auto img = synth_stereo_pair(fixture_scenes()[0], 160, 96).left;
    const auto f = pseudo_feature_map(img);
    CHECK(f.channels == 32);
    CHECK(f.height == 6);
    CHECK(f.width == 10);
    for (float v : f.data) CHECK(v >= 0.0f);
    CHECK(pseudo_feature_map(img).data == f.data);
  }

  TEST_CASE("fixture set on disk") {
    const auto dir = testing::scratch_dir("fixtures_write");
    const auto summary = write_fixtures(dir.string());
    CHECK(summary.n_entries == 12);
    CHECK(std::filesystem::exists(summary.manifest_path));
    const auto fm = read_feature_map((dir / "scene0_flat_orig_feat.fmap").string());
    CHECK(fm.channels == 32);
  }
}
