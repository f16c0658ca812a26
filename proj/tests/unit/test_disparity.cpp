#include "doctest.h"
#include "helpers.hpp"
#include "hdavca/disparity.hpp"
#include "hdavca/error.hpp"
#include "hdavca/semantic.hpp"

using namespace hdavca;

namespace {

Raster texture(int w, int h, std::uint64_t seed) { return gaussian_blur(testing::random_raster(w, h, seed), 1.0); }

}  // namespace

TEST_SUITE("disparity") {
  TEST_CASE("identical views give zero disparity") {
    const auto img = texture(80, 40, 1);
    const auto d = estimate_disparity(StereoPair(img, img), {9, 16});
    for (double v : d.values.data()) CHECK(v == 0.0);
    CHECK(d.search_range == 16.0);
  }

  TEST_CASE("a right view shifted left by 10 gives +10") {
    const int w = 96, h = 40, shift = 10;
    const auto wide = texture(w + shift, h, 2);
    const auto left = crop(wide, 0, 0, w, h);
    const auto right = crop(wide, shift, 0, w, h);  // right(x) = left(x + 10)
    const auto d = estimate_disparity(StereoPair(left, right), {9, 20});
    for (int y = 0; y < h; ++y)
      for (int x = shift + 4; x < w - 4; ++x) CHECK(d.values.at(x, y) == 10.0);
  }

  TEST_CASE("flat views tie-break to zero") {
    const auto d = estimate_disparity(StereoPair(Raster(50, 20, 9.0), Raster(50, 20, 9.0)), {9, 8});
    for (double v : d.values.data()) CHECK(v == 0.0);
  }

  TEST_CASE("search window must fit") {
    const auto img = texture(30, 20, 3);
    CHECK_THROWS_AS(estimate_disparity(StereoPair(img, img), {9, 16}), Error);
    CHECK_THROWS_AS(estimate_disparity(StereoPair(img, img), {8, 4}), Error);
  }

  TEST_CASE("disparity file round trip and dimension checks") {
    const auto dir = testing::scratch_dir("disp_rt");
    DisparityMap m{Raster(6, 4), 0};
    for (std::size_t i = 0; i < m.values.size(); ++i) m.values.data()[i] = static_cast<double>(i) - 7.5;
    save_disparity(m, (dir / "d.fmap").string());
    const auto back = load_disparity((dir / "d.fmap").string(), 6, 4);
    CHECK(back.values == m.values);
    CHECK_THROWS_WITH_AS(load_disparity((dir / "d.fmap").string(), 5, 4), doctest::Contains("dim mismatch"), Error);
    write_fmap({{2, 4, 6}, std::vector<float>(48, 0.0f)}, (dir / "c.fmap").string());
    CHECK_THROWS_WITH_AS(load_disparity((dir / "c.fmap").string(), 6, 4), doctest::Contains("dim mismatch"), Error);
  }
}
