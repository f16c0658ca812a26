#include <cstring>
#include <fstream>

#include "doctest.h"
#include "helpers.hpp"
#include "hdavca/error.hpp"
#include "hdavca/semantic.hpp"

using namespace hdavca;

namespace {

std::vector<unsigned char> raw_fmap(std::uint32_t version, const std::vector<std::uint32_t>& dims,
                                    const std::vector<float>& data, const char* magic = "FMAP") {
  std::vector<unsigned char> out(magic, magic + 4);
  auto u32 = [&out](std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
  };
  u32(version);
  u32(static_cast<std::uint32_t>(dims.size()));
  for (auto d : dims) u32(d);
  for (float f : data) {
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    u32(bits);
  }
  return out;
}

std::string parse_error(const std::vector<unsigned char>& bytes) {
  try {
    parse_fmap(bytes);
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

FeatureMapTensor tensor(int c, int h, int w, std::uint64_t seed) {
  FeatureMapTensor t{c, h, w, {}};
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(0.0f, 2.0f);
  t.data.resize(static_cast<std::size_t>(c) * h * w);
  for (auto& v : t.data) v = u(rng);
  return t;
}

}  // namespace

TEST_SUITE("semantic") {
  TEST_CASE("hand-written FMAP bytes parse") {
    const auto a = parse_fmap(raw_fmap(1, {2, 1, 2}, {1.0f, 2.0f, 3.0f, -4.5f}));
    CHECK(a.dims == std::vector<std::uint32_t>{2, 1, 2});
    CHECK(a.data == std::vector<float>{1.0f, 2.0f, 3.0f, -4.5f});
    CHECK(serialize_fmap(a) == raw_fmap(1, {2, 1, 2}, {1.0f, 2.0f, 3.0f, -4.5f}));
  }

  TEST_CASE("malformed FMAP bytes") {
    CHECK(parse_error(raw_fmap(1, {1}, {1.0f}, "FMAQ")) == "bad magic");
    CHECK(parse_error(raw_fmap(2, {1}, {1.0f})) == "bad version");
    auto cut = raw_fmap(1, {2, 2}, {1, 2, 3, 4});
    cut.pop_back();
    CHECK(parse_error(cut) == "truncated file");
    auto extra = raw_fmap(1, {2, 2}, {1, 2, 3, 4});
    extra.push_back(0);
    CHECK(parse_error(extra) == "trailing bytes after payload");
    CHECK(parse_error(raw_fmap(1, {2}, {1.0f, std::numeric_limits<float>::quiet_NaN()})) == "non-finite payload");
    CHECK(parse_error({'F', 'M'}) == "truncated file");
  }

  TEST_CASE("feature map file round trip") {
    const auto dir = testing::scratch_dir("fmap_rt");
    const auto t = tensor(5, 3, 4, 1);
    write_feature_map(t, (dir / "t.fmap").string());
    const auto back = read_feature_map((dir / "t.fmap").string());
    CHECK(back.channels == 5);
    CHECK(back.height == 3);
    CHECK(back.width == 4);
    CHECK(back.data == t.data);
  }

  TEST_CASE("a 2-d array is not a feature map") {
    const auto dir = testing::scratch_dir("fmap_dims");
    std::ofstream(dir / "m.fmap", std::ios::binary).write(
        reinterpret_cast<const char*>(raw_fmap(1, {2, 2}, {1, 2, 3, 4}).data()), 28);
    CHECK_THROWS_AS(read_feature_map((dir / "m.fmap").string()), Error);
  }

  TEST_CASE("channel means") {
    FeatureMapTensor t{2, 1, 3, {1, 2, 3, 10, 20, 30}};
    const auto m = channel_means(t);
    CHECK(m[0] == doctest::Approx(2.0));
    CHECK(m[1] == doctest::Approx(20.0));
  }

  TEST_CASE("correlation distance") {
    const std::vector<double> a{1, 2, 3, 4, 5};
    CHECK(correlation_distance(a, a) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(correlation_distance(a, {5, 4, 3, 2, 1}) == doctest::Approx(2.0));
    CHECK(correlation_distance(a, {3, 5, 7, 9, 11}) == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
    CHECK(correlation_distance(a, {7, 7, 7, 7, 7}) == 1.0);
    CHECK_THROWS_AS(correlation_distance(a, {1, 2}), Error);
    const std::vector<double> b{0.3, -1.0, 2.5, 0.0, 4.0};
    CHECK(correlation_distance(a, b) == doctest::Approx(1.0 - oracle::pearson(a, b)).epsilon(1e-12));
  }

  TEST_CASE("semantic feature") {
    const auto t = tensor(16, 6, 7, 2);
    CHECK(semantic_feature(t, t) == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
    // Spatial size may differ; channel count may not.
    const auto small = tensor(16, 3, 3, 3);
    CHECK(std::isfinite(semantic_feature(t, small)));
    CHECK_THROWS_AS(semantic_feature(t, tensor(8, 6, 7, 2)), Error);
    // Permuting channels of a non-constant mean vector moves the distance off zero.
    auto perm = t;
    const std::size_t plane = 6 * 7;
    for (int c = 0; c < 16; ++c) {
      std::copy(t.data.begin() + static_cast<std::ptrdiff_t>(((c + 5) % 16) * plane),
                t.data.begin() + static_cast<std::ptrdiff_t>(((c + 5) % 16 + 1) * plane),
                perm.data.begin() + static_cast<std::ptrdiff_t>(c * plane));
    }
    CHECK(semantic_feature(t, perm) > 0.0);
  }
}
