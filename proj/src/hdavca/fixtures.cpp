#include "hdavca/fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "json.hpp"

#include "hdavca/error.hpp"
#include "hdavca/rng.hpp"

namespace hdavca {

namespace {

double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

// Smoothed noise normalized to zero mean and unit standard deviation.
Raster texture(int width, int height, std::uint64_t seed, std::uint64_t stream, double sigma) {
  auto rng = make_rng(seed, stream);
  Raster noise(width, height);
  for (double& v : noise.data()) v = unit_uniform(rng);
  Raster t = gaussian_blur(noise, sigma);
  double mean = 0.0;
  for (double v : t.data()) mean += v;
  mean /= static_cast<double>(t.size());
  double var = 0.0;
  for (double v : t.data()) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / static_cast<double>(t.size()));
  for (double& v : t.data()) v = sd > 0 ? (v - mean) / sd : 0.0;
  return t;
}

void paint(Raster& view, const Raster& tex, int x0, int y0, double base, double amplitude) {
  for (int y = 0; y < tex.height(); ++y) {
    const int yy = y0 + y;
    if (yy < 0 || yy >= view.height()) continue;
    for (int x = 0; x < tex.width(); ++x) {
      const int xx = x0 + x;
      if (xx < 0 || xx >= view.width()) continue;
      view.at(xx, yy) = std::clamp(base + amplitude * tex.at(x, y), 0.0, 255.0);
    }
  }
}

int retarget_width(int width, double ratio) {
  Require(ratio > 0 && ratio <= 1, ErrorCode::kInvalidArgument, "retarget ratio must lie in (0, 1]");
  return std::max(1, static_cast<int>(std::lround(ratio * width)));
}

}  // namespace

StereoPair synth_stereo_pair(const SyntheticScene& scene, int width, int height) {
  Require(width > 0 && height > 0, ErrorCode::kInvalidArgument, "scene size must be positive");
  const Raster bg = texture(width, height, scene.seed, 0, 1.5);
  Raster left(width, height), right(width, height);
  for (std::size_t i = 0; i < bg.size(); ++i) {
    left.data()[i] = right.data()[i] = std::clamp(128.0 + 40.0 * bg.data()[i], 0.0, 255.0);
  }
  for (std::size_t k = 0; k < scene.objects.size(); ++k) {
    const SceneObject& o = scene.objects[k];
    Require(o.width > 0 && o.height > 0, ErrorCode::kInvalidArgument, "object size must be positive");
    const Raster tex = texture(o.width, o.height, scene.seed, k + 1, 1.2);
    const int shift = static_cast<int>(std::lround(o.disparity));
    paint(left, tex, o.x, o.y, 128.0 + o.brightness, 45.0);
    paint(right, tex, o.x - shift, o.y, 128.0 + o.brightness, 45.0);
  }
  return {std::move(left), std::move(right)};
}

DisparityMap scene_disparity(const SyntheticScene& scene, int width, int height, double search_range) {
  DisparityMap d{Raster(width, height), search_range};
  for (const auto& o : scene.objects) {
    const double v = static_cast<double>(std::lround(o.disparity));
    for (int y = std::max(0, o.y); y < std::min(height, o.y + o.height); ++y) {
      for (int x = std::max(0, o.x); x < std::min(width, o.x + o.width); ++x) d.values.at(x, y) = v;
    }
  }
  return d;
}

StereoPair crop_retarget(const StereoPair& pair, double ratio) {
  const int w = retarget_width(pair.width(), ratio);
  const int x0 = (pair.width() - w) / 2;
  return {crop(pair.left, x0, 0, w, pair.height()), crop(pair.right, x0, 0, w, pair.height())};
}

StereoPair scale_retarget(const StereoPair& pair, double ratio) {
  const int w = retarget_width(pair.width(), ratio);
  return {resize_bilinear(pair.left, w, pair.height()), resize_bilinear(pair.right, w, pair.height())};
}

DisparityMap crop_disparity(const DisparityMap& d, double ratio) {
  const int w = retarget_width(d.width(), ratio);
  return {crop(d.values, (d.width() - w) / 2, 0, w, d.height()), d.search_range};
}

DisparityMap scale_disparity(const DisparityMap& d, double ratio) {
  const int w = retarget_width(d.width(), ratio);
  const double realized = static_cast<double>(w) / d.width();
  Raster v = resize_bilinear(d.values, w, d.height());
  for (double& x : v.data()) x *= realized;
  return {std::move(v), d.search_range};
}

FeatureMapTensor pseudo_feature_map(const GrayImage& img, int channels, int cell, std::uint64_t seed) {
  Require(channels >= 1 && cell >= 1, ErrorCode::kInvalidArgument, "channels and cell must be positive");
  const int gh = std::max(1, img.height() / cell);
  const int gw = std::max(1, img.width() / cell);
  constexpr int kTaps = 5;
  auto rng = make_rng(seed, 0x666d6170ull);
  FeatureMapTensor t;
  t.channels = channels;
  t.height = gh;
  t.width = gw;
  t.data.assign(static_cast<std::size_t>(channels) * gh * gw, 0.0f);
  for (int c = 0; c < channels; ++c) {
    std::array<double, kTaps * kTaps> k{};
    double mean = 0.0;
    for (double& v : k) {
      v = 2.0 * unit_uniform(rng) - 1.0;
      mean += v;
    }
    for (double& v : k) v -= mean / k.size();
    for (int gy = 0; gy < gh; ++gy) {
      for (int gx = 0; gx < gw; ++gx) {
        double acc = 0.0;
        int count = 0;
        for (int y = gy * cell; y < std::min(img.height(), (gy + 1) * cell); ++y) {
          for (int x = gx * cell; x < std::min(img.width(), (gx + 1) * cell); ++x) {
            double r = 0.0;
            for (int ky = 0; ky < kTaps; ++ky) {
              for (int kx = 0; kx < kTaps; ++kx) r += k[ky * kTaps + kx] * img.clamped(x + kx - 2, y + ky - 2);
            }
            acc += std::max(r, 0.0);
            ++count;
          }
        }
        t.data[(static_cast<std::size_t>(c) * gh + gy) * gw + gx] = static_cast<float>(acc / count / 255.0);
      }
    }
  }
  return t;
}

std::vector<SyntheticScene> fixture_scenes() {
  return {
      {11, {{150, 70, 100, 90, 12, 30}, {20, 150, 60, 60, -8, -25}}},
      {23, {{40, 40, 120, 80, 24, -20}, {230, 110, 110, 100, 6, 35}, {170, 20, 50, 50, -16, 15}}},
      {37, {{120, 60, 160, 120, 40, 20}, {300, 30, 60, 170, -20, -30}}},
  };
}

FixtureSummary write_fixtures(const std::string& out_dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) Fail(ErrorCode::kIo, "cannot create directory: " + out_dir);
  const fs::path dir(out_dir);

  struct Variant {
    const char* name;
    int kind;  // 0 identity, 1 crop, 2 scale
    double ratio;
    double mos_base;
  };
  static const Variant kVariants[] = {
      {"identity", 0, 1.0, 4.6}, {"crop70", 1, 0.7, 3.4}, {"scale70", 2, 0.7, 2.9}, {"scale85", 2, 0.85, 3.8}};

  nlohmann::ordered_json manifest = nlohmann::ordered_json::array();
  const auto scenes = fixture_scenes();
  for (std::size_t s = 0; s < scenes.size(); ++s) {
    const SyntheticScene& scene = scenes[s];
    const std::string content = "scene" + std::to_string(s);
    double max_abs = 0.0;
    for (const auto& o : scene.objects) max_abs = std::max(max_abs, std::abs(o.disparity));

    for (const Variant& v : kVariants) {
      SyntheticScene source = scene;
      if (v.kind == 0) {
        for (auto& o : source.objects) o.disparity = 0.0;
      }
      const StereoPair original = synth_stereo_pair(source, kFixtureWidth, kFixtureHeight);
      const DisparityMap d_orig = scene_disparity(source, kFixtureWidth, kFixtureHeight);
      StereoPair retargeted = original;
      DisparityMap d_ret = d_orig;
      if (v.kind == 1) {
        retargeted = crop_retarget(original, v.ratio);
        d_ret = crop_disparity(d_orig, v.ratio);
      } else if (v.kind == 2) {
        retargeted = scale_retarget(original, v.ratio);
        d_ret = scale_disparity(d_orig, v.ratio);
      }

      const std::string id = content + "_" + v.name;
      const std::string stem = v.kind == 0 ? content + "_flat" : content;
      const std::string ol = stem + "_orig_l.pgm", orr = stem + "_orig_r.pgm";
      const std::string rl = id + "_ret_l.pgm", rr = id + "_ret_r.pgm";
      const std::string disp = id + "_disp.fmap";
      const std::string fo = stem + "_orig_feat.fmap", fr = id + "_ret_feat.fmap";
      save_pgm(original.left, (dir / ol).string());
      save_pgm(original.right, (dir / orr).string());
      save_pgm(retargeted.left, (dir / rl).string());
      save_pgm(retargeted.right, (dir / rr).string());
      save_disparity(d_ret, (dir / disp).string());
      write_feature_map(pseudo_feature_map(original.left), (dir / fo).string());
      if (v.kind == 0) {
        std::filesystem::copy_file(dir / fo, dir / fr, fs::copy_options::overwrite_existing, ec);
        if (ec) Fail(ErrorCode::kIo, "cannot write file: " + (dir / fr).string());
      } else {
        write_feature_map(pseudo_feature_map(retargeted.left), (dir / fr).string());
      }
      const double mos = v.mos_base - 0.01 * (v.kind == 0 ? 0.0 : max_abs) + 0.05 * static_cast<double>(s);
      manifest.push_back({{"id", id},
                          {"content_id", content},
                          {"retargeted_left", rl},
                          {"retargeted_right", rr},
                          {"original_left", ol},
                          {"original_right", orr},
                          {"disparity", disp},
                          {"featmap_original", fo},
                          {"featmap_retargeted", fr},
                          {"mos", mos}});
    }
  }
  const fs::path path = dir / "manifest.json";
  std::ofstream out(path);
  if (!out) Fail(ErrorCode::kIo, "cannot write file: " + path.string());
  out << manifest.dump(2) << '\n';
  if (!out) Fail(ErrorCode::kIo, "cannot write file: " + path.string());
  return {path.string(), manifest.size()};
}

}  // namespace hdavca
