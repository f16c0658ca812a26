#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hdavca/disparity.hpp"
#include "hdavca/image.hpp"
#include "hdavca/semantic.hpp"

namespace hdavca {

// Axis-aligned textured rectangle. x, y locate it in the left view; the right
// view draws it at x - disparity.
struct SceneObject {
  int x = 0;
  int y = 0;
  int width = 0;
  int height = 0;
  double disparity = 0.0;
  double brightness = 0.0;  // added to the object's texture
};

struct SyntheticScene {
  std::uint64_t seed = 0;
  std::vector<SceneObject> objects;  // painted in order, later on top
};

// Renders the scene over a seeded background texture. Object textures are
// attached to the object, so they move with it between views. Disparities
// are rounded to whole pixels.
StereoPair synth_stereo_pair(const SyntheticScene& scene, int width, int height);

// Left-referenced ground truth: the top object's disparity, 0 on background.
DisparityMap scene_disparity(const SyntheticScene& scene, int width, int height, double search_range = 128);

// Keeps the central round(ratio * w) columns of both views.
StereoPair crop_retarget(const StereoPair& pair, double ratio);
// Bilinear horizontal rescale of both views to round(ratio * w) columns.
StereoPair scale_retarget(const StereoPair& pair, double ratio);

DisparityMap crop_disparity(const DisparityMap& d, double ratio);
// Resamples and multiplies values by the realized width ratio.
DisparityMap scale_disparity(const DisparityMap& d, double ratio);

// Deterministic positive C x (H/cell) x (W/cell) tensor derived from local
// oriented-filter energy. Stands in for exported network activations in the
// self-test data; it is not a learned representation.
FeatureMapTensor pseudo_feature_map(const GrayImage& img, int channels = 32, int cell = 16,
                                    std::uint64_t seed = 0x5eed);

// The three built-in scenes.
std::vector<SyntheticScene> fixture_scenes();
inline constexpr int kFixtureWidth = 400;
inline constexpr int kFixtureHeight = 240;

struct FixtureSummary {
  std::string manifest_path;
  std::size_t n_entries = 0;
};

// Writes PGM views, FMAP disparity and feature maps, and manifest.json for
// fixture_scenes() x {identity, crop 0.7, scale 0.7, scale 0.85}. Identity
// entries use a flat (zero disparity) rendering of the scene.
FixtureSummary write_fixtures(const std::string& out_dir);

}  // namespace hdavca
