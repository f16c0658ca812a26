#pragma once

#include <string>

#include "hdavca/image.hpp"

namespace hdavca {

// Horizontal disparity d = x_left - x_right in pixels. Positive values mean
// the point appears further left in the right view (crossed disparity).
struct DisparityMap {
  Raster values;
  double search_range = 0.0;

  int width() const noexcept { return values.width(); }
  int height() const noexcept { return values.height(); }
};

struct BlockMatchParams {
  int block = 9;
  int search_range = 128;
};

// Left-referenced SAD block matching with winner-take-all selection. Ties go
// to the smallest |d|, then to the negative candidate. Pixels whose block
// leaves the image copy the nearest estimated pixel.
DisparityMap estimate_disparity(const StereoPair& pair, const BlockMatchParams& params = {});

// FMAP file with dims (1, H, W).
DisparityMap load_disparity(const std::string& path, int expected_width, int expected_height);
void save_disparity(const DisparityMap& map, const std::string& path);

}  // namespace hdavca
