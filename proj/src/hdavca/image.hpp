#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace hdavca {

// Row-major raster of real values. Used for luminance images (values in
// [0, 255]) as well as derived signed maps (summation, difference, MSCN).
class Raster {
 public:
  Raster() = default;
  Raster(int width, int height, double fill = 0.0);
  Raster(int width, int height, std::vector<double> data);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& at(int x, int y) { return data_[static_cast<std::size_t>(y) * width_ + x]; }
  double at(int x, int y) const { return data_[static_cast<std::size_t>(y) * width_ + x]; }

  // Border-replicating read.
  double clamped(int x, int y) const;

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  const double* row(int y) const { return data_.data() + static_cast<std::size_t>(y) * width_; }
  double* row(int y) { return data_.data() + static_cast<std::size_t>(y) * width_; }

  bool operator==(const Raster& other) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<double> data_;
};

using GrayImage = Raster;
using RealMap = Raster;

struct StereoPair {
  GrayImage left;
  GrayImage right;

  StereoPair() = default;
  // Throws kDimension when the views differ in size.
  StereoPair(GrayImage left_view, GrayImage right_view);

  int width() const noexcept { return left.width(); }
  int height() const noexcept { return left.height(); }
};

// ITU-R BT.601 luma weights.
inline constexpr double kLumaR = 0.299;
inline constexpr double kLumaG = 0.587;
inline constexpr double kLumaB = 0.114;

// Loads PNG (8-bit gray, gray+alpha, RGB, RGBA, palette) or binary PGM (P5,
// maxval <= 255). Color inputs are converted to BT.601 luminance; values stay
// real-valued in [0, 255].
GrayImage load_image(const std::string& path);

// Writes a binary P5 PGM; values are rounded and clamped to [0, 255].
void save_pgm(const GrayImage& img, const std::string& path);

// Bilinear resampling with half-pixel center alignment and edge clamping.
Raster resize_bilinear(const Raster& img, int new_width, int new_height);

// Separable Gaussian blur with border replication. sigma <= 0 returns a copy.
Raster gaussian_blur(const Raster& img, double sigma);

// Sub-rectangle copy. The rectangle must lie inside the image.
Raster crop(const Raster& img, int x0, int y0, int width, int height);

// Normalized 1-D Gaussian taps of the given length.
std::vector<double> gaussian_kernel_1d(int length, double sigma);

}  // namespace hdavca
