#pragma once

#include <array>
#include <vector>

#include "hdavca/image.hpp"

namespace hdavca {

inline constexpr int kDescriptorLength = 128;
using Descriptor = std::array<double, kDescriptorLength>;

struct Keypoint {
  double x = 0.0;            // column, sub-pixel, source image coordinates
  double y = 0.0;            // row
  double scale = 0.0;        // sigma in source-image pixels
  double orientation = 0.0;  // radians in [0, 2*pi), image axes (y down)
  Descriptor descriptor{};   // L2-normalized
};

struct MatchPair {
  Keypoint retargeted_pt;
  Keypoint original_pt;
  double distance = 0.0;
};

struct SiftParams {
  int octave_layers = 3;
  double sigma = 1.6;
  // Threshold on |D(x_hat)| with intensities normalized to [0, 1].
  double contrast_threshold = 0.03;
  double edge_threshold = 10.0;
  // Double the input before building the pyramid (assumes input blur 0.5).
  bool upsample = true;
  double ratio = 0.8;
};

// DoG scale-space detector with sub-pixel refinement, contrast and edge
// filtering, dominant orientations and 4x4x8 gradient-histogram descriptors.
std::vector<Keypoint> detect_and_describe(const GrayImage& img, const SiftParams& params = {});

// Ratio-test matching from src to dst with one-to-one enforcement on dst.
// The result is ordered by src index.
std::vector<MatchPair> match_keypoints(const std::vector<Keypoint>& src,
                                       const std::vector<Keypoint>& dst, double ratio = 0.8);

double descriptor_distance(const Descriptor& a, const Descriptor& b);

}  // namespace hdavca
