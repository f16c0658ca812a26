#include "hdavca/local_ssim.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>

#include "hdavca/error.hpp"

namespace hdavca {

namespace {

using Window = std::array<double, kSsimWindowSize * kSsimWindowSize>;

const Window& gaussian_window() {
  static const Window w = [] {
    const auto k = gaussian_kernel_1d(kSsimWindowSize, kSsimWindowSigma);
    Window out{};
    double sum = 0.0;
    for (int i = 0; i < kSsimWindowSize; ++i) {
      for (int j = 0; j < kSsimWindowSize; ++j) {
        out[i * kSsimWindowSize + j] = k[i] * k[j];
        sum += out[i * kSsimWindowSize + j];
      }
    }
    for (double& v : out) v /= sum;
    return out;
  }();
  return w;
}

double ssim_at(const GrayImage& a, const GrayImage& b, int x0, int y0) {
  const Window& w = gaussian_window();
  double mu_a = 0.0, mu_b = 0.0;
  for (int i = 0; i < kSsimWindowSize; ++i) {
    for (int j = 0; j < kSsimWindowSize; ++j) {
      const double wi = w[i * kSsimWindowSize + j];
      mu_a += wi * a.at(x0 + j, y0 + i);
      mu_b += wi * b.at(x0 + j, y0 + i);
    }
  }
  double var_a = 0.0, var_b = 0.0, cov = 0.0;
  for (int i = 0; i < kSsimWindowSize; ++i) {
    for (int j = 0; j < kSsimWindowSize; ++j) {
      const double wi = w[i * kSsimWindowSize + j];
      const double da = a.at(x0 + j, y0 + i) - mu_a;
      const double db = b.at(x0 + j, y0 + i) - mu_b;
      var_a += wi * da * da;
      var_b += wi * db * db;
      cov += wi * da * db;
    }
  }
  return ((2 * mu_a * mu_b + kSsimC1) * (2 * cov + kSsimC2)) /
         ((mu_a * mu_a + mu_b * mu_b + kSsimC1) * (var_a + var_b + kSsimC2));
}

// Top-left corner of the 33x33 patch around a keypoint, or nullopt when the
// patch would leave the image in drop mode.
std::optional<std::pair<int, int>> patch_origin(const GrayImage& img, const Keypoint& kp,
                                                BorderMode mode) {
  int cx = static_cast<int>(std::lround(kp.x));
  int cy = static_cast<int>(std::lround(kp.y));
  const int max_cx = img.width() - 1 - kSsimPatchHalf;
  const int max_cy = img.height() - 1 - kSsimPatchHalf;
  if (mode == BorderMode::kDrop) {
    if (cx < kSsimPatchHalf || cy < kSsimPatchHalf || cx > max_cx || cy > max_cy) return std::nullopt;
  }
  cx = std::clamp(cx, kSsimPatchHalf, max_cx);
  cy = std::clamp(cy, kSsimPatchHalf, max_cy);
  return std::pair{cx - kSsimPatchHalf, cy - kSsimPatchHalf};
}

}  // namespace

double windowed_ssim(const GrayImage& a, const GrayImage& b, SsimPooling pooling) {
  Require(a.width() == kSsimPatchSize && a.height() == kSsimPatchSize &&
              b.width() == kSsimPatchSize && b.height() == kSsimPatchSize,
          ErrorCode::kDimension, "wrong patch size: SSIM patches must be 33x33");
  if (pooling == SsimPooling::kCenterWindow) {
    constexpr int c = kSsimPatchHalf - kSsimWindowSize / 2;
    return ssim_at(a, b, c, c);
  }
  constexpr int positions = kSsimPatchSize - kSsimWindowSize + 1;
  double sum = 0.0;
  for (int y = 0; y < positions; ++y) {
    for (int x = 0; x < positions; ++x) sum += ssim_at(a, b, x, y);
  }
  return sum / (positions * positions);
}

LocalSsimFeature local_ssim_from_matches(const GrayImage& original_left,
                                         const GrayImage& retargeted_left,
                                         const std::vector<MatchPair>& matches,
                                         const LocalSsimParams& params) {
  Require(original_left.width() >= kSsimPatchSize && original_left.height() >= kSsimPatchSize &&
              retargeted_left.width() >= kSsimPatchSize &&
              retargeted_left.height() >= kSsimPatchSize,
          ErrorCode::kDimension, "images too small: Local-SSIM needs at least 33x33");
  LocalSsimFeature out;
  double sum = 0.0;
  for (const MatchPair& m : matches) {
    const auto ro = patch_origin(retargeted_left, m.retargeted_pt, params.border);
    const auto oo = patch_origin(original_left, m.original_pt, params.border);
    if (!ro || !oo) continue;
    const GrayImage pr = crop(retargeted_left, ro->first, ro->second, kSsimPatchSize, kSsimPatchSize);
    const GrayImage po = crop(original_left, oo->first, oo->second, kSsimPatchSize, kSsimPatchSize);
    sum += windowed_ssim(pr, po, params.pooling);
    ++out.n_matches;
  }
  // No matched structure: report the pessimistic value 0.
  out.value = out.n_matches == 0 ? 0.0 : sum / static_cast<double>(out.n_matches);
  return out;
}

LocalSsimFeature local_ssim_feature(const GrayImage& original_left, const GrayImage& retargeted_left,
                                    const LocalSsimParams& params) {
  Require(original_left.width() >= kSsimPatchSize && original_left.height() >= kSsimPatchSize &&
              retargeted_left.width() >= kSsimPatchSize &&
              retargeted_left.height() >= kSsimPatchSize,
          ErrorCode::kDimension, "images too small: Local-SSIM needs at least 33x33");
  const auto kp_ret = detect_and_describe(retargeted_left, params.sift);
  const auto kp_orig = detect_and_describe(original_left, params.sift);
  const auto matches = match_keypoints(kp_ret, kp_orig, params.sift.ratio);
  return local_ssim_from_matches(original_left, retargeted_left, matches, params);
}

}  // namespace hdavca
