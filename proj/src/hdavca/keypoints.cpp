#include "hdavca/keypoints.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <tuple>

#include "hdavca/error.hpp"

namespace hdavca {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr int kImageBorder = 5;
constexpr int kMaxInterpSteps = 5;
constexpr double kInitialBlur = 0.5;

constexpr int kOriBins = 36;
constexpr double kOriSigmaFactor = 1.5;
constexpr double kOriRadiusFactor = 3.0 * kOriSigmaFactor;
constexpr double kOriPeakRatio = 0.8;

constexpr int kDescWidth = 4;
constexpr int kDescBins = 8;
constexpr double kDescScaleFactor = 3.0;
constexpr double kDescMagClamp = 0.2;

struct Pyramid {
  std::vector<std::vector<Raster>> gauss;  // octave_layers + 3 per octave
  std::vector<std::vector<Raster>> dog;    // octave_layers + 2 per octave
};

Raster downsample_by_two(const Raster& src) {
  Raster out(std::max(1, src.width() / 2), std::max(1, src.height() / 2));
  for (int y = 0; y < out.height(); ++y) {
    for (int x = 0; x < out.width(); ++x) out.at(x, y) = src.at(2 * x, 2 * y);
  }
  return out;
}

Raster subtract(const Raster& a, const Raster& b) {
  Raster out(a.width(), a.height());
  auto pa = a.data();
  auto pb = b.data();
  auto po = out.data();
  for (std::size_t i = 0; i < po.size(); ++i) po[i] = pa[i] - pb[i];
  return out;
}

Pyramid build_pyramid(const Raster& base, int octaves, const SiftParams& p) {
  const int layers = p.octave_layers;
  std::vector<double> increments(layers + 3);
  increments[0] = p.sigma;
  const double k = std::pow(2.0, 1.0 / layers);
  for (int i = 1; i < layers + 3; ++i) {
    const double prev = std::pow(k, i - 1) * p.sigma;
    const double total = prev * k;
    increments[i] = std::sqrt(total * total - prev * prev);
  }

  Pyramid pyr;
  pyr.gauss.resize(octaves);
  pyr.dog.resize(octaves);
  for (int o = 0; o < octaves; ++o) {
    auto& g = pyr.gauss[o];
    g.reserve(layers + 3);
    g.push_back(o == 0 ? base : downsample_by_two(pyr.gauss[o - 1][layers]));
    for (int i = 1; i < layers + 3; ++i) g.push_back(gaussian_blur(g[i - 1], increments[i]));
    auto& d = pyr.dog[o];
    d.reserve(layers + 2);
    for (int i = 0; i < layers + 2; ++i) d.push_back(subtract(g[i + 1], g[i]));
  }
  return pyr;
}

bool is_extremum(const std::vector<Raster>& dog, int layer, int x, int y) {
  const double v = dog[layer].at(x, y);
  const bool maximum = v > 0;
  for (int l = layer - 1; l <= layer + 1; ++l) {
    const Raster& m = dog[l];
    for (int yy = y - 1; yy <= y + 1; ++yy) {
      for (int xx = x - 1; xx <= x + 1; ++xx) {
        if (l == layer && yy == y && xx == x) continue;
        const double n = m.at(xx, yy);
        if (maximum ? n > v : n < v) return false;
      }
    }
  }
  return true;
}

struct Extremum {
  int x, y, layer;          // integer location after refinement
  double fx, fy, flayer;    // refined, octave coordinates
};

std::optional<Extremum> refine(const std::vector<Raster>& dog, int layer, int x, int y,
                               const SiftParams& p) {
  const int w = dog[0].width();
  const int h = dog[0].height();
  Eigen::Vector3d offset = Eigen::Vector3d::Zero();
  Eigen::Vector3d grad;
  int step = 0;
  for (; step < kMaxInterpSteps; ++step) {
    const Raster& prev = dog[layer - 1];
    const Raster& cur = dog[layer];
    const Raster& next = dog[layer + 1];
    const double v2 = 2.0 * cur.at(x, y);
    grad << (cur.at(x + 1, y) - cur.at(x - 1, y)) * 0.5,
        (cur.at(x, y + 1) - cur.at(x, y - 1)) * 0.5, (next.at(x, y) - prev.at(x, y)) * 0.5;
    const double dxx = cur.at(x + 1, y) + cur.at(x - 1, y) - v2;
    const double dyy = cur.at(x, y + 1) + cur.at(x, y - 1) - v2;
    const double dss = next.at(x, y) + prev.at(x, y) - v2;
    const double dxy = (cur.at(x + 1, y + 1) - cur.at(x - 1, y + 1) - cur.at(x + 1, y - 1) +
                        cur.at(x - 1, y - 1)) * 0.25;
    const double dxs = (next.at(x + 1, y) - next.at(x - 1, y) - prev.at(x + 1, y) +
                        prev.at(x - 1, y)) * 0.25;
    const double dys = (next.at(x, y + 1) - next.at(x, y - 1) - prev.at(x, y + 1) +
                        prev.at(x, y - 1)) * 0.25;
    Eigen::Matrix3d hess;
    hess << dxx, dxy, dxs, dxy, dyy, dys, dxs, dys, dss;
    const Eigen::FullPivLU<Eigen::Matrix3d> lu(hess);
    if (!lu.isInvertible()) return std::nullopt;
    offset = -lu.solve(grad);
    if (std::abs(offset[0]) < 0.5 && std::abs(offset[1]) < 0.5 && std::abs(offset[2]) < 0.5) break;
    if (offset.cwiseAbs().maxCoeff() > static_cast<double>(std::max(w, h))) return std::nullopt;
    x += static_cast<int>(std::lround(offset[0]));
    y += static_cast<int>(std::lround(offset[1]));
    layer += static_cast<int>(std::lround(offset[2]));
    if (layer < 1 || layer > p.octave_layers || x < kImageBorder || x >= w - kImageBorder ||
        y < kImageBorder || y >= h - kImageBorder) {
      return std::nullopt;
    }
  }
  if (step >= kMaxInterpSteps) return std::nullopt;

  const Raster& cur = dog[layer];
  const double contrast = cur.at(x, y) + 0.5 * grad.dot(offset);
  if (std::abs(contrast) < p.contrast_threshold) return std::nullopt;

  const double v2 = 2.0 * cur.at(x, y);
  const double dxx = cur.at(x + 1, y) + cur.at(x - 1, y) - v2;
  const double dyy = cur.at(x, y + 1) + cur.at(x, y - 1) - v2;
  const double dxy = (cur.at(x + 1, y + 1) - cur.at(x - 1, y + 1) - cur.at(x + 1, y - 1) +
                      cur.at(x - 1, y - 1)) * 0.25;
  const double trace = dxx + dyy;
  const double det = dxx * dyy - dxy * dxy;
  const double r = p.edge_threshold;
  if (det <= 0 || trace * trace * r >= (r + 1) * (r + 1) * det) return std::nullopt;

  return Extremum{x, y, layer, x + offset[0], y + offset[1], layer + offset[2]};
}

double wrap_angle(double a) {
  a = std::fmod(a, kTwoPi);
  if (a < 0) a += kTwoPi;
  if (a >= kTwoPi) a = 0.0;
  return a;
}

std::vector<double> dominant_orientations(const Raster& g, int xi, int yi, double sigma_oct) {
  const int radius = static_cast<int>(std::lround(kOriRadiusFactor * sigma_oct));
  const double weight_sigma = kOriSigmaFactor * sigma_oct;
  const double expf = -1.0 / (2.0 * weight_sigma * weight_sigma);
  std::array<double, kOriBins> raw{};
  for (int dy = -radius; dy <= radius; ++dy) {
    const int py = yi + dy;
    if (py <= 0 || py >= g.height() - 1) continue;
    for (int dx = -radius; dx <= radius; ++dx) {
      const int px = xi + dx;
      if (px <= 0 || px >= g.width() - 1) continue;
      const double gx = g.at(px + 1, py) - g.at(px - 1, py);
      const double gy = g.at(px, py + 1) - g.at(px, py - 1);
      const double mag = std::hypot(gx, gy);
      const double ang = wrap_angle(std::atan2(gy, gx));
      int bin = static_cast<int>(std::lround(ang * kOriBins / kTwoPi));
      if (bin >= kOriBins) bin -= kOriBins;
      raw[bin] += std::exp((dx * dx + dy * dy) * expf) * mag;
    }
  }
  std::array<double, kOriBins> hist{};
  auto at = [&](int i) { return raw[(i + kOriBins) % kOriBins]; };
  for (int i = 0; i < kOriBins; ++i) {
    hist[i] = (at(i - 2) + at(i + 2)) * (1.0 / 16.0) + (at(i - 1) + at(i + 1)) * (4.0 / 16.0) +
              at(i) * (6.0 / 16.0);
  }
  const double max_val = *std::max_element(hist.begin(), hist.end());
  std::vector<double> out;
  if (max_val <= 0) return out;
  for (int i = 0; i < kOriBins; ++i) {
    const double l = hist[(i + kOriBins - 1) % kOriBins];
    const double r = hist[(i + 1) % kOriBins];
    const double c = hist[i];
    if (c > l && c > r && c >= kOriPeakRatio * max_val) {
      const double bin = i + 0.5 * (l - r) / (l - 2.0 * c + r);
      out.push_back(wrap_angle(bin * kTwoPi / kOriBins));
    }
  }
  return out;
}

Descriptor compute_descriptor(const Raster& g, int xi, int yi, double angle, double sigma_oct) {
  constexpr int d = kDescWidth;
  constexpr int n = kDescBins;
  const double bins_per_rad = n / kTwoPi;
  const double exp_scale = -1.0 / (d * d * 0.5);
  const double hist_width = kDescScaleFactor * sigma_oct;
  int radius = static_cast<int>(std::lround(hist_width * std::numbers::sqrt2 * (d + 1) * 0.5));
  radius = std::min(radius, static_cast<int>(std::hypot(g.width(), g.height())));
  const double cos_t = std::cos(angle) / hist_width;
  const double sin_t = std::sin(angle) / hist_width;

  std::vector<double> hist((d + 2) * (d + 2) * (n + 2), 0.0);
  auto idx = [](int r, int c, int o) { return ((r + 1) * (d + 2) + (c + 1)) * (n + 2) + o; };

  for (int i = -radius; i <= radius; ++i) {
    const int py = yi + i;
    if (py <= 0 || py >= g.height() - 1) continue;
    for (int j = -radius; j <= radius; ++j) {
      const int px = xi + j;
      if (px <= 0 || px >= g.width() - 1) continue;
      const double c_rot = j * cos_t + i * sin_t;
      const double r_rot = -j * sin_t + i * cos_t;
      const double rbin = r_rot + d / 2.0 - 0.5;
      const double cbin = c_rot + d / 2.0 - 0.5;
      if (rbin <= -1 || rbin >= d || cbin <= -1 || cbin >= d) continue;

      const double gx = g.at(px + 1, py) - g.at(px - 1, py);
      const double gy = g.at(px, py + 1) - g.at(px, py - 1);
      const double mag = std::hypot(gx, gy) * std::exp((c_rot * c_rot + r_rot * r_rot) * exp_scale);
      const double obin = wrap_angle(std::atan2(gy, gx) - angle) * bins_per_rad;

      const int r0 = static_cast<int>(std::floor(rbin));
      const int c0 = static_cast<int>(std::floor(cbin));
      int o0 = static_cast<int>(std::floor(obin));
      const double dr = rbin - r0;
      const double dc = cbin - c0;
      const double dob = obin - o0;
      o0 = ((o0 % n) + n) % n;

      const double v_r1 = mag * dr, v_r0 = mag - v_r1;
      const double v_rc11 = v_r1 * dc, v_rc10 = v_r1 - v_rc11;
      const double v_rc01 = v_r0 * dc, v_rc00 = v_r0 - v_rc01;
      hist[idx(r0, c0, o0)] += v_rc00 * (1 - dob);
      hist[idx(r0, c0, o0 + 1)] += v_rc00 * dob;
      hist[idx(r0, c0 + 1, o0)] += v_rc01 * (1 - dob);
      hist[idx(r0, c0 + 1, o0 + 1)] += v_rc01 * dob;
      hist[idx(r0 + 1, c0, o0)] += v_rc10 * (1 - dob);
      hist[idx(r0 + 1, c0, o0 + 1)] += v_rc10 * dob;
      hist[idx(r0 + 1, c0 + 1, o0)] += v_rc11 * (1 - dob);
      hist[idx(r0 + 1, c0 + 1, o0 + 1)] += v_rc11 * dob;
    }
  }

  Descriptor desc{};
  for (int r = 0; r < d; ++r) {
    for (int c = 0; c < d; ++c) {
      const int base = idx(r, c, 0);
      hist[base] += hist[base + n];
      hist[base + 1] += hist[base + n + 1];
      for (int o = 0; o < n; ++o) desc[(r * d + c) * n + o] = hist[base + o];
    }
  }

  auto norm = [&desc] {
    double s = 0.0;
    for (double v : desc) s += v * v;
    return std::sqrt(s);
  };
  const double n1 = norm();
  if (n1 <= 0) return desc;
  const double clamp = kDescMagClamp * n1;
  for (double& v : desc) v = std::min(v, clamp);
  const double n2 = norm();
  for (double& v : desc) v /= n2;
  return desc;
}

}  // namespace

std::vector<Keypoint> detect_and_describe(const GrayImage& img, const SiftParams& params) {
  Require(params.octave_layers >= 1 && params.sigma > 0, ErrorCode::kInvalidArgument,
          "invalid SIFT parameters");
  if (img.width() < 2 * kImageBorder + 3 || img.height() < 2 * kImageBorder + 3) return {};

  Raster base(img.width(), img.height());
  {
    auto src = img.data();
    auto dst = base.data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = src[i] / 255.0;
  }
  double sigma_diff;
  if (params.upsample) {
    base = resize_bilinear(base, img.width() * 2, img.height() * 2);
    sigma_diff = std::sqrt(std::max(params.sigma * params.sigma - 4 * kInitialBlur * kInitialBlur, 0.01));
  } else {
    sigma_diff = std::sqrt(std::max(params.sigma * params.sigma - kInitialBlur * kInitialBlur, 0.01));
  }
  base = gaussian_blur(base, sigma_diff);

  const int min_dim = std::min(base.width(), base.height());
  const int octaves = std::max(1, static_cast<int>(std::floor(std::log2(min_dim))) - 3);
  const Pyramid pyr = build_pyramid(base, octaves, params);

  const double prefilter = 0.5 * params.contrast_threshold;
  std::vector<Keypoint> out;
  for (int o = 0; o < octaves; ++o) {
    const auto& dog = pyr.dog[o];
    const int w = dog[0].width();
    const int h = dog[0].height();
    if (w < 2 * kImageBorder + 1 || h < 2 * kImageBorder + 1) break;
    const double octave_scale = std::ldexp(1.0, o);
    for (int layer = 1; layer <= params.octave_layers; ++layer) {
      for (int y = kImageBorder; y < h - kImageBorder; ++y) {
        for (int x = kImageBorder; x < w - kImageBorder; ++x) {
          if (std::abs(dog[layer].at(x, y)) <= prefilter) continue;
          if (!is_extremum(dog, layer, x, y)) continue;
          const auto ext = refine(dog, layer, x, y, params);
          if (!ext) continue;

          const double sigma_oct = params.sigma * std::pow(2.0, ext->flayer / params.octave_layers);
          const Raster& g = pyr.gauss[o][ext->layer];
          const int xi = static_cast<int>(std::lround(ext->fx));
          const int yi = static_cast<int>(std::lround(ext->fy));

          double sx = ext->fx * octave_scale;
          double sy = ext->fy * octave_scale;
          double scale = sigma_oct * octave_scale;
          if (params.upsample) {
            sx = (sx + 0.5) / 2.0 - 0.5;
            sy = (sy + 0.5) / 2.0 - 0.5;
            scale /= 2.0;
          }
          sx = std::clamp(sx, 0.0, img.width() - 1.0);
          sy = std::clamp(sy, 0.0, img.height() - 1.0);

          for (double angle : dominant_orientations(g, xi, yi, sigma_oct)) {
            Keypoint kp;
            kp.x = sx;
            kp.y = sy;
            kp.scale = scale;
            kp.orientation = angle;
            kp.descriptor = compute_descriptor(g, xi, yi, angle, sigma_oct);
            out.push_back(kp);
          }
        }
      }
    }
  }

  auto key = [](const Keypoint& k) { return std::tie(k.x, k.y, k.scale, k.orientation); };
  std::sort(out.begin(), out.end(), [&](const Keypoint& a, const Keypoint& b) { return key(a) < key(b); });
  out.erase(std::unique(out.begin(), out.end(),
                        [&](const Keypoint& a, const Keypoint& b) {
                          return key(a) == key(b) || a.descriptor == b.descriptor;
                        }),
            out.end());
  return out;
}

double descriptor_distance(const Descriptor& a, const Descriptor& b) {
  double s = 0.0;
  for (int i = 0; i < kDescriptorLength; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

std::vector<MatchPair> match_keypoints(const std::vector<Keypoint>& src,
                                       const std::vector<Keypoint>& dst, double ratio) {
  if (src.empty() || dst.empty()) return {};
  constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> owner(dst.size(), kNone);
  std::vector<double> owner_dist(dst.size(), std::numeric_limits<double>::infinity());

  for (std::size_t i = 0; i < src.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    double second = std::numeric_limits<double>::infinity();
    std::size_t best_j = kNone;
    for (std::size_t j = 0; j < dst.size(); ++j) {
      const double dist = descriptor_distance(src[i].descriptor, dst[j].descriptor);
      if (dist < best) {
        second = best;
        best = dist;
        best_j = j;
      } else if (dist < second) {
        second = dist;
      }
    }
    // A single candidate has no runner-up and passes the ratio test.
    if (!(best < ratio * second)) continue;
    if (best < owner_dist[best_j]) {
      owner[best_j] = i;
      owner_dist[best_j] = best;
    }
  }

  std::vector<std::pair<std::size_t, std::size_t>> kept;
  for (std::size_t j = 0; j < dst.size(); ++j) {
    if (owner[j] != kNone) kept.emplace_back(owner[j], j);
  }
  std::sort(kept.begin(), kept.end());
  std::vector<MatchPair> out;
  out.reserve(kept.size());
  for (auto [i, j] : kept) out.push_back({src[i], dst[j], owner_dist[j]});
  return out;
}

}  // namespace hdavca
