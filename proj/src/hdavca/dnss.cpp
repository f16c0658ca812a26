#include "hdavca/dnss.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <vector>

#include "hdavca/error.hpp"

namespace hdavca {

std::pair<RealMap, RealMap> sum_diff_maps(const StereoPair& pair) {
  Require(pair.left.width() == pair.right.width() && pair.left.height() == pair.right.height(),
          ErrorCode::kDimension, "size mismatch between stereo views");
  RealMap sum(pair.width(), pair.height());
  RealMap diff(pair.width(), pair.height());
  auto l = pair.left.data();
  auto r = pair.right.data();
  auto s = sum.data();
  auto d = diff.data();
  for (std::size_t i = 0; i < l.size(); ++i) {
    s[i] = l[i] + r[i];
    d[i] = l[i] - r[i];
  }
  return {std::move(sum), std::move(diff)};
}

RealMap zca_whiten(const RealMap& map, int patch, double epsilon) {
  Require(patch >= 2, ErrorCode::kInvalidArgument, "ZCA patch size must be at least 2");
  Require(map.width() >= patch && map.height() >= patch, ErrorCode::kDimension,
          "map smaller than the ZCA patch");
  const int dim = patch * patch;
  const int nx = map.width() - patch + 1;
  const int ny = map.height() - patch + 1;

  // Pooled covariance of per-patch centered windows, one patch row at a time.
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(dim, dim);
  Eigen::MatrixXd block(dim, nx);
  for (int y0 = 0; y0 < ny; ++y0) {
    for (int x0 = 0; x0 < nx; ++x0) {
      double mean = 0.0;
      for (int i = 0; i < patch; ++i) {
        const double* row = map.row(y0 + i) + x0;
        for (int j = 0; j < patch; ++j) {
          block(i * patch + j, x0) = row[j];
          mean += row[j];
        }
      }
      block.col(x0).array() -= mean / dim;
    }
    cov.selfadjointView<Eigen::Lower>().rankUpdate(block);
  }
  // Only the lower triangle is populated; the eigensolver reads nothing else.
  cov /= static_cast<double>(nx) * ny;

  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  const Eigen::VectorXd scale =
      (eig.eigenvalues().array().max(0.0) + epsilon).rsqrt().matrix();
  const Eigen::MatrixXd whitening =
      eig.eigenvectors() * scale.asDiagonal() * eig.eigenvectors().transpose();

  const int center = patch / 2;
  const Eigen::VectorXd wc = whitening.row(center * patch + center).transpose();
  const double wc_sum = wc.sum();

  RealMap out(map.width(), map.height());
  for (int y0 = 0; y0 < ny; ++y0) {
    for (int x0 = 0; x0 < nx; ++x0) {
      double dot = 0.0;
      double mean = 0.0;
      for (int i = 0; i < patch; ++i) {
        const double* row = map.row(y0 + i) + x0;
        for (int j = 0; j < patch; ++j) {
          dot += wc[i * patch + j] * row[j];
          mean += row[j];
        }
      }
      out.at(x0 + center, y0 + center) = dot - (mean / dim) * wc_sum;
    }
  }
  // Replicate the nearest computed value into the border band.
  const int lo = center;
  const int hi_x = nx - 1 + center;
  const int hi_y = ny - 1 + center;
  for (int y = 0; y < out.height(); ++y) {
    const int sy = std::clamp(y, lo, hi_y);
    for (int x = 0; x < out.width(); ++x) {
      const int sx = std::clamp(x, lo, hi_x);
      if (sx != x || sy != y) out.at(x, y) = out.at(sx, sy);
    }
  }
  return out;
}

RealMap mscn(const RealMap& map, double c) {
  constexpr int kSize = 7;
  constexpr int kRadius = kSize / 2;
  static const std::vector<double> taps = [] {
    const auto k = gaussian_kernel_1d(kSize, 7.0 / 6.0);
    std::vector<double> w(kSize * kSize);
    double sum = 0.0;
    for (int i = 0; i < kSize; ++i) {
      for (int j = 0; j < kSize; ++j) sum += (w[i * kSize + j] = k[i] * k[j]);
    }
    for (double& v : w) v /= sum;
    return w;
  }();

  RealMap out(map.width(), map.height());
  std::array<double, kSize * kSize> window{};
  for (int y = 0; y < map.height(); ++y) {
    for (int x = 0; x < map.width(); ++x) {
      double mu = 0.0;
      for (int i = 0; i < kSize; ++i) {
        for (int j = 0; j < kSize; ++j) {
          const double v = map.clamped(x + j - kRadius, y + i - kRadius);
          window[i * kSize + j] = v;
          mu += taps[i * kSize + j] * v;
        }
      }
      double var = 0.0;
      for (int t = 0; t < kSize * kSize; ++t) {
        const double d = window[t] - mu;
        var += taps[t] * d * d;
      }
      out.at(x, y) = (map.at(x, y) - mu) / (std::sqrt(var) + c);
    }
  }
  return out;
}

RealMap paired_products(const RealMap& map, Orientation orientation) {
  Require(map.width() >= 2 && map.height() >= 2, ErrorCode::kDimension,
          "paired products need at least a 2x2 map");
  const int w = map.width() - 1;
  const int h = map.height() - 1;
  RealMap out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double v = 0.0;
      switch (orientation) {
        case Orientation::kH: v = map.at(x, y) * map.at(x + 1, y); break;
        case Orientation::kV: v = map.at(x, y) * map.at(x, y + 1); break;
        case Orientation::kD1: v = map.at(x, y) * map.at(x + 1, y + 1); break;
        case Orientation::kD2: v = map.at(x + 1, y) * map.at(x, y + 1); break;
      }
      out.at(x, y) = v;
    }
  }
  return out;
}

double aggd_rho(double lambda) {
  return std::exp(2.0 * std::lgamma(2.0 / lambda) - std::lgamma(1.0 / lambda) -
                  std::lgamma(3.0 / lambda));
}

namespace {

struct ShapeGrid {
  std::vector<double> lambda;
  std::vector<double> rho;
};

// lambda in [0.2, 10] with step 0.001.
const ShapeGrid& shape_grid() {
  static const ShapeGrid grid = [] {
    ShapeGrid g;
    for (int i = 200; i <= 10000; ++i) {
      const double l = i / 1000.0;
      g.lambda.push_back(l);
      g.rho.push_back(aggd_rho(l));
    }
    return g;
  }();
  return grid;
}

}  // namespace

AggdParams fit_aggd(std::span<const double> samples) {
  constexpr std::size_t kMinSamples = 64;
  if (samples.size() < kMinSamples) Fail(ErrorCode::kDegenerate, "degenerate sample set");
  double sum_l2 = 0.0, sum_r2 = 0.0, sum_abs = 0.0;
  std::size_t n_l = 0, n_r = 0;
  for (double x : samples) {
    if (x < 0) {
      sum_l2 += x * x;
      ++n_l;
    } else if (x > 0) {
      sum_r2 += x * x;
      ++n_r;
    }
    sum_abs += std::abs(x);
  }
  const double sum_sq = sum_l2 + sum_r2;
  if (sum_sq <= 0.0) Fail(ErrorCode::kDegenerate, "degenerate sample set");

  const double n = static_cast<double>(samples.size());
  AggdParams p;
  p.sigma_l2 = n_l ? sum_l2 / n_l : 0.0;
  p.sigma_r2 = n_r ? sum_r2 / n_r : 0.0;
  const double mean_abs = sum_abs / n;
  const double r_hat = mean_abs * mean_abs / (sum_sq / n);
  double r_big = r_hat;
  if (p.sigma_l2 > 0 && p.sigma_r2 > 0) {
    const double g = std::sqrt(p.sigma_l2) / std::sqrt(p.sigma_r2);
    r_big = r_hat * (g * g * g + 1) * (g + 1) / ((g * g + 1) * (g * g + 1));
  }

  const ShapeGrid& grid = shape_grid();
  std::size_t best = 0;
  double best_err = std::abs(grid.rho[0] - r_big);
  for (std::size_t i = 1; i < grid.rho.size(); ++i) {
    const double err = std::abs(grid.rho[i] - r_big);
    if (err < best_err) {
      best_err = err;
      best = i;
    }
  }
  p.lambda = grid.lambda[best];

  const double l = p.lambda;
  const double spread = std::sqrt(std::tgamma(1.0 / l) / std::tgamma(3.0 / l));
  const double rho_l = std::sqrt(p.sigma_l2) * spread;
  const double rho_r = std::sqrt(p.sigma_r2) * spread;
  p.eta = (rho_l - rho_r) * std::tgamma(2.0 / l) / std::tgamma(1.0 / l);
  return p;
}

DnssFeature dnss_feature(const StereoPair& pair, const DnssParams& params) {
  Require(pair.width() >= 16 && pair.height() >= 16, ErrorCode::kDimension,
          "D-NSS needs views of at least 16x16");
  auto [sum, diff] = sum_diff_maps(pair);
  const RealMap* maps[2] = {&sum, &diff};

  DnssFeature f;
  for (int m = 0; m < 2; ++m) {
    const RealMap whitened = zca_whiten(*maps[m], params.zca_patch, params.zca_epsilon);
    for (int s = 0; s < kDnssScales; ++s) {
      const RealMap normalized =
          mscn(s == 0 ? whitened
                      : resize_bilinear(whitened, std::max(1, whitened.width() / 2),
                                        std::max(1, whitened.height() / 2)),
               params.mscn_c);
      for (int o = 0; o < kDnssOrientations; ++o) {
        const auto orientation = static_cast<Orientation>(o);
        const RealMap products = paired_products(normalized, orientation);
        AggdParams a;
        try {
          a = fit_aggd(products.data());
        } catch (const Error& e) {
          if (e.code() != ErrorCode::kDegenerate) throw;
          a = kDegenerateAggd;
        }
        f.values[dnss_index(s, orientation, m, 0)] = a.eta;
        f.values[dnss_index(s, orientation, m, 1)] = a.lambda;
        f.values[dnss_index(s, orientation, m, 2)] = a.sigma_l2;
        f.values[dnss_index(s, orientation, m, 3)] = a.sigma_r2;
      }
    }
  }
  return f;
}

}  // namespace hdavca
