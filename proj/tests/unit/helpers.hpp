#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "hdavca/image.hpp"
#include "oracles.hpp"

namespace testing {

inline hdavca::Raster random_raster(int w, int h, std::uint64_t seed, double lo = 0.0, double hi = 255.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  hdavca::Raster r(w, h);
  for (double& v : r.data()) v = u(rng);
  return r;
}

inline oracle::Grid to_grid(const hdavca::Raster& r) {
  return {r.width(), r.height(), {r.data().begin(), r.data().end()}};
}

// Fresh per-test scratch directory under the system temp folder.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("hdavca_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace testing
