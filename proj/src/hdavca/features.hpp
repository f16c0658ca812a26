#pragma once

#include <array>
#include <bitset>
#include <initializer_list>
#include <string>
#include <vector>

namespace hdavca {

// Canonical 72-dim layout:
//   [0]      Local-SSIM
//   [1, 65)  D-NSS (see dnss_index)
//   [65]     disparity range
//   [66, 69) perceptual alternation (A_l, A_r, R_E)
//   [69, 71) disparity intensity distribution (m, v)
//   [71]     semantic distortion
inline constexpr int kFeatureLength = 72;

enum class Family { kLocalSsim, kDnss, kDisparityRange, kPerceptualAlternation, kDisparityIntensity, kSemantic };

struct FamilyRange {
  int offset;
  int length;
};

constexpr FamilyRange family_range(Family f) {
  switch (f) {
    case Family::kLocalSsim: return {0, 1};
    case Family::kDnss: return {1, 64};
    case Family::kDisparityRange: return {65, 1};
    case Family::kPerceptualAlternation: return {66, 3};
    case Family::kDisparityIntensity: return {69, 2};
    case Family::kSemantic: return {71, 1};
  }
  return {0, 0};
}

class FeatureMask {
 public:
  FeatureMask() = default;
  static FeatureMask all();
  static FeatureMask none() { return {}; }
  static FeatureMask of(std::initializer_list<Family> families);
  // The three disparity-related families (range, alternation, intensity).
  static FeatureMask disparity_features();
  // 72 characters of '0'/'1'; throws kFormat on anything else.
  static FeatureMask parse(const std::string& bits);

  bool active(int dim) const { return bits_.test(dim); }
  bool active(Family f) const;
  int count() const { return static_cast<int>(bits_.count()); }
  FeatureMask operator&(const FeatureMask& o) const;
  FeatureMask operator|(const FeatureMask& o) const;
  std::string to_string() const;
  bool operator==(const FeatureMask& o) const = default;

 private:
  std::bitset<kFeatureLength> bits_;
};

struct FeatureVector {
  std::array<double, kFeatureLength> values{};
  FeatureMask mask = FeatureMask::all();

  // Zeroes every inactive entry.
  void apply_mask();
};

// Stable column names, in layout order.
const std::vector<std::string>& feature_names();

struct NamedMask {
  std::string name;
  FeatureMask mask;
};

// The four leave-one-family-group-out configurations, the full set, and the
// no-reference DF + D-NSS set.
std::vector<NamedMask> ablation_masks();

}  // namespace hdavca
