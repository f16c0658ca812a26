#include "hdavca/features.hpp"

#include "hdavca/dnss.hpp"
#include "hdavca/error.hpp"

namespace hdavca {

FeatureMask FeatureMask::all() {
  FeatureMask m;
  m.bits_.set();
  return m;
}

FeatureMask FeatureMask::of(std::initializer_list<Family> families) {
  FeatureMask m;
  for (Family f : families) {
    const auto r = family_range(f);
    for (int i = 0; i < r.length; ++i) m.bits_.set(r.offset + i);
  }
  return m;
}

FeatureMask FeatureMask::disparity_features() {
  return of({Family::kDisparityRange, Family::kPerceptualAlternation, Family::kDisparityIntensity});
}

FeatureMask FeatureMask::parse(const std::string& bits) {
  if (bits.size() != kFeatureLength) Fail(ErrorCode::kFormat, "feature mask must have 72 entries");
  FeatureMask m;
  for (int i = 0; i < kFeatureLength; ++i) {
    if (bits[i] == '1') {
      m.bits_.set(i);
    } else if (bits[i] != '0') {
      Fail(ErrorCode::kFormat, "feature mask must contain only '0' and '1'");
    }
  }
  return m;
}

bool FeatureMask::active(Family f) const {
  const auto r = family_range(f);
  for (int i = 0; i < r.length; ++i) {
    if (!bits_.test(r.offset + i)) return false;
  }
  return true;
}

FeatureMask FeatureMask::operator&(const FeatureMask& o) const {
  FeatureMask m;
  m.bits_ = bits_ & o.bits_;
  return m;
}

FeatureMask FeatureMask::operator|(const FeatureMask& o) const {
  FeatureMask m;
  m.bits_ = bits_ | o.bits_;
  return m;
}

std::string FeatureMask::to_string() const {
  std::string s(kFeatureLength, '0');
  for (int i = 0; i < kFeatureLength; ++i) {
    if (bits_.test(i)) s[i] = '1';
  }
  return s;
}

void FeatureVector::apply_mask() {
  for (int i = 0; i < kFeatureLength; ++i) {
    if (!mask.active(i)) values[i] = 0.0;
  }
}

const std::vector<std::string>& feature_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n(kFeatureLength);
    n[0] = "local_ssim";
    static const char* kOri[] = {"h", "v", "d1", "d2"};
    static const char* kMap[] = {"sum", "diff"};
    static const char* kParam[] = {"eta", "lambda", "sigma_l2", "sigma_r2"};
    for (int s = 0; s < kDnssScales; ++s) {
      for (int o = 0; o < kDnssOrientations; ++o) {
        for (int m = 0; m < 2; ++m) {
          for (int p = 0; p < 4; ++p) {
            n[1 + dnss_index(s, static_cast<Orientation>(o), m, p)] =
                "dnss_s" + std::to_string(s + 1) + "_" + kOri[o] + "_" + kMap[m] + "_" + kParam[p];
          }
        }
      }
    }
    n[65] = "dr";
    n[66] = "pa_al";
    n[67] = "pa_ar";
    n[68] = "pa_re";
    n[69] = "did_m";
    n[70] = "did_v";
    n[71] = "sd";
    return n;
  }();
  return names;
}

std::vector<NamedMask> ablation_masks() {
  const FeatureMask df = FeatureMask::disparity_features();
  const FeatureMask ssim = FeatureMask::of({Family::kLocalSsim});
  const FeatureMask dnss = FeatureMask::of({Family::kDnss});
  const FeatureMask sd = FeatureMask::of({Family::kSemantic});
  return {
      {"Local-SSIM+D-NSS+SD", ssim | dnss | sd},
      {"DF+Local-SSIM+SD", df | ssim | sd},
      {"DF+Local-SSIM+D-NSS", df | ssim | dnss},
      {"DF+D-NSS+SD", df | dnss | sd},
      {"All", FeatureMask::all()},
      {"DF+D-NSS", df | dnss},
  };
}

}  // namespace hdavca
