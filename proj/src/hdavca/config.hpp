#pragma once

#include <string>

#include "hdavca/binocular.hpp"
#include "hdavca/disparity.hpp"
#include "hdavca/dnss.hpp"
#include "hdavca/eval.hpp"
#include "hdavca/local_ssim.hpp"
#include "hdavca/regression.hpp"

namespace hdavca {

enum class Mode { kFullReference, kNoReference };

struct RunConfig {
  Mode mode = Mode::kFullReference;
  BinocularParams binocular;
  LocalSsimParams local_ssim;
  DnssParams dnss;
  BlockMatchParams block_match;
  SvrParams svr;
  SplitParams split;
  // Read manifest disparity files when present; otherwise always estimate.
  bool use_disparity_files = true;
  // Shell command producing an FMAP for an image when a manifest entry has no
  // feature map. "{input}" and "{output}" are substituted.
  std::string featmap_command;
  // When set, per-entry keypoint/match JSON goes here.
  std::string dump_keypoints_dir;

  // Throws kInvalidArgument on out-of-range values.
  void validate() const;

  // Features the mode produces.
  FeatureMask mask() const;
};

// Starts from defaults and overrides whatever keys are present. Unknown keys
// are rejected so typos do not silently fall back to defaults.
RunConfig config_from_json(const std::string& text);
RunConfig load_config(const std::string& path);
std::string config_to_json(const RunConfig& config);

Mode parse_mode(const std::string& s);

}  // namespace hdavca
