#include "hdavca/config.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include "json.hpp"

#include "hdavca/error.hpp"

namespace hdavca {

using nlohmann::json;

Mode parse_mode(const std::string& s) {
  if (s == "FR" || s == "fr") return Mode::kFullReference;
  if (s == "NR" || s == "nr") return Mode::kNoReference;
  Fail(ErrorCode::kInvalidArgument, "mode must be FR or NR, got '" + s + "'");
}

void RunConfig::validate() const {
  binocular.zone.validate();
  Require(binocular.did_weight >= 0 && binocular.did_weight <= 1, ErrorCode::kInvalidArgument,
          "did_weight must lie in [0, 1]");
  Require(local_ssim.sift.octave_layers >= 1 && local_ssim.sift.sigma > 0 &&
              local_ssim.sift.contrast_threshold >= 0 && local_ssim.sift.edge_threshold > 1,
          ErrorCode::kInvalidArgument, "invalid keypoint detector parameters");
  Require(local_ssim.sift.ratio > 0 && local_ssim.sift.ratio <= 1, ErrorCode::kInvalidArgument,
          "match ratio must lie in (0, 1]");
  Require(dnss.zca_patch >= 2 && dnss.zca_epsilon > 0 && dnss.mscn_c > 0, ErrorCode::kInvalidArgument,
          "invalid D-NSS parameters");
  Require(block_match.block >= 1 && block_match.block % 2 == 1 && block_match.search_range >= 0,
          ErrorCode::kInvalidArgument, "block size must be odd and positive, search range non-negative");
  Require(svr.c > 0 && svr.gamma > 0 && svr.epsilon >= 0 && svr.tolerance > 0 && svr.max_iterations > 0,
          ErrorCode::kInvalidArgument, "invalid SVR parameters");
  Require(split.n_splits >= 1 && split.train_frac > 0 && split.train_frac < 1, ErrorCode::kInvalidArgument,
          "invalid split parameters");
}

FeatureMask RunConfig::mask() const {
  if (mode == Mode::kNoReference) return FeatureMask::disparity_features() | FeatureMask::of({Family::kDnss});
  return FeatureMask::all();
}

namespace {

template <typename T>
void take(const json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end()) out = it->get<T>();
}

void reject_unknown(const json& j, std::initializer_list<const char*> keys, const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* k : keys) known = known || it.key() == k;
    if (!known) Fail(ErrorCode::kFormat, "unknown config key '" + where + it.key() + "'");
  }
}

const char* rank_mode_name(RankMode m) { return m == RankMode::kJndSteps ? "jnd_steps" : "independent_bins"; }
const char* tiling_name(TilingMode m) { return m == TilingMode::kPartition ? "partition" : "sliding"; }

}  // namespace

RunConfig config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    Fail(ErrorCode::kFormat, std::string("malformed config: ") + e.what());
  }
  Require(j.is_object(), ErrorCode::kFormat, "malformed config: expected an object");
  RunConfig c;
  try {
    reject_unknown(j,
                   {"mode", "comfort_zone", "did_weight", "rank_mode", "tiling", "disparity_normalize", "sift",
                    "ssim_border", "ssim_pooling", "zca_patch", "zca_epsilon", "mscn_c", "block_size",
                    "search_range", "use_disparity_files", "featmap_command", "dump_keypoints_dir", "svr", "split"},
                   "");
    if (j.contains("mode")) c.mode = parse_mode(j["mode"].get<std::string>());
    if (j.contains("comfort_zone")) {
      const auto& z = j["comfort_zone"];
      reject_unknown(z, {"d_min", "d_max", "alpha", "beta"}, "comfort_zone.");
      take(z, "d_min", c.binocular.zone.d_min);
      take(z, "d_max", c.binocular.zone.d_max);
      take(z, "alpha", c.binocular.zone.alpha);
      take(z, "beta", c.binocular.zone.beta);
    }
    take(j, "did_weight", c.binocular.did_weight);
    if (j.contains("rank_mode")) {
      const auto s = j["rank_mode"].get<std::string>();
      if (s == "jnd_steps") c.binocular.rank_mode = RankMode::kJndSteps;
      else if (s == "independent_bins") c.binocular.rank_mode = RankMode::kIndependentBins;
      else Fail(ErrorCode::kInvalidArgument, "rank_mode must be jnd_steps or independent_bins");
    }
    if (j.contains("tiling")) {
      const auto s = j["tiling"].get<std::string>();
      if (s == "partition") c.binocular.tiling = TilingMode::kPartition;
      else if (s == "sliding") c.binocular.tiling = TilingMode::kSliding;
      else Fail(ErrorCode::kInvalidArgument, "tiling must be partition or sliding");
    }
    take(j, "disparity_normalize", c.binocular.normalize_disparity);
    if (j.contains("sift")) {
      const auto& s = j["sift"];
      reject_unknown(s, {"octave_layers", "sigma", "contrast_threshold", "edge_threshold", "upsample", "ratio"},
                     "sift.");
      take(s, "octave_layers", c.local_ssim.sift.octave_layers);
      take(s, "sigma", c.local_ssim.sift.sigma);
      take(s, "contrast_threshold", c.local_ssim.sift.contrast_threshold);
      take(s, "edge_threshold", c.local_ssim.sift.edge_threshold);
      take(s, "upsample", c.local_ssim.sift.upsample);
      take(s, "ratio", c.local_ssim.sift.ratio);
    }
    if (j.contains("ssim_border")) {
      const auto s = j["ssim_border"].get<std::string>();
      if (s == "clamp") c.local_ssim.border = BorderMode::kClamp;
      else if (s == "drop") c.local_ssim.border = BorderMode::kDrop;
      else Fail(ErrorCode::kInvalidArgument, "ssim_border must be clamp or drop");
    }
    if (j.contains("ssim_pooling")) {
      const auto s = j["ssim_pooling"].get<std::string>();
      if (s == "mean_map") c.local_ssim.pooling = SsimPooling::kMeanMap;
      else if (s == "center_window") c.local_ssim.pooling = SsimPooling::kCenterWindow;
      else Fail(ErrorCode::kInvalidArgument, "ssim_pooling must be mean_map or center_window");
    }
    take(j, "zca_patch", c.dnss.zca_patch);
    take(j, "zca_epsilon", c.dnss.zca_epsilon);
    take(j, "mscn_c", c.dnss.mscn_c);
    take(j, "block_size", c.block_match.block);
    take(j, "search_range", c.block_match.search_range);
    take(j, "use_disparity_files", c.use_disparity_files);
    take(j, "featmap_command", c.featmap_command);
    take(j, "dump_keypoints_dir", c.dump_keypoints_dir);
    if (j.contains("svr")) {
      const auto& s = j["svr"];
      reject_unknown(s, {"c", "gamma", "epsilon", "tolerance", "max_iterations", "grid_search"}, "svr.");
      take(s, "c", c.svr.c);
      take(s, "gamma", c.svr.gamma);
      take(s, "epsilon", c.svr.epsilon);
      take(s, "tolerance", c.svr.tolerance);
      take(s, "max_iterations", c.svr.max_iterations);
      take(s, "grid_search", c.split.grid_search);
    }
    if (j.contains("split")) {
      const auto& s = j["split"];
      reject_unknown(s, {"n_splits", "train_frac", "seed", "group_by_content", "logistic_fit"}, "split.");
      take(s, "n_splits", c.split.n_splits);
      take(s, "train_frac", c.split.train_frac);
      take(s, "seed", c.split.seed);
      take(s, "group_by_content", c.split.group_by_content);
      take(s, "logistic_fit", c.split.logistic_fit);
    }
  } catch (const json::exception& e) {
    Fail(ErrorCode::kFormat, std::string("malformed config: ") + e.what());
  }
  c.validate();
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) Fail(ErrorCode::kIo, "unreadable file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return config_from_json(ss.str());
}

std::string config_to_json(const RunConfig& c) {
  nlohmann::ordered_json j;
  j["mode"] = c.mode == Mode::kFullReference ? "FR" : "NR";
  j["comfort_zone"] = {{"d_min", c.binocular.zone.d_min},
                       {"d_max", c.binocular.zone.d_max},
                       {"alpha", c.binocular.zone.alpha},
                       {"beta", c.binocular.zone.beta}};
  j["did_weight"] = c.binocular.did_weight;
  j["rank_mode"] = rank_mode_name(c.binocular.rank_mode);
  j["tiling"] = tiling_name(c.binocular.tiling);
  j["disparity_normalize"] = c.binocular.normalize_disparity;
  j["sift"] = {{"octave_layers", c.local_ssim.sift.octave_layers},
               {"sigma", c.local_ssim.sift.sigma},
               {"contrast_threshold", c.local_ssim.sift.contrast_threshold},
               {"edge_threshold", c.local_ssim.sift.edge_threshold},
               {"upsample", c.local_ssim.sift.upsample},
               {"ratio", c.local_ssim.sift.ratio}};
  j["ssim_border"] = c.local_ssim.border == BorderMode::kClamp ? "clamp" : "drop";
  j["ssim_pooling"] = c.local_ssim.pooling == SsimPooling::kMeanMap ? "mean_map" : "center_window";
  j["zca_patch"] = c.dnss.zca_patch;
  j["zca_epsilon"] = c.dnss.zca_epsilon;
  j["mscn_c"] = c.dnss.mscn_c;
  j["block_size"] = c.block_match.block;
  j["search_range"] = c.block_match.search_range;
  j["use_disparity_files"] = c.use_disparity_files;
  j["featmap_command"] = c.featmap_command;
  j["dump_keypoints_dir"] = c.dump_keypoints_dir;
  j["svr"] = {{"c", c.svr.c},
              {"gamma", c.svr.gamma},
              {"epsilon", c.svr.epsilon},
              {"tolerance", c.svr.tolerance},
              {"max_iterations", c.svr.max_iterations},
              {"grid_search", c.split.grid_search}};
  j["split"] = {{"n_splits", c.split.n_splits},
                {"train_frac", c.split.train_frac},
                {"seed", c.split.seed},
                {"group_by_content", c.split.group_by_content},
                {"logistic_fit", c.split.logistic_fit}};
  return j.dump(2) + "\n";
}

}  // namespace hdavca
