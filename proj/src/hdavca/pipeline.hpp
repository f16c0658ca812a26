#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hdavca/config.hpp"
#include "hdavca/eval.hpp"
#include "hdavca/features.hpp"
#include "hdavca/local_ssim.hpp"
#include "hdavca/semantic.hpp"

namespace hdavca {

struct ManifestEntry {
  std::string id;
  std::string content_id;
  std::string retargeted_left;
  std::string retargeted_right;
  std::optional<std::string> original_left;
  std::optional<std::string> original_right;
  std::optional<std::string> disparity;
  std::optional<std::string> featmap_original;
  std::optional<std::string> featmap_retargeted;
  std::optional<double> mos;
};

// JSON array of entries. Relative paths resolve against the manifest's folder.
std::vector<ManifestEntry> parse_manifest(const std::string& text, const std::string& base_dir = "");
std::vector<ManifestEntry> load_manifest(const std::string& path);

// Inputs to one feature extraction, already loaded. Optional members follow
// the mode contract: FR needs `original` and both feature maps.
struct PairInputs {
  StereoPair retargeted;
  std::optional<StereoPair> original;
  std::optional<DisparityMap> disparity;
  std::optional<FeatureMapTensor> featmap_original;
  std::optional<FeatureMapTensor> featmap_retargeted;
};

struct ExtractionDetail {
  LocalSsimFeature local_ssim;
  std::vector<Keypoint> keypoints_retargeted;
  std::vector<Keypoint> keypoints_original;
  std::vector<MatchPair> matches;
};

// 72-dim vector with the mode's mask applied. Throws on missing inputs.
FeatureVector extract_features(const PairInputs& inputs, const RunConfig& config,
                               ExtractionDetail* detail = nullptr);

// Loads the files of one entry (running featmap_command when a feature map is
// missing) and extracts.
FeatureVector extract_entry(const ManifestEntry& entry, const RunConfig& config);

struct FeatureRow {
  std::string id;
  std::string content_id;
  std::optional<double> mos;
  FeatureVector features;
};

struct EntryFailure {
  std::size_t index = 0;
  std::string id;
  std::string message;
};

struct ExtractionResult {
  std::vector<FeatureRow> rows;  // successful entries in manifest order
  std::vector<EntryFailure> failures;
};

// Parallel across entries; a failing entry is recorded and skipped.
ExtractionResult extract_manifest(const std::vector<ManifestEntry>& entries, const RunConfig& config);

// Feature table CSV, version 1:
//   # hdavca-features v1 mask=<72 bits>
//   id,content_id,mos,<72 feature names>
// mos may be empty.
struct FeatureTable {
  FeatureMask mask = FeatureMask::all();
  std::vector<FeatureRow> rows;
};

std::string feature_table_to_csv(const FeatureTable& table);
FeatureTable feature_table_from_csv(const std::string& text);
void write_feature_table(const FeatureTable& table, const std::string& path);
FeatureTable read_feature_table(const std::string& path);

// Throws kInvalidArgument if any row lacks a mos.
Dataset to_dataset(const FeatureTable& table);

std::string keypoints_to_json(const std::string& id, const ExtractionDetail& detail);

}  // namespace hdavca
