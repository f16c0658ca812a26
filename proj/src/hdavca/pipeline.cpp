#include "hdavca/pipeline.hpp"

#include <unistd.h>

#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "hdavca/binocular.hpp"
#include "hdavca/dnss.hpp"
#include "hdavca/error.hpp"

namespace hdavca {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorCode::kIo, "unreadable file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& text, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) Fail(ErrorCode::kIo, "cannot write file: " + path);
  out << text;
  if (!out) Fail(ErrorCode::kIo, "cannot write file: " + path);
}

bool plain_field(const std::string& s) { return s.find_first_of(",\"\r\n") == std::string::npos; }

std::string resolve(const std::string& base, const std::string& p) {
  if (base.empty() || fs::path(p).is_absolute()) return p;
  return (fs::path(base) / p).string();
}

}  // namespace

std::vector<ManifestEntry> parse_manifest(const std::string& text, const std::string& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    Fail(ErrorCode::kFormat, std::string("malformed manifest: ") + e.what());
  }
  Require(j.is_array(), ErrorCode::kFormat, "malformed manifest: expected an array of entries");
  std::vector<ManifestEntry> entries;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto& e = j[i];
    const std::string where = "malformed manifest entry " + std::to_string(i) + ": ";
    if (!e.is_object()) Fail(ErrorCode::kFormat, where + "expected an object");
    ManifestEntry m;
    try {
      for (auto it = e.begin(); it != e.end(); ++it) {
        static const char* kKeys[] = {"id", "content_id", "retargeted_left", "retargeted_right", "original_left",
                                      "original_right", "disparity", "featmap_original", "featmap_retargeted",
                                      "mos"};
        bool known = false;
        for (const char* k : kKeys) known = known || it.key() == k;
        if (!known) Fail(ErrorCode::kFormat, where + "unknown key '" + it.key() + "'");
      }
      m.id = e.at("id").get<std::string>();
      m.content_id = e.contains("content_id") ? e["content_id"].get<std::string>() : m.id;
      m.retargeted_left = resolve(base_dir, e.at("retargeted_left").get<std::string>());
      m.retargeted_right = resolve(base_dir, e.at("retargeted_right").get<std::string>());
      auto opt_path = [&](const char* key, std::optional<std::string>& out) {
        if (e.contains(key) && !e[key].is_null()) out = resolve(base_dir, e[key].get<std::string>());
      };
      opt_path("original_left", m.original_left);
      opt_path("original_right", m.original_right);
      opt_path("disparity", m.disparity);
      opt_path("featmap_original", m.featmap_original);
      opt_path("featmap_retargeted", m.featmap_retargeted);
      if (e.contains("mos") && !e["mos"].is_null()) m.mos = e["mos"].get<double>();
    } catch (const json::exception& ex) {
      Fail(ErrorCode::kFormat, where + ex.what());
    }
    if (m.id.empty() || !plain_field(m.id) || !plain_field(m.content_id)) {
      Fail(ErrorCode::kFormat, where + "id and content_id must be nonempty and free of commas, quotes, newlines");
    }
    entries.push_back(std::move(m));
  }
  return entries;
}

std::vector<ManifestEntry> load_manifest(const std::string& path) {
  return parse_manifest(read_text(path), fs::path(path).parent_path().string());
}

FeatureVector extract_features(const PairInputs& in, const RunConfig& config, ExtractionDetail* detail) {
  const FeatureMask mask = config.mask();
  const bool fr = config.mode == Mode::kFullReference;
  if (fr) {
    Require(in.original.has_value(), ErrorCode::kInvalidArgument, "FR mode needs the original pair");
    Require(in.featmap_original.has_value() && in.featmap_retargeted.has_value(), ErrorCode::kInvalidArgument,
            "FR mode needs original and retargeted feature maps");
  }

  FeatureVector fv;
  fv.mask = mask;

  if (fr) {
    const auto& p = config.local_ssim;
    ExtractionDetail local;
    ExtractionDetail& d = detail ? *detail : local;
    d.keypoints_retargeted = detect_and_describe(in.retargeted.left, p.sift);
    d.keypoints_original = detect_and_describe(in.original->left, p.sift);
    d.matches = match_keypoints(d.keypoints_retargeted, d.keypoints_original, p.sift.ratio);
    d.local_ssim = local_ssim_from_matches(in.original->left, in.retargeted.left, d.matches, p);
    fv.values[family_range(Family::kLocalSsim).offset] = d.local_ssim.value;
    fv.values[family_range(Family::kSemantic).offset] =
        semantic_feature(*in.featmap_original, *in.featmap_retargeted);
  }

  const DnssFeature dnss = dnss_feature(in.retargeted, config.dnss);
  std::copy(dnss.values.begin(), dnss.values.end(), fv.values.begin() + family_range(Family::kDnss).offset);

  DisparityMap disparity = in.disparity ? *in.disparity : estimate_disparity(in.retargeted, config.block_match);
  Require(disparity.width() == in.retargeted.width() && disparity.height() == in.retargeted.height(),
          ErrorCode::kDimension, "dim mismatch: disparity map does not match the retargeted pair");
  const BinocularFeatures b = binocular_features(in.retargeted, disparity, config.binocular);
  const auto arr = b.as_array();
  std::copy(arr.begin(), arr.end(), fv.values.begin() + family_range(Family::kDisparityRange).offset);

  fv.apply_mask();
  return fv;
}

namespace {

std::string substitute(std::string cmd, const std::string& key, const std::string& value) {
  for (std::size_t pos = cmd.find(key); pos != std::string::npos; pos = cmd.find(key, pos + value.size())) {
    cmd.replace(pos, key.size(), value);
  }
  return cmd;
}

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') out += "'\\''"; else out += c;
  }
  return out + "'";
}

FeatureMapTensor featmap_via_command(const std::string& command, const std::string& image,
                                     const std::string& tag) {
  static std::atomic<unsigned> counter{0};
  const fs::path out = fs::temp_directory_path() /
                       ("hdavca_featmap_" + std::to_string(::getpid()) + "_" + std::to_string(counter++) + "_" +
                        tag + ".fmap");
  const std::string cmd =
      substitute(substitute(command, "{input}", shell_quote(image)), "{output}", shell_quote(out.string()));
  const int rc = std::system(cmd.c_str());
  if (rc != 0) {
    std::error_code ec;
    fs::remove(out, ec);
    Fail(ErrorCode::kIo, "featmap command failed (status " + std::to_string(rc) + "): " + cmd);
  }
  FeatureMapTensor t = read_feature_map(out.string());
  std::error_code ec;
  fs::remove(out, ec);
  return t;
}

}  // namespace

FeatureVector extract_entry(const ManifestEntry& entry, const RunConfig& config) {
  PairInputs in;
  in.retargeted = StereoPair(load_image(entry.retargeted_left), load_image(entry.retargeted_right));
  if (config.mode == Mode::kFullReference) {
    Require(entry.original_left && entry.original_right, ErrorCode::kInvalidArgument,
            "FR mode needs original_left and original_right");
    in.original = StereoPair(load_image(*entry.original_left), load_image(*entry.original_right));
    if (entry.featmap_original) {
      in.featmap_original = read_feature_map(*entry.featmap_original);
    } else if (!config.featmap_command.empty()) {
      in.featmap_original = featmap_via_command(config.featmap_command, *entry.original_left, "orig");
    }
    if (entry.featmap_retargeted) {
      in.featmap_retargeted = read_feature_map(*entry.featmap_retargeted);
    } else if (!config.featmap_command.empty()) {
      in.featmap_retargeted = featmap_via_command(config.featmap_command, entry.retargeted_left, "ret");
    }
    Require(in.featmap_original && in.featmap_retargeted, ErrorCode::kInvalidArgument,
            "FR mode needs featmap_original and featmap_retargeted (or a featmap command)");
  }
  if (entry.disparity && config.use_disparity_files) {
    in.disparity = load_disparity(*entry.disparity, in.retargeted.width(), in.retargeted.height());
  }
  ExtractionDetail detail;
  FeatureVector fv = extract_features(in, config, &detail);
  if (!config.dump_keypoints_dir.empty() && config.mode == Mode::kFullReference) {
    std::error_code ec;
    fs::create_directories(config.dump_keypoints_dir, ec);
    write_text(keypoints_to_json(entry.id, detail),
               (fs::path(config.dump_keypoints_dir) / (entry.id + "_keypoints.json")).string());
  }
  return fv;
}

ExtractionResult extract_manifest(const std::vector<ManifestEntry>& entries, const RunConfig& config) {
  config.validate();
  std::vector<std::optional<FeatureVector>> out(entries.size());
  std::vector<std::string> errors(entries.size());
  parallel_for(entries.size(), [&](std::size_t i) {
    try {
      out[i] = extract_entry(entries[i], config);
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  });
  ExtractionResult result;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (out[i]) {
      result.rows.push_back({entries[i].id, entries[i].content_id, entries[i].mos, *out[i]});
    } else {
      result.failures.push_back({i, entries[i].id, errors[i]});
    }
  }
  return result;
}

namespace {

constexpr const char* kCsvTag = "# hdavca-features v";
constexpr int kCsvVersion = 1;

std::string csv_header() {
  std::string h = "id,content_id,mos";
  for (const auto& n : feature_names()) h += "," + n;
  return h;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    cells.push_back(line.substr(start, pos == std::string::npos ? std::string::npos : pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return cells;
}

double parse_number(const std::string& s, std::size_t line_no) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(v)) {
    Fail(ErrorCode::kFormat, "malformed feature CSV: bad number '" + s + "' on line " + std::to_string(line_no));
  }
  return v;
}

}  // namespace

std::string feature_table_to_csv(const FeatureTable& table) {
  std::string out = std::string(kCsvTag) + std::to_string(kCsvVersion) + " mask=" + table.mask.to_string() + "\n";
  out += csv_header() + "\n";
  for (const auto& r : table.rows) {
    Require(plain_field(r.id) && plain_field(r.content_id), ErrorCode::kFormat,
            "ids must be free of commas, quotes and newlines");
    out += r.id + "," + r.content_id + "," + (r.mos ? fmt(*r.mos) : "");
    for (double v : r.features.values) out += "," + fmt(v);
    out += "\n";
  }
  return out;
}

FeatureTable feature_table_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.rfind(kCsvTag, 0) != 0) {
    Fail(ErrorCode::kFormat, "malformed feature CSV: missing '# hdavca-features' version line");
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const std::string rest = line.substr(std::string(kCsvTag).size());
  const std::size_t sp = rest.find(' ');
  if (rest.substr(0, sp) != std::to_string(kCsvVersion)) {
    Fail(ErrorCode::kFormat, "feature CSV version mismatch: expected v" + std::to_string(kCsvVersion));
  }
  FeatureTable table;
  const std::string mask_key = " mask=";
  if (sp == std::string::npos || rest.compare(sp, mask_key.size(), mask_key) != 0) {
    Fail(ErrorCode::kFormat, "malformed feature CSV: missing mask");
  }
  table.mask = FeatureMask::parse(rest.substr(sp + mask_key.size()));
  if (!std::getline(in, line)) Fail(ErrorCode::kFormat, "malformed feature CSV: missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != csv_header()) Fail(ErrorCode::kFormat, "feature CSV column mismatch: header differs from v1 layout");
  std::size_t line_no = 2;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_line(line);
    if (cells.size() != 3 + kFeatureLength) {
      Fail(ErrorCode::kFormat, "malformed feature CSV: line " + std::to_string(line_no) + " has " +
                                   std::to_string(cells.size()) + " columns, expected 75");
    }
    FeatureRow r;
    r.id = cells[0];
    r.content_id = cells[1];
    if (!cells[2].empty()) r.mos = parse_number(cells[2], line_no);
    r.features.mask = table.mask;
    for (int d = 0; d < kFeatureLength; ++d) r.features.values[d] = parse_number(cells[3 + d], line_no);
    table.rows.push_back(std::move(r));
  }
  return table;
}

void write_feature_table(const FeatureTable& table, const std::string& path) {
  write_text(feature_table_to_csv(table), path);
}

FeatureTable read_feature_table(const std::string& path) { return feature_table_from_csv(read_text(path)); }

Dataset to_dataset(const FeatureTable& table) {
  Dataset d;
  for (const auto& r : table.rows) {
    if (!r.mos) Fail(ErrorCode::kInvalidArgument, "row '" + r.id + "' has no mos");
    d.ids.push_back(r.id);
    d.content_ids.push_back(r.content_id);
    d.x.push_back(r.features);
    d.mos.push_back(*r.mos);
  }
  return d;
}

std::string keypoints_to_json(const std::string& id, const ExtractionDetail& detail) {
  auto kp_json = [](const std::vector<Keypoint>& kps) {
    nlohmann::ordered_json a = nlohmann::ordered_json::array();
    for (const auto& k : kps) a.push_back({k.x, k.y, k.scale, k.orientation});
    return a;
  };
  nlohmann::ordered_json j;
  j["id"] = id;
  j["fields"] = {"x", "y", "scale", "orientation"};
  j["retargeted"] = kp_json(detail.keypoints_retargeted);
  j["original"] = kp_json(detail.keypoints_original);
  nlohmann::ordered_json m = nlohmann::ordered_json::array();
  for (const auto& p : detail.matches) {
    m.push_back({{"retargeted", {p.retargeted_pt.x, p.retargeted_pt.y}},
                 {"original", {p.original_pt.x, p.original_pt.y}},
                 {"distance", p.distance}});
  }
  j["matches"] = std::move(m);
  j["local_ssim"] = detail.local_ssim.value;
  j["n_matches"] = detail.local_ssim.n_matches;
  return j.dump(1) + "\n";
}

}  // namespace hdavca
