#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "hdavca/hdavca.h"

namespace {

int report_failure(hdavca_status st, const char* what) {
  std::fprintf(stderr, "hdavca %s: %s: %s\n", what, hdavca_status_name(st), hdavca_last_error());
  return 1;
}

bool write_text(const std::string& path, const std::string& text) {
  if (path == "-") {
    std::cout << text;
    return static_cast<bool>(std::cout);
  }
  std::ofstream out(path, std::ios::binary);
  out << text;
  return static_cast<bool>(out);
}

// Takes ownership of a library string.
std::string take(char* s) {
  std::string out = s ? s : "";
  hdavca_string_free(s);
  return out;
}

struct Overrides {
  std::string config_path;
  std::optional<std::string> mode;
  std::optional<std::uint64_t> seed;
  std::optional<int> splits;
  std::optional<double> train_frac;
  std::optional<double> c, gamma, epsilon;
  std::optional<double> did_weight;
  std::optional<double> alpha, beta;
  std::optional<int> search_range;
  std::optional<std::string> dump_keypoints;
  std::optional<std::string> featmap_cmd;
  bool item_splits = false;
  bool logistic_fit = false;
  bool grid_search = false;
  bool disparity_normalize = false;
  bool estimate_disparity = false;

  void add_to(CLI::App& app) {
    app.add_option("--config", config_path, "Run config JSON")->check(CLI::ExistingFile);
    app.add_option("--mode", mode, "FR or NR")->check(CLI::IsMember({"FR", "NR", "fr", "nr"}));
    app.add_option("--seed", seed, "Split seed");
    app.add_option("--splits", splits, "Number of random splits");
    app.add_option("--train-frac", train_frac, "Training fraction per split");
    app.add_flag("--item-splits", item_splits, "Split by item instead of by content id");
    app.add_flag("--logistic-fit", logistic_fit, "Map predictions through a 4-parameter logistic before metrics");
    app.add_flag("--grid-search", grid_search, "3-fold grid search over C and gamma on each training split");
    app.add_option("--svr-c", c, "SVR C");
    app.add_option("--svr-gamma", gamma, "RBF gamma");
    app.add_option("--svr-epsilon", epsilon, "Tube width");
    app.add_option("--did-weight", did_weight, "Ranked-branch weight of the intensity feature");
    app.add_option("--alpha", alpha, "Comfort-zone weight of the minimum-disparity term");
    app.add_option("--beta", beta, "Comfort-zone weight of the maximum-disparity term");
    app.add_option("--search-range", search_range, "Block-matching search range in pixels");
    app.add_flag("--disparity-normalize", disparity_normalize, "Rescale disparity to [0,255] for the JNDD bins");
    app.add_flag("--estimate-disparity", estimate_disparity, "Ignore manifest disparity files");
    app.add_option("--dump-keypoints", dump_keypoints, "Write per-entry keypoint JSON to this directory");
    app.add_option("--featmap-cmd", featmap_cmd,
                   "Command producing a missing feature map; {input} and {output} are substituted");
  }

  std::string patch() const {
    nlohmann::json j = nlohmann::json::object();
    if (mode) j["mode"] = *mode;
    if (seed) j["split"]["seed"] = *seed;
    if (splits) j["split"]["n_splits"] = *splits;
    if (train_frac) j["split"]["train_frac"] = *train_frac;
    if (item_splits) j["split"]["group_by_content"] = false;
    if (logistic_fit) j["split"]["logistic_fit"] = true;
    if (grid_search) j["svr"]["grid_search"] = true;
    if (c) j["svr"]["c"] = *c;
    if (gamma) j["svr"]["gamma"] = *gamma;
    if (epsilon) j["svr"]["epsilon"] = *epsilon;
    if (did_weight) j["did_weight"] = *did_weight;
    if (alpha) j["comfort_zone"]["alpha"] = *alpha;
    if (beta) j["comfort_zone"]["beta"] = *beta;
    if (search_range) j["search_range"] = *search_range;
    if (disparity_normalize) j["disparity_normalize"] = true;
    if (estimate_disparity) j["use_disparity_files"] = false;
    if (dump_keypoints) j["dump_keypoints_dir"] = *dump_keypoints;
    if (featmap_cmd) j["featmap_command"] = *featmap_cmd;
    return j.dump();
  }

  hdavca_status make(hdavca_config** out) const {
    hdavca_status st = config_path.empty() ? hdavca_config_new(out) : hdavca_config_load(config_path.c_str(), out);
    if (st != HDAVCA_OK) return st;
    st = hdavca_config_merge_json(*out, patch().c_str());
    if (st != HDAVCA_OK) {
      hdavca_config_free(*out);
      *out = nullptr;
    }
    return st;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Visual-comfort assessment of retargeted stereoscopic images"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", hdavca_version());
  Overrides ov;
  ov.add_to(app);

  std::string manifest, features, out, model_path, failures_path, fixtures_dir;
  bool table = false;

  auto* extract = app.add_subcommand("extract", "Extract feature vectors for every manifest entry");
  extract->add_option("--manifest", manifest, "Manifest JSON")->required()->check(CLI::ExistingFile);
  extract->add_option("--out", out, "Feature CSV")->required();
  extract->add_option("--failures", failures_path, "Write per-entry failures as JSON");

  auto* train = app.add_subcommand("train", "Train an SVR model on a feature CSV");
  train->add_option("--features", features, "Feature CSV")->required()->check(CLI::ExistingFile);
  train->add_option("--model", model_path, "Model output path")->required();

  auto* predict = app.add_subcommand("predict", "Score a feature CSV with a trained model");
  predict->add_option("--model", model_path, "Model file")->required()->check(CLI::ExistingFile);
  predict->add_option("--features", features, "Feature CSV")->required()->check(CLI::ExistingFile);
  predict->add_option("--out", out, "Prediction CSV")->required();

  auto* evaluate = app.add_subcommand("evaluate", "Repeated random-split cross-validation");
  evaluate->add_option("--features", features, "Feature CSV")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--out", out, "Report JSON ('-' for stdout)")->required();
  evaluate->add_flag("--table", table, "Also print a summary table");

  auto* ablate = app.add_subcommand("ablate", "Cross-validate each feature-family mask");
  ablate->add_option("--features", features, "Feature CSV")->required()->check(CLI::ExistingFile);
  ablate->add_option("--out", out, "Report JSON ('-' for stdout)")->required();
  ablate->add_flag("--table", table, "Also print a summary table");

  auto* fixtures = app.add_subcommand("fixtures", "Write the synthetic self-test dataset");
  fixtures->add_option("--out", fixtures_dir, "Output directory")->required();

  auto* print_config = app.add_subcommand("print-config", "Print the effective run config");

  CLI11_PARSE(app, argc, argv);

  if (fixtures->parsed()) {
    char* path = nullptr;
    size_t n = 0;
    const hdavca_status st = hdavca_fixtures_write(fixtures_dir.c_str(), &path, &n);
    if (st != HDAVCA_OK) return report_failure(st, "fixtures");
    std::printf("wrote %zu entries: %s\n", n, take(path).c_str());
    return 0;
  }

  hdavca_config* config = nullptr;
  if (const hdavca_status st = ov.make(&config); st != HDAVCA_OK) return report_failure(st, "config");
  struct ConfigGuard {
    hdavca_config* c;
    ~ConfigGuard() { hdavca_config_free(c); }
  } guard{config};

  if (print_config->parsed()) {
    char* text = nullptr;
    if (const hdavca_status st = hdavca_config_to_json(config, &text); st != HDAVCA_OK) {
      return report_failure(st, "print-config");
    }
    std::cout << take(text);
    return 0;
  }

  if (extract->parsed()) {
    size_t ok = 0, failed = 0;
    char* failures = nullptr;
    const hdavca_status st =
        hdavca_extract_manifest(config, manifest.c_str(), out.c_str(), &ok, &failed, &failures);
    const std::string failure_text = take(failures);
    if (st != HDAVCA_OK && st != HDAVCA_E_PARTIAL) return report_failure(st, "extract");
    if (!failures_path.empty() && !write_text(failures_path, failure_text + "\n")) {
      std::fprintf(stderr, "hdavca extract: cannot write %s\n", failures_path.c_str());
      return 1;
    }
    std::printf("extracted %zu rows, %zu failed -> %s\n", ok, failed, out.c_str());
    if (st == HDAVCA_E_PARTIAL) {
      const auto list = nlohmann::json::parse(failure_text);
      for (const auto& f : list) {
        std::fprintf(stderr, "  %s: %s\n", f["id"].get<std::string>().c_str(),
                     f["message"].get<std::string>().c_str());
      }
      return 2;
    }
    return 0;
  }

  if (train->parsed()) {
    hdavca_model* model = nullptr;
    hdavca_status st = hdavca_train_csv(config, features.c_str(), &model);
    if (st != HDAVCA_OK) return report_failure(st, "train");
    st = hdavca_model_save(model, model_path.c_str());
    const size_t n_sv = hdavca_model_support_count(model);
    hdavca_model_free(model);
    if (st != HDAVCA_OK) return report_failure(st, "train");
    std::printf("trained model with %zu support vectors -> %s\n", n_sv, model_path.c_str());
    return 0;
  }

  if (predict->parsed()) {
    hdavca_model* model = nullptr;
    hdavca_status st = hdavca_model_load(model_path.c_str(), &model);
    if (st != HDAVCA_OK) return report_failure(st, "predict");
    st = hdavca_predict_csv(model, features.c_str(), out.c_str());
    hdavca_model_free(model);
    if (st != HDAVCA_OK) return report_failure(st, "predict");
    return 0;
  }

  if (evaluate->parsed() || ablate->parsed()) {
    const char* what = evaluate->parsed() ? "evaluate" : "ablate";
    hdavca_report* report = nullptr;
    hdavca_status st = evaluate->parsed() ? hdavca_evaluate_csv(config, features.c_str(), &report)
                                          : hdavca_ablate_csv(config, features.c_str(), &report);
    if (st != HDAVCA_OK) return report_failure(st, what);
    char* json = nullptr;
    char* tbl = nullptr;
    st = hdavca_report_to_json(report, &json);
    if (st == HDAVCA_OK && table) st = hdavca_report_to_table(report, &tbl);
    hdavca_report_free(report);
    if (st != HDAVCA_OK) return report_failure(st, what);
    if (!write_text(out, take(json))) {
      std::fprintf(stderr, "hdavca %s: cannot write %s\n", what, out.c_str());
      return 1;
    }
    if (table) std::cout << take(tbl);
    return 0;
  }
  return 0;
}
