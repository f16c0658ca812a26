#include "hdavca/hdavca.h"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <new>
#include <string>

#include "json.hpp"

#include "hdavca/config.hpp"
#include "hdavca/error.hpp"
#include "hdavca/fixtures.hpp"
#include "hdavca/pipeline.hpp"
#include "hdavca/regression.hpp"

struct hdavca_config {
  hdavca::RunConfig value;
};

struct hdavca_image {
  hdavca::GrayImage value;
};

struct hdavca_model {
  hdavca::SvrModel value;
};

struct hdavca_report {
  std::vector<hdavca::AblationRow> rows;
  bool ablation = false;
};

namespace {

thread_local std::string g_last_error;

hdavca_status to_status(hdavca::ErrorCode code) {
  switch (code) {
    case hdavca::ErrorCode::kInvalidArgument: return HDAVCA_E_INVALID_ARGUMENT;
    case hdavca::ErrorCode::kIo: return HDAVCA_E_IO;
    case hdavca::ErrorCode::kFormat: return HDAVCA_E_FORMAT;
    case hdavca::ErrorCode::kDimension: return HDAVCA_E_DIMENSION;
    case hdavca::ErrorCode::kDegenerate: return HDAVCA_E_DEGENERATE;
    case hdavca::ErrorCode::kInternal: return HDAVCA_E_INTERNAL;
  }
  return HDAVCA_E_INTERNAL;
}

template <typename F>
hdavca_status guarded(F&& f) {
  try {
    g_last_error.clear();
    return f();
  } catch (const hdavca::Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return HDAVCA_E_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return HDAVCA_E_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return HDAVCA_E_INTERNAL;
  }
}

hdavca_status null_arg(const char* what) {
  g_last_error = std::string("null argument: ") + what;
  return HDAVCA_E_INVALID_ARGUMENT;
}

char* dup_string(const std::string& s) {
  char* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (!p) throw std::bad_alloc();
  std::memcpy(p, s.c_str(), s.size() + 1);
  return p;
}

void write_file(const std::string& text, const char* path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) hdavca::Fail(hdavca::ErrorCode::kIo, std::string("cannot write file: ") + path);
  out << text;
  if (!out) hdavca::Fail(hdavca::ErrorCode::kIo, std::string("cannot write file: ") + path);
}

}  // namespace

extern "C" {

const char* hdavca_version(void) { return "0.1.0"; }

const char* hdavca_status_name(hdavca_status status) {
  switch (status) {
    case HDAVCA_OK: return "ok";
    case HDAVCA_E_INVALID_ARGUMENT: return "invalid argument";
    case HDAVCA_E_IO: return "i/o error";
    case HDAVCA_E_FORMAT: return "format error";
    case HDAVCA_E_DIMENSION: return "dimension error";
    case HDAVCA_E_DEGENERATE: return "degenerate input";
    case HDAVCA_E_INTERNAL: return "internal error";
    case HDAVCA_E_PARTIAL: return "partial failure";
  }
  return "unknown status";
}

const char* hdavca_last_error(void) { return g_last_error.c_str(); }

void hdavca_string_free(char* s) { std::free(s); }

const char* hdavca_feature_name(int i) {
  if (i < 0 || i >= hdavca::kFeatureLength) return nullptr;
  return hdavca::feature_names()[static_cast<std::size_t>(i)].c_str();
}

hdavca_status hdavca_config_new(hdavca_config** out) {
  if (!out) return null_arg("out");
  return guarded([&] {
    *out = new hdavca_config{};
    return HDAVCA_OK;
  });
}

hdavca_status hdavca_config_load(const char* path, hdavca_config** out) {
  if (!path || !out) return null_arg("path/out");
  return guarded([&] {
    *out = new hdavca_config{hdavca::load_config(path)};
    return HDAVCA_OK;
  });
}

hdavca_status hdavca_config_merge_json(hdavca_config* config, const char* json_patch) {
  if (!config || !json_patch) return null_arg("config/json_patch");
  return guarded([&] {
    nlohmann::json patch;
    try {
      patch = nlohmann::json::parse(json_patch);
    } catch (const nlohmann::json::exception& e) {
      hdavca::Fail(hdavca::ErrorCode::kFormat, std::string("malformed config: ") + e.what());
    }
    nlohmann::json base = nlohmann::json::parse(hdavca::config_to_json(config->value));
    base.merge_patch(patch);
    config->value = hdavca::config_from_json(base.dump());
    return HDAVCA_OK;
  });
}

hdavca_status hdavca_config_to_json(const hdavca_config* config, char** out) {
  if (!config || !out) return null_arg("config/out");
  return guarded([&] {
    *out = dup_string(hdavca::config_to_json(config->value));
    return HDAVCA_OK;
  });
}

hdavca_status hdavca_config_set_mode(hdavca_config* config, const char* mode) {
  if (!config || !mode) return null_arg("config/mode");
  return guarded([&] {
    config->value.mode = hdavca::parse_mode(mode);
    return HDAVCA_OK;
  });
}

hdavca_status hdavca_config_mask(const hdavca_config* config, char out[HDAVCA_FEATURE_LENGTH + 1]) {
  if (!config || !out) return null_arg("config/out");
  return guarded([&] {
    const std::string s = config->value.mask().to_string();
    std::memcpy(out, s.c_str(), s.size() + 1);
    return HDAVCA_OK;
  });
}

void hdavca_config_free(hdavca_config* config) { delete config; }

hdavca_status hdavca_image_load(const char* path, hdavca_image** out) {
  if (!path || !out) return null_arg("path/out");
  return guarded([&] {
    *out = new hdavca_image{hdavca::load_image(path)};
    return HDAVCA_OK;
  });
}

hdavca_status hdavca_image_from_gray(int width, int height, const double* data, hdavca_image** out) {
  if (!data || !out) return null_arg("data/out");
  return guarded([&] {
    hdavca::Require(width > 0 && height > 0, hdavca::ErrorCode::kInvalidArgument, "zero-sized image");
    const std::size_t n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    for (std::size_t i = 0; i < n; ++i) {
      hdavca::Require(std::isfinite(data[i]), hdavca::ErrorCode::kInvalidArgument, "image values must be finite");
    }
    *out = new hdavca_image{hdavca::GrayImage(width, height, std::vector<double>(data, data + n))};
    return HDAVCA_OK;
  });
}

int hdavca_image_width(const hdavca_image* image) { return image ? image->value.width() : 0; }
int hdavca_image_height(const hdavca_image* image) { return image ? image->value.height() : 0; }
const double* hdavca_image_data(const hdavca_image* image) {
  return image ? image->value.data().data() : nullptr;
}
void hdavca_image_free(hdavca_image* image) { delete image; }

hdavca_status hdavca_extract_pair(const hdavca_config* config, const hdavca_image* retargeted_left,
                                  const hdavca_image* retargeted_right, const hdavca_image* original_left,
                                  const hdavca_image* original_right, const char* disparity_path,
                                  const char* featmap_original_path, const char* featmap_retargeted_path,
                                  double features[HDAVCA_FEATURE_LENGTH]) {
  if (!config || !retargeted_left || !retargeted_right || !features) {
    return null_arg("config/retargeted views/features");
  }
  return guarded([&] {
    hdavca::PairInputs in;
    in.retargeted = hdavca::StereoPair(retargeted_left->value, retargeted_right->value);
    if (original_left && original_right) in.original = hdavca::StereoPair(original_left->value, original_right->value);
    if (disparity_path) {
      in.disparity = hdavca::load_disparity(disparity_path, in.retargeted.width(), in.retargeted.height());
    }
    if (featmap_original_path) in.featmap_original = hdavca::read_feature_map(featmap_original_path);
    if (featmap_retargeted_path) in.featmap_retargeted = hdavca::read_feature_map(featmap_retargeted_path);
    const auto fv = hdavca::extract_features(in, config->value);
    std::copy(fv.values.begin(), fv.values.end(), features);
    return HDAVCA_OK;
  });
}

hdavca_status hdavca_extract_manifest(const hdavca_config* config, const char* manifest_path, const char* csv_out,
                                      size_t* n_ok, size_t* n_failed, char** failures_json) {
  if (!config || !manifest_path || !csv_out) return null_arg("config/manifest_path/csv_out");
  return guarded([&] {
    const auto entries = hdavca::load_manifest(manifest_path);
    const auto result = hdavca::extract_manifest(entries, config->value);
    hdavca::write_feature_table({config->value.mask(), result.rows}, csv_out);
    if (n_ok) *n_ok = result.rows.size();
    if (n_failed) *n_failed = result.failures.size();
    nlohmann::ordered_json failures = nlohmann::ordered_json::array();
    for (const auto& f : result.failures) {
      failures.push_back({{"index", f.index}, {"id", f.id}, {"message", f.message}});
    }
    if (failures_json) *failures_json = dup_string(failures.dump(2));
    if (!result.failures.empty()) {
      g_last_error = std::to_string(result.failures.size()) + " of " + std::to_string(entries.size()) +
                     " entries failed; first: " + result.failures.front().id + ": " +
                     result.failures.front().message;
      return HDAVCA_E_PARTIAL;
    }
    return HDAVCA_OK;
  });
}

hdavca_status hdavca_train_csv(const hdavca_config* config, const char* csv_path, hdavca_model** out) {
  if (!config || !csv_path || !out) return null_arg("config/csv_path/out");
  return guarded([&] {
    const auto table = hdavca::read_feature_table(csv_path);
    const auto data = hdavca::to_dataset(table);
    hdavca::Require(data.size() >= 2, hdavca::ErrorCode::kInvalidArgument, "training needs at least two rows");
    hdavca::SvrParams params = config->value.svr;
    if (config->value.split.grid_search) {
      const auto scaled = hdavca::scale_features(data.x, table.mask);
      const auto best = hdavca::grid_search(scaled.x, data.mos, params, config->value.split.seed);
      params.c = best.c;
      params.gamma = best.gamma;
    }
    *out = new hdavca_model{hdavca::svr_train(data.x, data.mos, params, table.mask)};
    return HDAVCA_OK;
  });
}

hdavca_status hdavca_model_load(const char* path, hdavca_model** out) {
  if (!path || !out) return null_arg("path/out");
  return guarded([&] {
    *out = new hdavca_model{hdavca::load_model(path)};
    return HDAVCA_OK;
  });
}

hdavca_status hdavca_model_save(const hdavca_model* model, const char* path) {
  if (!model || !path) return null_arg("model/path");
  return guarded([&] {
    hdavca::save_model(model->value, path);
    return HDAVCA_OK;
  });
}

size_t hdavca_model_support_count(const hdavca_model* model) {
  return model ? model->value.expansion.coefficients.size() : 0;
}

hdavca_status hdavca_model_predict(const hdavca_model* model, const double* features, size_t length, double* out) {
  if (!model || !features || !out) return null_arg("model/features/out");
  return guarded([&] {
    *out = hdavca::svr_predict(model->value, std::span<const double>(features, length));
    return HDAVCA_OK;
  });
}

hdavca_status hdavca_predict_csv(const hdavca_model* model, const char* csv_path, const char* out_path) {
  if (!model || !csv_path || !out_path) return null_arg("model/csv_path/out_path");
  return guarded([&] {
    const auto table = hdavca::read_feature_table(csv_path);
    hdavca::Require(table.mask == model->value.mask, hdavca::ErrorCode::kDimension,
                    "feature mask of the CSV differs from the model's");
    std::string text = "id,content_id,mos,prediction\n";
    char buf[32];
    for (const auto& r : table.rows) {
      text += r.id + "," + r.content_id + ",";
      if (r.mos) {
        std::snprintf(buf, sizeof buf, "%.17g", *r.mos);
        text += buf;
      }
      std::snprintf(buf, sizeof buf, "%.17g", hdavca::svr_predict(model->value, r.features));
      text += std::string(",") + buf + "\n";
    }
    write_file(text, out_path);
    return HDAVCA_OK;
  });
}

void hdavca_model_free(hdavca_model* model) { delete model; }

hdavca_status hdavca_evaluate_csv(const hdavca_config* config, const char* csv_path, hdavca_report** out) {
  if (!config || !csv_path || !out) return null_arg("config/csv_path/out");
  return guarded([&] {
    const auto table = hdavca::read_feature_table(csv_path);
    const auto data = hdavca::to_dataset(table);
    auto* r = new hdavca_report{};
    try {
      r->rows.push_back({"evaluate", table.mask,
                         hdavca::cross_validate(data, table.mask, config->value.svr, config->value.split)});
    } catch (...) {
      delete r;
      throw;
    }
    *out = r;
    return HDAVCA_OK;
  });
}

hdavca_status hdavca_ablate_csv(const hdavca_config* config, const char* csv_path, hdavca_report** out) {
  if (!config || !csv_path || !out) return null_arg("config/csv_path/out");
  return guarded([&] {
    const auto table = hdavca::read_feature_table(csv_path);
    const auto data = hdavca::to_dataset(table);
    auto rows = hdavca::ablate(data, config->value.svr, config->value.split);
    *out = new hdavca_report{std::move(rows), true};
    return HDAVCA_OK;
  });
}

size_t hdavca_report_rows(const hdavca_report* report) { return report ? report->rows.size() : 0; }

const char* hdavca_report_row_name(const hdavca_report* report, size_t row) {
  if (!report || row >= report->rows.size()) return nullptr;
  return report->rows[row].name.c_str();
}

hdavca_status hdavca_report_metrics(const hdavca_report* report, size_t row, int median, double metrics[4]) {
  if (!report || !metrics) return null_arg("report/metrics");
  if (row >= report->rows.size()) {
    g_last_error = "row out of range";
    return HDAVCA_E_INVALID_ARGUMENT;
  }
  const auto& m = median ? report->rows[row].report.median : report->rows[row].report.mean;
  metrics[0] = m.plcc;
  metrics[1] = m.srcc;
  metrics[2] = m.krcc;
  metrics[3] = m.rmse;
  return HDAVCA_OK;
}

hdavca_status hdavca_report_to_json(const hdavca_report* report, char** out) {
  if (!report || !out) return null_arg("report/out");
  return guarded([&] {
    *out = dup_string(report->ablation ? hdavca::ablation_to_json(report->rows)
                                       : report->rows.front().report.to_json());
    return HDAVCA_OK;
  });
}

hdavca_status hdavca_report_to_table(const hdavca_report* report, char** out) {
  if (!report || !out) return null_arg("report/out");
  return guarded([&] {
    *out = dup_string(report->ablation ? hdavca::ablation_to_table(report->rows)
                                       : report->rows.front().report.to_table());
    return HDAVCA_OK;
  });
}

void hdavca_report_free(hdavca_report* report) { delete report; }

hdavca_status hdavca_fixtures_write(const char* out_dir, char** manifest_path, size_t* n_entries) {
  if (!out_dir) return null_arg("out_dir");
  return guarded([&] {
    const auto summary = hdavca::write_fixtures(out_dir);
    if (n_entries) *n_entries = summary.n_entries;
    if (manifest_path) *manifest_path = dup_string(summary.manifest_path);
    return HDAVCA_OK;
  });
}

}  // extern "C"
