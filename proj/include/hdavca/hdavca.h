/* hdavca: visual-comfort features and scoring for retargeted stereo pairs. */
#ifndef HDAVCA_HDAVCA_H
#define HDAVCA_HDAVCA_H

#include <stddef.h>

#if defined(_WIN32)
#define HDAVCA_API __declspec(dllexport)
#else
#define HDAVCA_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

#define HDAVCA_FEATURE_LENGTH 72

typedef enum hdavca_status {
  HDAVCA_OK = 0,
  HDAVCA_E_INVALID_ARGUMENT = 1,
  HDAVCA_E_IO = 2,
  HDAVCA_E_FORMAT = 3,
  HDAVCA_E_DIMENSION = 4,
  HDAVCA_E_DEGENERATE = 5,
  HDAVCA_E_INTERNAL = 6,
  /* Some manifest entries failed; the rest were written. */
  HDAVCA_E_PARTIAL = 7
} hdavca_status;

typedef struct hdavca_config hdavca_config;
typedef struct hdavca_image hdavca_image;
typedef struct hdavca_model hdavca_model;
typedef struct hdavca_report hdavca_report;

HDAVCA_API const char* hdavca_version(void);
HDAVCA_API const char* hdavca_status_name(hdavca_status status);
/* Message of the last failing call on this thread; "" if none. */
HDAVCA_API const char* hdavca_last_error(void);
/* Frees strings returned through char** out-parameters. */
HDAVCA_API void hdavca_string_free(char* s);

/* Column name of feature dimension i, or NULL when out of range. */
HDAVCA_API const char* hdavca_feature_name(int i);

/* ---- config ---- */
HDAVCA_API hdavca_status hdavca_config_new(hdavca_config** out);
HDAVCA_API hdavca_status hdavca_config_load(const char* path, hdavca_config** out);
/* Applies the keys present in json_patch (same schema as the config file). */
HDAVCA_API hdavca_status hdavca_config_merge_json(hdavca_config* config, const char* json_patch);
HDAVCA_API hdavca_status hdavca_config_to_json(const hdavca_config* config, char** out);
/* "FR" or "NR". */
HDAVCA_API hdavca_status hdavca_config_set_mode(hdavca_config* config, const char* mode);
/* Active dimensions as 72 '0'/'1' characters plus NUL. */
HDAVCA_API hdavca_status hdavca_config_mask(const hdavca_config* config, char out[HDAVCA_FEATURE_LENGTH + 1]);
HDAVCA_API void hdavca_config_free(hdavca_config* config);

/* ---- images ---- */
HDAVCA_API hdavca_status hdavca_image_load(const char* path, hdavca_image** out);
/* Copies width*height row-major values in [0, 255]. */
HDAVCA_API hdavca_status hdavca_image_from_gray(int width, int height, const double* data, hdavca_image** out);
HDAVCA_API int hdavca_image_width(const hdavca_image* image);
HDAVCA_API int hdavca_image_height(const hdavca_image* image);
HDAVCA_API const double* hdavca_image_data(const hdavca_image* image);
HDAVCA_API void hdavca_image_free(hdavca_image* image);

/* ---- extraction ---- */
/* Features of one retargeted pair. original_*, featmap_* may be NULL in NR
 * mode; disparity_path may be NULL to estimate by block matching. */
HDAVCA_API hdavca_status hdavca_extract_pair(const hdavca_config* config, const hdavca_image* retargeted_left,
                                             const hdavca_image* retargeted_right,
                                             const hdavca_image* original_left,
                                             const hdavca_image* original_right, const char* disparity_path,
                                             const char* featmap_original_path,
                                             const char* featmap_retargeted_path,
                                             double features[HDAVCA_FEATURE_LENGTH]);
/* Writes the feature CSV for a manifest. failures_json (may be NULL)
 * receives an array of {index, id, message}. */
HDAVCA_API hdavca_status hdavca_extract_manifest(const hdavca_config* config, const char* manifest_path,
                                                 const char* csv_out, size_t* n_ok, size_t* n_failed,
                                                 char** failures_json);

/* ---- regression ---- */
HDAVCA_API hdavca_status hdavca_train_csv(const hdavca_config* config, const char* csv_path, hdavca_model** out);
HDAVCA_API hdavca_status hdavca_model_load(const char* path, hdavca_model** out);
HDAVCA_API hdavca_status hdavca_model_save(const hdavca_model* model, const char* path);
HDAVCA_API size_t hdavca_model_support_count(const hdavca_model* model);
HDAVCA_API hdavca_status hdavca_model_predict(const hdavca_model* model, const double* features, size_t length,
                                              double* out);
/* Writes id,content_id,mos,prediction rows. */
HDAVCA_API hdavca_status hdavca_predict_csv(const hdavca_model* model, const char* csv_path, const char* out_path);
HDAVCA_API void hdavca_model_free(hdavca_model* model);

/* ---- evaluation ---- */
HDAVCA_API hdavca_status hdavca_evaluate_csv(const hdavca_config* config, const char* csv_path, hdavca_report** out);
HDAVCA_API hdavca_status hdavca_ablate_csv(const hdavca_config* config, const char* csv_path, hdavca_report** out);
HDAVCA_API size_t hdavca_report_rows(const hdavca_report* report);
/* Name of row i ("All" etc. for ablations, "evaluate" otherwise). */
HDAVCA_API const char* hdavca_report_row_name(const hdavca_report* report, size_t row);
/* metrics = {plcc, srcc, krcc, rmse}; median != 0 selects the median. */
HDAVCA_API hdavca_status hdavca_report_metrics(const hdavca_report* report, size_t row, int median,
                                               double metrics[4]);
HDAVCA_API hdavca_status hdavca_report_to_json(const hdavca_report* report, char** out);
HDAVCA_API hdavca_status hdavca_report_to_table(const hdavca_report* report, char** out);
HDAVCA_API void hdavca_report_free(hdavca_report* report);

/* ---- fixtures ---- */
HDAVCA_API hdavca_status hdavca_fixtures_write(const char* out_dir, char** manifest_path, size_t* n_entries);

#ifdef __cplusplus
}
#endif

#endif
