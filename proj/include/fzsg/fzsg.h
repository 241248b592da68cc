/* C interface to the fzsg lesion segmentation library.
 *
 * Every function returns an fzsg_status; on failure a message for the calling
 * thread is available from fzsg_last_error(). Handles are opaque and owned by
 * the caller. Strings returned through char** must be released with
 * fzsg_string_free. */
#ifndef FZSG_H
#define FZSG_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define FZSG_API __declspec(dllexport)
#else
#define FZSG_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum fzsg_status {
  FZSG_OK = 0,
  FZSG_E_INVALID_ARGUMENT = 1,
  FZSG_E_INVALID_IMAGE = 2,
  FZSG_E_DIMENSION_MISMATCH = 3,
  FZSG_E_IO = 4,
  FZSG_E_INCOMPATIBLE_MODEL = 5,
  FZSG_E_FINGERPRINT_MISMATCH = 6,
  FZSG_E_TRAINING = 7,
  FZSG_E_EMPTY_INPUT = 8,
  FZSG_E_INTERNAL = 99
} fzsg_status;

typedef struct fzsg_config fzsg_config;
typedef struct fzsg_model fzsg_model;

/* Receives one log line (no trailing newline). May be NULL. */
typedef void (*fzsg_log_fn)(const char* line, void* user);

typedef struct fzsg_metrics {
  double accuracy;
  double dice;
  double jaccard;
  double sensitivity;
  double specificity;
  int degenerate; /* nonzero if some ratio was 0/0 and reported as 1 */
} fzsg_metrics;

typedef struct fzsg_cv_report {
  double accuracy;
  double auc; /* macro one-vs-rest */
  double class_auc[3];
  uint64_t confusion[3][3]; /* [true][predicted], classes lesion, skin, other */
} fzsg_cv_report;

typedef struct fzsg_train_summary {
  uint64_t samples[3]; /* lesion, skin, other */
  uint32_t images_used;
  uint32_t images_skipped;
} fzsg_train_summary;

FZSG_API const char* fzsg_version(void);
FZSG_API const char* fzsg_last_error(void);
FZSG_API void fzsg_string_free(char* s);
FZSG_API const char* fzsg_status_name(fzsg_status s);

/* Configuration: all tunables, as key = value pairs. */
FZSG_API fzsg_status fzsg_config_create(fzsg_config** out);
FZSG_API void fzsg_config_destroy(fzsg_config* cfg);
FZSG_API fzsg_status fzsg_config_set(fzsg_config* cfg, const char* key, const char* value);
FZSG_API fzsg_status fzsg_config_load_file(fzsg_config* cfg, const char* path);
FZSG_API fzsg_status fzsg_config_validate(const fzsg_config* cfg);
FZSG_API fzsg_status fzsg_config_dump(const fzsg_config* cfg, char** out);

/* Training. Samples every labelled image of images_dir (label maps named
 * <stem>_labels.png or <stem>.png in labels_dir). If cv_folds >= 2 a stratified
 * cross-validation is run on the same samples and written to cv (may be NULL
 * otherwise). summary may be NULL. */
FZSG_API fzsg_status fzsg_train_from_dirs(const fzsg_config* cfg, const char* images_dir, const char* labels_dir,
                                          int cv_folds, fzsg_model** out, fzsg_train_summary* summary,
                                          fzsg_cv_report* cv, fzsg_log_fn log, void* user);

FZSG_API fzsg_status fzsg_model_load(const char* path, fzsg_model** out);
/* Written to a temporary file and renamed, so a failed save leaves no partial file. */
FZSG_API fzsg_status fzsg_model_save(const fzsg_model* model, const char* path);
FZSG_API void fzsg_model_destroy(fzsg_model* model);
FZSG_API fzsg_status fzsg_model_info(const fzsg_model* model, uint32_t* n_trees, uint32_t* n_features,
                                     uint32_t* features_per_split);

/* Segments one image file and writes the mask PNG (0/255) at the original
 * resolution. trace_dir and overlay_path may be NULL. flags (may be NULL)
 * receives the ';'-joined degraded-mode flags. */
FZSG_API fzsg_status fzsg_segment_file(const fzsg_model* model, const fzsg_config* cfg, const char* input,
                                       const char* mask_path, const char* trace_dir, const char* overlay_path,
                                       char** flags);

/* In-memory variant: rgb is width*height*3 interleaved bytes; mask receives
 * width*height bytes of 0/255. */
FZSG_API fzsg_status fzsg_segment_rgb(const fzsg_model* model, const fzsg_config* cfg, const uint8_t* rgb, int width,
                                      int height, uint8_t* mask);

/* Writes the probability images of one image (I_lesion, I_skin, I_other and
 * the composite) into out_dir as <stem>_<name>.png. */
FZSG_API fzsg_status fzsg_inspect_file(const fzsg_model* model, const fzsg_config* cfg, const char* input,
                                       const char* out_dir);

/* Scores predictions against <stem>_Segmentation.png ground truths and writes
 * a CSV report. mean, n_images and n_errors may be NULL. */
FZSG_API fzsg_status fzsg_evaluate_dirs(const char* pred_dir, const char* gt_dir, const char* csv_path, int threads,
                                        fzsg_metrics* mean, size_t* n_images, size_t* n_errors);

/* Metrics of two masks of n bytes each (nonzero = foreground). */
FZSG_API fzsg_status fzsg_metrics_from_masks(const uint8_t* pred, const uint8_t* gt, size_t n, fzsg_metrics* out);

/* Published reference scores, printed next to evaluation results for comparison. */
FZSG_API const char* fzsg_reference_line(void);

#ifdef __cplusplus
}
#endif

#endif /* FZSG_H */
