/* SPDX-License-Identifier: Apache-2.0 */
#ifndef AUSCULT_AUSCULT_H
#define AUSCULT_AUSCULT_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(AUSCULT_BUILDING)
#    define AUSC_API __declspec(dllexport)
#  else
#    define AUSC_API __declspec(dllimport)
#  endif
#else
#  define AUSC_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ausc_status {
  AUSC_OK = 0,
  AUSC_ERR_VALIDATION = 1,
  AUSC_ERR_DATA = 2,
  AUSC_ERR_NUMERIC = 3,
  AUSC_ERR_INTERNAL = 4
} ausc_status;

typedef struct ausc_config ausc_config;
typedef struct ausc_report ausc_report;
typedef struct ausc_model ausc_model;

/* Message of the last failed call on this thread; "" after success. */
AUSC_API const char* ausc_last_error(void);
AUSC_API const char* ausc_version(void);

AUSC_API ausc_status ausc_config_create(ausc_config** out);
AUSC_API void ausc_config_destroy(ausc_config* cfg);
AUSC_API ausc_status ausc_config_set(ausc_config* cfg, const char* key, const char* value);
/* Flat "key = value" file; later set() calls override it. */
AUSC_API ausc_status ausc_config_load_file(ausc_config* cfg, const char* path);
AUSC_API ausc_status ausc_config_validate(const ausc_config* cfg);
/* Caller-owned buffer; *needed receives the size including the terminator. */
AUSC_API ausc_status ausc_config_to_text(const ausc_config* cfg, char* buf, size_t cap,
                                         size_t* needed);

/* Train and evaluate one configuration. run_dir (may be NULL) receives the
 * output directory. */
AUSC_API ausc_status ausc_run_experiment(const ausc_config* cfg, ausc_report** out,
                                         char* run_dir, size_t cap);
/* Comma-separated axis lists, e.g. "S1,S3", "LSTM,BiGRU", "zscore,minmax".
 * Writes sweep.csv under the configured out_dir and returns the number of
 * failed cells in *failed. */
AUSC_API ausc_status ausc_run_sweep(const ausc_config* cfg, const char* settings,
                                    const char* models, const char* norms, size_t* failed,
                                    char* csv_path, size_t cap);
/* out_dir may be NULL. */
AUSC_API ausc_status ausc_evaluate(const ausc_config* cfg, const char* model_path,
                                   int test_split_only, const char* out_dir, ausc_report** out);
AUSC_API ausc_status ausc_score_files(const char* pred_csv, const char* truth_csv,
                                      const char* task, ausc_report** out);

AUSC_API ausc_status ausc_synth_write(const char* dir, size_t n, int classes, uint64_t seed,
                                      size_t* written);
/* Per-window MFCC rows of a WAV file (resampled to 4 kHz) as CSV. */
AUSC_API ausc_status ausc_features_write_csv(const char* wav_path, const char* setting,
                                             const char* csv_path, size_t* rows);

/* Field names: sensitivity, specificity, icbhi_score, macro_accuracy,
 * macro_precision, macro_recall, macro_f1. *defined is 0 when the value is
 * undefined for the confusion matrix. */
AUSC_API ausc_status ausc_report_get(const ausc_report* r, const char* field, double* value,
                                     int* defined);
AUSC_API ausc_status ausc_report_to_json(const ausc_report* r, char* buf, size_t cap,
                                         size_t* needed);
AUSC_API ausc_status ausc_report_to_text(const ausc_report* r, const char* label, char* buf,
                                         size_t cap, size_t* needed);
AUSC_API void ausc_report_destroy(ausc_report* r);

AUSC_API ausc_status ausc_model_load(const char* path, ausc_model** out);
AUSC_API void ausc_model_destroy(ausc_model* m);
/* n_features, n_classes may be NULL. */
AUSC_API ausc_status ausc_model_info(const ausc_model* m, size_t* n_features, size_t* n_classes);
/* Normalizes and classifies one sequence of n_frames x n_features values,
 * row-major. probs (may be NULL) must hold n_classes doubles. */
AUSC_API ausc_status ausc_model_predict(const ausc_model* m, const double* frames,
                                        size_t n_frames, size_t n_features, int* label,
                                        double* probs);

#ifdef __cplusplus
}
#endif

#endif /* AUSCULT_AUSCULT_H */
