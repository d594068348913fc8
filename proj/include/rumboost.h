/*
 * rumboost C API: gradient-boosted random-utility models behind opaque
 * handles and integer status codes.
 *
 * Every function returns RUMB_OK (0) on success or a nonzero status; the
 * message for the most recent failure on the calling thread is available
 * through rumb_last_error(). Handles are created by the rumb_*_load /
 * rumb_train family and must be released with the matching rumb_*_free.
 */
#ifndef RUMBOOST_H
#define RUMBOOST_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum rumb_status {
  RUMB_OK = 0,
  RUMB_ERR_CONFIG = 2,  /* bad option, spec, or request */
  RUMB_ERR_DATA = 3,    /* unreadable / inconsistent data or files */
  RUMB_ERR_NUMERIC = 4  /* numerical failure */
} rumb_status;

typedef struct rumb_dataset rumb_dataset;
typedef struct rumb_spec rumb_spec;
typedef struct rumb_model rumb_model;

/* Message for the last failing call on this thread. Never NULL. */
const char* rumb_last_error(void);
const char* rumb_version(void);

/* ------------------------------------------------------------------ data */

/* Loads a delimited table using a JSON schema document (choice column,
 * optional group column, categorical columns with reference levels). */
rumb_status rumb_dataset_load(const char* data_path, const char* schema_path,
                              rumb_dataset** out);
/* As above, but overrides the schema's group column (empty string clears). */
rumb_status rumb_dataset_load_grouped(const char* data_path, const char* schema_path,
                                      const char* group_column, rumb_dataset** out);
void rumb_dataset_free(rumb_dataset* ds);
size_t rumb_dataset_rows(const rumb_dataset* ds);
size_t rumb_dataset_alts(const rumb_dataset* ds);

/* ------------------------------------------------------------------ spec */

rumb_status rumb_spec_load(const char* spec_path, rumb_spec** out);
rumb_status rumb_spec_parse(const char* json_text, rumb_spec** out);
/* Validates against a dataset; warnings (if any) are written to the buffer
 * as newline-separated text and truncated to buffer_len - 1 characters. */
rumb_status rumb_spec_validate(const rumb_spec* spec, const rumb_dataset* ds,
                               char* warnings_buffer, size_t buffer_len);
/* Canonical serialization; returns a malloc'd string owned by the caller. */
rumb_status rumb_spec_serialize(const rumb_spec* spec, char** out_text);
void rumb_spec_free(rumb_spec* spec);

/* -------------------------------------------------------------- training */

typedef struct rumb_train_options {
  double learning_rate;        /* <= 0 selects the default 0.1 */
  int num_rounds;              /* <= 0 selects the default 1300 */
  int early_stopping_rounds;   /* < 0 selects the default 100; 0 disables */
  int max_bins;                /* <= 0 -> 255 */
  int min_data_in_bin;         /* <= 0 -> 3 */
  int min_data_in_leaf;        /* <= 0 -> 20 */
  double min_sum_hessian_in_leaf; /* <= 0 -> 1e-3 */
  double min_gain_to_split;    /* < 0 -> 0 */
  double valid_fraction;       /* <= 0 -> 0.2 */
  double bagging_fraction;     /* <= 0 or >= 1 disables (FE trees only) */
  int bagging_freq;
  double feature_fraction;     /* <= 0 or >= 1 disables (FE trees only) */
  int nested_leaf_factor;      /* 1 keeps the (J-1)/J leaf factor under the nested head */
  uint64_t seed;
  int threads;                 /* <= 0: one per core, capped by RUMBOOST_THREADS */
  const char* nests;           /* optional "a;b;c,d" nest override, NULL = use spec */
  double mu;                   /* scale for overridden nests; < 1 -> 1.0 */
} rumb_train_options;

void rumb_train_options_init(rumb_train_options* opts);

/* Trains a model. `valid` may be NULL: with early stopping enabled a
 * group-aware holdout is split off internally. When log_path is non-NULL the
 * per-round train/validation loss table is written there. */
rumb_status rumb_train(const rumb_dataset* train, const rumb_dataset* valid,
                       const rumb_spec* spec, const rumb_train_options* opts,
                       const char* log_path, rumb_model** out);

/* Grouped k-fold cross-validation; reports the mean held-out loss and the
 * rounded mean best round. table_path (optional) receives the fold table. */
rumb_status rumb_cross_validate(const rumb_dataset* ds, const rumb_spec* spec,
                                const rumb_train_options* opts, int k,
                                const char* table_path, double* mean_ce,
                                int* mean_best_round);

/* ---------------------------------------------------------------- models */

rumb_status rumb_model_save(const rumb_model* model, const char* path);
rumb_status rumb_model_load(const char* path, rumb_model** out);
void rumb_model_free(rumb_model* model);

/* Mean negative log-likelihood per observation on a dataset. Spline
 * overrides, when the model has been smoothed, take effect here. */
rumb_status rumb_evaluate(const rumb_model* model, const rumb_dataset* ds, double* out_ce);
/* Probabilities, row-major n_rows x n_alts into caller storage. */
rumb_status rumb_predict_probs(const rumb_model* model, const rumb_dataset* ds,
                               double* out, size_t out_len);
/* Alternative-specific constants (reference alternative pinned to 0). */
rumb_status rumb_model_ascs(const rumb_model* model, double* out, size_t out_len);
rumb_status rumb_export_ascs(const rumb_model* model, const char* path);
rumb_status rumb_model_rounds(const rumb_model* model, int* out_rounds);

/* ------------------------------------------------------------- smoothing */

/* Replaces the piecewise-constant utilities of the targeted parameters with
 * monotone cubic splines, choosing knot counts in [knots_min, knots_max] by
 * randomized search (n_searches draws) against the full-model BIC.
 * `targets` is "alt:variable,alt:variable,..." or NULL for every
 * single-variable parameter with trees. The overrides are stored on the
 * model handle and travel with rumb_model_save. */
rumb_status rumb_smooth(rumb_model* model, const rumb_dataset* ds, const char* targets,
                        int knots_min, int knots_max, int n_searches, uint64_t seed,
                        const char* report_path, double* out_bic);

/* ------------------------------------------------------------ indicators */

/* Utility curve of one parameter: x, value, derivative rows. Smoothed
 * parameters emit the spline; unsmoothed ones emit the step levels. */
rumb_status rumb_export_curve(const rumb_model* model, const char* alt,
                              const char* variable, int n_points, const char* path);

/* VoT surface over an n_time x n_cost grid spanning the smoothed curves'
 * domains; requires both parameters smoothed. */
rumb_status rumb_export_vot_surface(const rumb_model* model, const char* alt,
                                    const char* time_var, const char* cost_var,
                                    int n_time, int n_cost, double vot_min, double vot_max,
                                    int log10_values, const char* path);

rumb_status rumb_export_population_vot(const rumb_model* model, const rumb_dataset* ds,
                                       const char* alt, const char* time_var,
                                       const char* cost_var, double vot_min, double vot_max,
                                       int hist_bins, const char* values_path,
                                       const char* hist_path);

/* 2-variable interaction ensemble on an n1 x n2 grid over observed ranges. */
rumb_status rumb_export_contour(const rumb_model* model, const char* alt, const char* var1,
                                const char* var2, int n1, int n2, const char* path);

/* Individual-specific constants from functional-effect blocks; histogram per
 * alternative written as <hist_prefix><alt>.csv. */
rumb_status rumb_export_fe_constants(const rumb_model* model, const rumb_dataset* ds,
                                     int hist_bins, const char* values_path,
                                     const char* hist_prefix);

/* Trains on `iterations` bootstrap resamples and writes one band table per
 * single-variable parameter into out_dir. */
rumb_status rumb_bootstrap(const rumb_dataset* ds, const rumb_spec* spec,
                           const rumb_train_options* opts, int iterations,
                           const char* out_dir);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* RUMBOOST_H */
