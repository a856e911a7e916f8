#ifndef MEDIALEAN_H
#define MEDIALEAN_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/**
 * Result of every fallible call.
 */
typedef enum MlStatus {
  ML_STATUS_OK = 0,
  ML_STATUS_NULL_POINTER = 1,
  ML_STATUS_INVALID_UTF8 = 2,
  ML_STATUS_INVALID_INPUT = 3,
  ML_STATUS_IO = 4,
  ML_STATUS_PARSE = 5,
  ML_STATUS_OUT_OF_DOMAIN = 6,
  ML_STATUS_DEGENERATE = 7,
  ML_STATUS_NON_CONVERGENCE = 8,
  ML_STATUS_NO_OVERLAP = 9,
  ML_STATUS_UNKNOWN_DOMAIN = 10,
  ML_STATUS_CONFIG = 11,
  ML_STATUS_MISSING_ARTIFACT = 12,
  ML_STATUS_PANIC = 99,
} MlStatus;

/**
 * Seed side passed to [`ml_label_spread`].
 */
typedef enum MlLabel {
  ML_LABEL_LEFT = -1,
  ML_LABEL_RIGHT = 1,
} MlLabel;

/**
 * Location-string gazetteer.
 */
typedef struct MlGazetteer MlGazetteer;

/**
 * Undirected weighted retweet graph with a seed set.
 */
typedef struct MlGraph MlGraph;

/**
 * Leaning scores of the users reached by label spreading.
 */
typedef struct MlScores MlScores;

/**
 * Public-suffix rule set.
 */
typedef struct MlSuffixRules MlSuffixRules;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string. Do not free.
 */
const char *ml_version(void);

/**
 * Copy of the calling thread's last error message, or NULL when the last
 * call succeeded. Release with [`ml_string_free`].
 */
char *ml_last_error_message(void);

/**
 * Releases a string returned by this library. NULL is ignored.
 *
 * # Safety
 * `s` must come from this library and must not be used afterwards.
 */
void ml_string_free(char *s);

/**
 * Disparity-filter p-value `(1 - p)^(k - 1)` of an edge with strength
 * share `p` at an endpoint of degree `k`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum MlStatus ml_disparity_pvalue(double p, size_t k, double *out);

struct MlGraph *ml_graph_new(void);

/**
 * # Safety
 * `g` must come from this library and must not be used afterwards.
 */
void ml_graph_free(struct MlGraph *g);

/**
 * Adds `weight` retweets between `u` and `v`. Self-loops and zero weights
 * are ignored.
 *
 * # Safety
 * `g` must be a live graph handle; `u` and `v` NUL-terminated strings.
 */
enum MlStatus ml_graph_add_edge(struct MlGraph *g, const char *u, const char *v, uint64_t weight);

/**
 * Marks an existing node as a seed; unknown users are an error.
 *
 * # Safety
 * `g` must be a live graph handle; `user` a NUL-terminated string.
 */
enum MlStatus ml_graph_add_seed(struct MlGraph *g, const char *user);

/**
 * # Safety
 * `g` must be a live graph handle or NULL.
 */
size_t ml_graph_node_count(const struct MlGraph *g);

/**
 * # Safety
 * `g` must be a live graph handle or NULL.
 */
size_t ml_graph_edge_count(const struct MlGraph *g);

/**
 * Disparity-filter backbone of `g` as a new graph.
 *
 * # Safety
 * `g` must be a live graph handle and `out` valid for writes.
 */
enum MlStatus ml_graph_backbone(const struct MlGraph *g,
                                double significance,
                                bool keep_seed_seed_edges,
                                struct MlGraph **out);

/**
 * Label spreading over `g` from `n_seeds` labelled users.
 *
 * # Safety
 * `g` must be a live graph handle; `seed_users` and `seed_labels` arrays of
 * `n_seeds` elements; `out` valid for writes.
 */
enum MlStatus ml_label_spread(const struct MlGraph *g,
                              const char *const *seed_users,
                              const enum MlLabel *seed_labels,
                              size_t n_seeds,
                              double alpha,
                              double tolerance,
                              size_t max_iterations,
                              struct MlScores **out);

/**
 * # Safety
 * `s` must come from this library and must not be used afterwards.
 */
void ml_scores_free(struct MlScores *s);

/**
 * Number of scored users.
 *
 * # Safety
 * `s` must be a live scores handle or NULL.
 */
size_t ml_scores_len(const struct MlScores *s);

/**
 * Iterations the spreading took.
 *
 * # Safety
 * `s` must be a live scores handle or NULL.
 */
size_t ml_scores_iterations(const struct MlScores *s);

/**
 * The `i`-th scored user in id order. `*user` borrows from the handle and
 * stays valid until it is freed.
 *
 * # Safety
 * `s` must be a live scores handle; `user` and `score` valid for writes.
 */
enum MlStatus ml_scores_at(const struct MlScores *s, size_t i, const char **user, double *score);

/**
 * Score of `user`; `*found` is false for users that were not reached.
 *
 * # Safety
 * `s` must be a live scores handle; `user` NUL-terminated; `score` and
 * `found` valid for writes.
 */
enum MlStatus ml_scores_get(const struct MlScores *s, const char *user, double *score, bool *found);

/**
 * Loads a public suffix list file.
 *
 * # Safety
 * `path` must be NUL-terminated and `out` valid for writes.
 */
enum MlStatus ml_suffix_rules_load(const char *path, struct MlSuffixRules **out);

/**
 * Parses public suffix rules from text.
 *
 * # Safety
 * `text` must be NUL-terminated and `out` valid for writes.
 */
enum MlStatus ml_suffix_rules_parse(const char *text, struct MlSuffixRules **out);

/**
 * # Safety
 * `r` must come from this library and must not be used afterwards.
 */
void ml_suffix_rules_free(struct MlSuffixRules *r);

/**
 * Registrable domain of a URL. Release `*out` with [`ml_string_free`].
 *
 * # Safety
 * `rules` must be a live handle; `url` NUL-terminated; `out` valid for
 * writes.
 */
enum MlStatus ml_extract_domain(const struct MlSuffixRules *rules, const char *url, char **out);

/**
 * Loads a gazetteer CSV.
 *
 * # Safety
 * `path` must be NUL-terminated and `out` valid for writes.
 */
enum MlStatus ml_gazetteer_load(const char *path, struct MlGazetteer **out);

/**
 * # Safety
 * `g` must come from this library and must not be used afterwards.
 */
void ml_gazetteer_free(struct MlGazetteer *g);

/**
 * Country code of a profile location string. `*out` is set to NULL when
 * the string is unknown or ambiguous; otherwise release it with
 * [`ml_string_free`].
 *
 * # Safety
 * `g` must be a live handle; `location` NUL-terminated; `out` valid for
 * writes.
 */
enum MlStatus ml_gazetteer_resolve(const struct MlGazetteer *g, const char *location, char **out);

/**
 * Pearson correlation and two-sided p-value of two arrays of length `n`.
 *
 * # Safety
 * `xs` and `ys` must hold `n` elements; `r` and `p` valid for writes.
 */
enum MlStatus ml_pearson(const double *xs, const double *ys, size_t n, double *r, double *p);

/**
 * Spearman rank correlation and two-sided p-value, ties at average rank.
 *
 * # Safety
 * As for [`ml_pearson`].
 */
enum MlStatus ml_spearman(const double *xs, const double *ys, size_t n, double *r, double *p);

/**
 * Runs one pipeline stage (`ingest` .. `report`, or `all`) from a config
 * file. A missing upstream stage yields [`MlStatus::MissingArtifact`].
 *
 * # Safety
 * `config_path` and `stage` must be NUL-terminated.
 */
enum MlStatus ml_run_stage(const char *config_path, const char *stage, size_t workers);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MEDIALEAN_H */
