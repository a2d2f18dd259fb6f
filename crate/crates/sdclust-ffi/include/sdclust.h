#ifndef SDCLUST_H
#define SDCLUST_H

/* Generated from the Rust sources by cbindgen; edit those instead. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define SDC_OK 0

#define SDC_MISUSE 1

#define SDC_CONFIG 2

#define SDC_DATA 3

#define SDC_NUMERICAL 4

// Opaque handle to a partition of the panel's assets.
typedef struct SdcClustering SdcClustering;

// Opaque handle to a pairwise dominance-coefficient matrix.
typedef struct SdcMatrix SdcMatrix;

// Opaque handle to a balanced weekly return panel.
typedef struct SdcPanel SdcPanel;

// Pair-test settings, shared by every test-driven call.
typedef struct SdcTestConfig {
  // Dominance order: 1, 2 or 3.
  uint8_t order;
  // Nonzero tests ascending (risk-averse), zero descending.
  uint8_t ascending;
  // Bootstrap replications, at least 1.
  uint64_t reps;
  // Evaluation grid size, at least 2.
  uint64_t grid_points;
  // Root seed; identical settings reproduce results bit for bit.
  uint64_t seed;
  // Pooled-variance floor; pass 0 for the default 1e-12.
  double var_floor;
} SdcTestConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the most recent failure on this thread; empty until one fails.
const char *sdc_last_error_message(void);

// Loads a balanced return panel from a `period,<tickers...>` CSV.
//
// # Safety
// `path` must be a NUL-terminated string and `out` a valid pointer.
int32_t sdc_panel_load_csv(const char *path,
                           struct SdcPanel **out);

// Loads raw `date,ticker,close` prices, aggregates to weekly, and computes
// log returns, dropping assets below `min_coverage` (0, 1].
//
// # Safety
// `path` must be a NUL-terminated string and `out` a valid pointer.
int32_t sdc_panel_from_prices(const char *path,
                              double min_coverage,
                              struct SdcPanel **out);

// # Safety
// `panel` must come from a `sdc_panel_*` constructor and not be freed twice.
void sdc_panel_free(struct SdcPanel *panel);

// # Safety
// `panel` and `out` must be valid pointers.
int32_t sdc_panel_n_assets(const struct SdcPanel *panel,
                           uint64_t *out);

// # Safety
// `panel` and `out` must be valid pointers.
int32_t sdc_panel_n_periods(const struct SdcPanel *panel,
                            uint64_t *out);

// Copies the NUL-terminated ticker of asset `index` into `buf`. Fails with
// code 2 when `cap` is too small; `buf` is untouched on failure.
//
// # Safety
// `buf` must point to at least `cap` writable bytes.
int32_t sdc_panel_ticker(const struct SdcPanel *panel,
                         uint64_t index,
                         char *buf,
                         uint64_t cap);

// Two-sided dominance test between assets `i` and `j`; writes the
// coefficient (1 - bootstrap p-value) to `out`.
//
// # Safety
// All pointers must be valid; `cfg` must point to a filled config.
int32_t sdc_pair_coefficient(const struct SdcPanel *panel,
                             uint64_t i,
                             uint64_t j,
                             const struct SdcTestConfig *cfg,
                             double *out);

// Builds the full pairwise coefficient matrix.
//
// # Safety
// All pointers must be valid; `cfg` must point to a filled config.
int32_t sdc_matrix_build(const struct SdcPanel *panel,
                         const struct SdcTestConfig *cfg,
                         struct SdcMatrix **out);

// Reads a matrix from the CSV format written by `sdc_matrix_save_csv`.
//
// # Safety
// `path` must be a NUL-terminated string and `out` a valid pointer.
int32_t sdc_matrix_load_csv(const char *path,
                            struct SdcMatrix **out);

// # Safety
// `matrix` and `path` must be valid pointers.
int32_t sdc_matrix_save_csv(const struct SdcMatrix *matrix,
                            const char *path);

// # Safety
// `matrix` must come from a matrix constructor and not be freed twice.
void sdc_matrix_free(struct SdcMatrix *matrix);

// # Safety
// `matrix` and `out` must be valid pointers.
int32_t sdc_matrix_n(const struct SdcMatrix *matrix,
                     uint64_t *out);

// Coefficient between assets `i` and `k` in matrix order.
//
// # Safety
// `matrix` and `out` must be valid pointers.
int32_t sdc_matrix_get(const struct SdcMatrix *matrix,
                       uint64_t i,
                       uint64_t k,
                       double *out);

// K-means over dominance distances. `iter_reps` is the cheaper replication
// count used inside iterations; final distances use `cfg->reps`.
//
// # Safety
// All pointers must be valid; `cfg` must point to a filled config.
int32_t sdc_cluster_kmeans(const struct SdcPanel *panel,
                           uint64_t k,
                           const struct SdcTestConfig *cfg,
                           uint64_t iter_reps,
                           uint64_t max_iter,
                           struct SdcClustering **out);

// Average-linkage agglomerative clustering cut at `k`.
//
// # Safety
// `matrix` and `out` must be valid pointers.
int32_t sdc_cluster_hierarchical(const struct SdcMatrix *matrix,
                                 uint64_t k,
                                 struct SdcClustering **out);

// # Safety
// `clustering` must come from a cluster constructor and not be freed twice.
void sdc_clustering_free(struct SdcClustering *clustering);

// # Safety
// `clustering` and `out` must be valid pointers.
int32_t sdc_clustering_k(const struct SdcClustering *clustering,
                         uint64_t *out);

// Cluster label of `ticker`, or code 2 when the ticker is not assigned.
//
// # Safety
// All pointers must be valid; `ticker` must be NUL-terminated.
int32_t sdc_clustering_label(const struct SdcClustering *clustering,
                             const char *ticker,
                             uint64_t *out);

// Mean silhouette of the partition over the matrix distances.
//
// # Safety
// All pointers must be valid.
int32_t sdc_silhouette(const struct SdcMatrix *matrix,
                       const struct SdcClustering *clustering,
                       double *out);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* SDCLUST_H */
