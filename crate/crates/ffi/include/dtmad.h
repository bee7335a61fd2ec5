#ifndef DTMAD_H
#define DTMAD_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stddef.h>
#include <stdint.h>

/**
 * Detector selector for [`dtmad_score`].
 */
enum DtmadMethod
#ifdef __cplusplus
  : uint32_t
#endif // __cplusplus
 {
  DTMAD_METHOD_KNN = 0,
  DTMAD_METHOD_KTHNN = 1,
  DTMAD_METHOD_DTM = 2,
  DTMAD_METHOD_DTMF = 3,
  DTMAD_METHOD_LOF = 4,
};
#ifndef __cplusplus
typedef uint32_t DtmadMethod;
#endif // __cplusplus

typedef enum {
  DTMAD_STATUS_OK = 0,
  DTMAD_STATUS_NULL_POINTER = 1,
  DTMAD_STATUS_INVALID_ARGUMENT = 2,
  DTMAD_STATUS_DIMENSION_MISMATCH = 3,
  DTMAD_STATUS_K_OUT_OF_RANGE = 4,
  DTMAD_STATUS_SINGLE_CLASS = 5,
  DTMAD_STATUS_UNSUPPORTED = 6,
  DTMAD_STATUS_INTERNAL = 7,
  DTMAD_STATUS_PANIC = 8,
} DtmadStatus;

/**
 * Opaque point set.
 */
typedef struct DtmadDataset DtmadDataset;

/**
 * Opaque nearest-neighbor index; owns a copy of its points.
 */
typedef struct DtmadIndex DtmadIndex;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *dtmad_version(void);

/**
 * Message describing the calling thread's most recent failure.
 */
const char *dtmad_last_error_message(void);

/**
 * Copies `n·d` row-major coordinates into a new dataset.
 */
DtmadStatus dtmad_dataset_new(const double *values, size_t n, size_t d, DtmadDataset **out);

void dtmad_dataset_free(DtmadDataset *dataset);

/**
 * Number of points; 0 for a null handle.
 */
size_t dtmad_dataset_n(const DtmadDataset *dataset);

/**
 * Dimension; 0 for a null handle.
 */
size_t dtmad_dataset_d(const DtmadDataset *dataset);

DtmadStatus dtmad_index_new(const DtmadDataset *dataset, DtmadIndex **out);

void dtmad_index_free(DtmadIndex *index);

/**
 * The `k` nearest sample points of `x` (length `d`), closest first, ties
 * broken by lower index. Writes `k` entries to each output array.
 */
DtmadStatus dtmad_index_knn(const DtmadIndex *index,
                            const double *x,
                            size_t d,
                            size_t k,
                            size_t *out_indices,
                            double *out_distances);

/**
 * Distance from `x` to its `k`-th nearest sample point.
 */
DtmadStatus dtmad_index_knn_radius(const DtmadIndex *index,
                                   const double *x,
                                   size_t d,
                                   size_t k,
                                   double *out);

/**
 * Empirical DTM of order `q` at an arbitrary point `x`.
 */
DtmadStatus dtmad_dtm(const DtmadIndex *index,
                      const double *x,
                      size_t d,
                      size_t k,
                      double q,
                      double *out);

/**
 * Scores every indexed point. `method` is a [`DtmadMethod`] value; `k = 0`
 * selects the default `⌈0.03·n⌉`; `q` is read by `DTMAD_METHOD_DTM` only.
 * `out_scores` receives `n` values; `out_k` (nullable) the neighbor count.
 */
DtmadStatus dtmad_score(const DtmadIndex *index,
                        uint32_t method,
                        size_t k,
                        double q,
                        double *out_scores,
                        size_t *out_k);

/**
 * ROC-AUC of `scores` against 0/1 `labels` (1 = anomaly).
 */
DtmadStatus dtmad_roc_auc(const double *scores, const uint8_t *labels, size_t n, double *out);

/**
 * Average precision of `scores` against 0/1 `labels` (1 = anomaly).
 */
DtmadStatus dtmad_average_precision(const double *scores,
                                    const uint8_t *labels,
                                    size_t n,
                                    double *out);

/**
 * `β_n` of the uniform radius bound.
 */
DtmadStatus dtmad_beta_n(size_t n, size_t d, double delta, double *out);

/**
 * `α_n` of the sample-point radius bound.
 */
DtmadStatus dtmad_alpha_n(size_t n, double delta, double *out);

/**
 * Uniform deviation bound on the p-NN radius.
 */
DtmadStatus dtmad_radius_bound(size_t n, size_t d, double delta, double p, double c, double *out);

/**
 * Deviation bound on the p-NN radius at the sample points.
 */
DtmadStatus dtmad_radius_bound_sample(size_t n, double delta, double p, double c, double *out);

/**
 * Uniform deviation bound on the DTM.
 */
DtmadStatus dtmad_dtm_bound(size_t n, size_t d, double delta, double m, double c, double *out);

/**
 * Deviation bound on the DTM at the sample points.
 */
DtmadStatus dtmad_dtm_bound_sample(size_t n, double delta, double m, double c, double *out);

/**
 * Density level `g₀` required for separation; `q` may be `INFINITY`.
 */
DtmadStatus dtmad_g0_threshold(double m,
                               double epsilon,
                               double eta,
                               double h,
                               double b,
                               double q,
                               double *out);

/**
 * Smallest separation at which the whole normal support is safe.
 */
DtmadStatus dtmad_full_support_eta(double m,
                                   double epsilon,
                                   double a0,
                                   double b,
                                   double q,
                                   double h,
                                   double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DTMAD_H */
