#ifndef TOLERANT_CS_H
#define TOLERANT_CS_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum TcsStatus {
  TCS_STATUS_OK = 0,
  TCS_STATUS_NULL_POINTER = 1,
  // Malformed input: bad dimensions, indices, specs.
  TCS_STATUS_INVALID_ARGUMENT = 2,
  // Numerical or runtime failure, e.g. a rank-deficient refit.
  TCS_STATUS_RUNTIME = 3,
  // A caller-provided buffer has the wrong length.
  TCS_STATUS_BUFFER_SIZE = 4,
  TCS_STATUS_PANIC = 5,
} TcsStatus;

// Matrix families accepted by [`tcs_matrix_build`].
typedef enum TcsMatrixKind {
  TCS_MATRIX_KIND_F_CONSEC_BEGIN = 0,
  TCS_MATRIX_KIND_F_CONSECUTIVE = 1,
  TCS_MATRIX_KIND_F_RAND = 2,
  TCS_MATRIX_KIND_FN_X_STAT_BLOCKS = 3,
  TCS_MATRIX_KIND_R_GAUSS = 4,
  TCS_MATRIX_KIND_XI_INFLATED = 5,
} TcsMatrixKind;

// Opaque sensing matrix with its correlation table.
typedef struct TcsMatrix TcsMatrix;

// Opaque DtOMP result.
typedef struct TcsRecovery TcsRecovery;

typedef struct TcsGuaranteeReport {
  size_t d;
  size_t s;
  double mu_d;
  double welch;
  double mu_c_d_2s;
  double mu_c_d_2s_minus_1;
  bool thm2_holds;
  bool corollary_mu_d_holds;
  bool corollary_cumulative_holds;
} TcsGuaranteeReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or `NULL`. The pointer is
// valid until the next library call on the same thread.
const char *tcs_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *tcs_version(void);

// Builds an `m x n` matrix of the given [`TcsMatrixKind`].
//
// # Safety
// `out_matrix` must be valid for writes.
enum TcsStatus tcs_matrix_build(uint32_t kind,
                                size_t m,
                                size_t n,
                                uint64_t seed,
                                size_t inflation_d,
                                struct TcsMatrix **out_matrix);

// # Safety
// `matrix` must be `NULL` or a handle from [`tcs_matrix_build`] not yet freed.
void tcs_matrix_free(struct TcsMatrix *matrix);

// # Safety
// `matrix` must be a live handle; `rows` and `cols` valid for writes.
enum TcsStatus tcs_matrix_dims(const struct TcsMatrix *matrix, size_t *rows, size_t *cols);

// Copies the entries column-major into two arrays of exactly `rows * cols` values.
//
// # Safety
// `re` and `im` must be valid for `len` writes.
enum TcsStatus tcs_matrix_entries(const struct TcsMatrix *matrix,
                                  double *re,
                                  double *im,
                                  size_t len);

// # Safety
// `matrix` must be a live handle, `out_value` valid for writes.
enum TcsStatus tcs_coherence(const struct TcsMatrix *matrix, double *out_value);

// # Safety
// `matrix` must be a live handle, `out_value` valid for writes.
enum TcsStatus tcs_d_coherence(const struct TcsMatrix *matrix, size_t d, double *out_value);

// # Safety
// `matrix` must be a live handle, `out_value` valid for writes.
enum TcsStatus tcs_cumulative_d_coherence(const struct TcsMatrix *matrix,
                                          size_t d,
                                          size_t k,
                                          double *out_value);

// # Safety
// `out_value` must be valid for writes.
enum TcsStatus tcs_welch_bound(size_t m, size_t n, double *out_value);

// # Safety
// `matrix` must be a live handle, `out_report` valid for writes.
enum TcsStatus tcs_check_theorem2(const struct TcsMatrix *matrix,
                                  size_t d,
                                  size_t s,
                                  struct TcsGuaranteeReport *out_report);

// Runs DtOMP on the measurement `y` (length = matrix rows).
//
// # Safety
// `y_re` and `y_im` must be valid for `y_len` reads, `out_result` for writes.
enum TcsStatus tcs_dtomp(const struct TcsMatrix *matrix,
                         const double *y_re,
                         const double *y_im,
                         size_t y_len,
                         size_t s,
                         size_t d,
                         struct TcsRecovery **out_result);

// # Safety
// `recovery` must be `NULL` or a handle from [`tcs_dtomp`] not yet freed.
void tcs_recovery_free(struct TcsRecovery *recovery);

// Number of recovered indices.
//
// # Safety
// `recovery` must be a live handle, `out_len` valid for writes.
enum TcsStatus tcs_recovery_support_len(const struct TcsRecovery *recovery, size_t *out_len);

// Copies the sorted 1-based support into a buffer of exactly the support length.
//
// # Safety
// `indices` must be valid for `len` writes.
enum TcsStatus tcs_recovery_support(const struct TcsRecovery *recovery,
                                    size_t *indices,
                                    size_t len);

// Copies the length-`N` estimate into two arrays of exactly `N` values.
//
// # Safety
// `re` and `im` must be valid for `len` writes.
enum TcsStatus tcs_recovery_estimate(const struct TcsRecovery *recovery,
                                     double *re,
                                     double *im,
                                     size_t len);

// True when DtOMP stopped early for lack of admissible candidates.
//
// # Safety
// `recovery` must be a live handle, `out_flag` valid for writes.
enum TcsStatus tcs_recovery_exhausted(const struct TcsRecovery *recovery, bool *out_flag);

// Fraction of the true support within distance `d` of the recovered support.
// Both index lists are 1-based over `1..=n`.
//
// # Safety
// The index arrays must be valid for their lengths, `out_value` for writes.
enum TcsStatus tcs_rho_d(const size_t *true_indices,
                         size_t true_len,
                         const size_t *recovered_indices,
                         size_t recovered_len,
                         size_t n,
                         size_t d,
                         double *out_value);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TOLERANT_CS_H */
