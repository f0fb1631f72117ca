#ifndef MVCERT_H
#define MVCERT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum MvcertStatus {
  MVCERT_STATUS_OK = 0,
  MVCERT_STATUS_NULL_POINTER = 1,
  MVCERT_STATUS_INVALID_ARGUMENT = 2,
  MVCERT_STATUS_DOMAIN = 3,
  MVCERT_STATUS_DIMENSION_MISMATCH = 4,
  MVCERT_STATUS_CONVERGENCE = 5,
  MVCERT_STATUS_NUMERIC = 6,
  MVCERT_STATUS_CONFIG = 7,
  MVCERT_STATUS_IO = 8,
  MVCERT_STATUS_PARSE = 9,
  MVCERT_STATUS_BUFFER_TOO_SMALL = 10,
  MVCERT_STATUS_PANIC = 11,
} MvcertStatus;

/**
 * Dirichlet distribution over voter weightings.
 */
typedef struct MvcertDirichlet MvcertDirichlet;

/**
 * Examples × voters table of mistakes.
 */
typedef struct MvcertErrorMatrix MvcertErrorMatrix;

/**
 * A trained run with its report.
 */
typedef struct MvcertRun MvcertRun;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * NUL-terminated library version; static storage.
 */
const char *mvcert_version(void);

/**
 * Copies the last error message of this thread into `buf`.
 *
 * # Safety
 * `buf` must hold `len` writable bytes or be null; `needed` must be null or writable.
 */
enum MvcertStatus mvcert_last_error_message(char *buf, size_t len, size_t *needed);

/**
 * # Safety
 * `alpha` must point to `len` doubles; `out` must be writable.
 */
enum MvcertStatus mvcert_dirichlet_new(const double *alpha,
                                       size_t len,
                                       struct MvcertDirichlet **out);

/**
 * # Safety
 * `d` must come from [`mvcert_dirichlet_new`] and not be freed twice.
 */
void mvcert_dirichlet_free(struct MvcertDirichlet *d);

/**
 * Builds an error matrix from `n * m` row-major bytes (nonzero = mistake).
 *
 * # Safety
 * `entries` must point to `n * m` bytes; `out` must be writable.
 */
enum MvcertStatus mvcert_error_matrix_new(const uint8_t *entries,
                                          size_t n,
                                          size_t m,
                                          struct MvcertErrorMatrix **out);

/**
 * # Safety
 * `e` must come from [`mvcert_error_matrix_new`] and not be freed twice.
 */
void mvcert_error_matrix_free(struct MvcertErrorMatrix *e);

/**
 * Exact expected risk of the stochastic majority vote. `grad` may be null;
 * otherwise it receives the α-gradient and must hold `grad_len` = M doubles.
 *
 * # Safety
 * Handles must be live; `value` writable; `grad` null or `grad_len` writable doubles.
 */
enum MvcertStatus mvcert_exact_risk(const struct MvcertDirichlet *alpha,
                                    const struct MvcertErrorMatrix *errs,
                                    double *value,
                                    double *grad,
                                    size_t grad_len);

/**
 * Monte-Carlo relaxed risk with `draws` samples and sigmoid slope `slope`.
 *
 * # Safety
 * As for [`mvcert_exact_risk`].
 */
enum MvcertStatus mvcert_mc_risk(const struct MvcertDirichlet *alpha,
                                 const struct MvcertErrorMatrix *errs,
                                 size_t draws,
                                 double slope,
                                 uint64_t seed,
                                 double *value,
                                 double *grad,
                                 size_t grad_len);

/**
 * KL(post ‖ prior) between Dirichlet distributions.
 *
 * # Safety
 * Handles must be live; `out` writable.
 */
enum MvcertStatus mvcert_kl_dirichlet(const struct MvcertDirichlet *post,
                                      const struct MvcertDirichlet *prior,
                                      double *out);

/**
 * kl⁻¹(q, ε): largest p with kl(q ‖ p) ≤ ε.
 *
 * # Safety
 * `out` must be writable.
 */
enum MvcertStatus mvcert_kl_inverse(double q, double eps, double *out);

/**
 * Regularized incomplete beta function I_x(a, b).
 *
 * # Safety
 * `out` must be writable.
 */
enum MvcertStatus mvcert_reg_inc_beta(double x, double a, double b, double *out);

/**
 * Seeger certificate kl⁻¹(risk, (kl + ln(2√n/δ))/n).
 *
 * # Safety
 * `out` must be writable.
 */
enum MvcertStatus mvcert_seeger_bound(double risk, double kl, size_t n, double delta, double *out);

/**
 * Certificate of the informed-prior mixture over two data halves of sizes `m` and `n − m`.
 *
 * # Safety
 * `out` must be writable.
 */
enum MvcertStatus mvcert_informed_bound(double risk_first,
                                        double risk_second,
                                        double kl_gt,
                                        double kl_le,
                                        size_t n,
                                        size_t m,
                                        double p,
                                        double delta,
                                        double *out);

/**
 * Trains a run from TOML config text (empty text gives the defaults).
 *
 * # Safety
 * `config_toml` must be a NUL-terminated string; `out` writable.
 */
enum MvcertStatus mvcert_train(const char *config_toml, struct MvcertRun **out);

/**
 * # Safety
 * `run` must come from [`mvcert_train`] and not be freed twice.
 */
void mvcert_run_free(struct MvcertRun *run);

/**
 * # Safety
 * `run` must be live; outputs writable.
 */
enum MvcertStatus mvcert_run_summary(const struct MvcertRun *run,
                                     double *certificate,
                                     double *test_error);

/**
 * Copies the JSON report into `buf`. With a null or short buffer the call
 * fails with `BUFFER_TOO_SMALL` and `needed` still receives the size.
 *
 * # Safety
 * `run` must be live; `buf` null or `len` writable bytes; `needed` null or writable.
 */
enum MvcertStatus mvcert_run_report_json(const struct MvcertRun *run,
                                         char *buf,
                                         size_t len,
                                         size_t *needed);

/**
 * Writes the run artifacts into directory `dir`.
 *
 * # Safety
 * `run` must be live; `dir` a NUL-terminated path.
 */
enum MvcertStatus mvcert_run_write(const struct MvcertRun *run, const char *dir);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MVCERT_H */
