#ifndef BVDAMAGE_H
#define BVDAMAGE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes.
 */
typedef enum BvdStatus {
  BVD_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  BVD_STATUS_ERR_NULL = 1,
  BVD_STATUS_ERR_CONFIG = 2,
  /**
   * A step was rejected or a factorization failed.
   */
  BVD_STATUS_ERR_SOLVER = 3,
  /**
   * Bad argument value: unknown column, short buffer, invalid text, bad data.
   */
  BVD_STATUS_ERR_INVALID = 4,
  BVD_STATUS_ERR_PANIC = 5,
} BvdStatus;

/**
 * Parsed configuration and assembled model.
 */
typedef struct BvdModel BvdModel;

/**
 * Per-knot trajectory table with the columns of `trajectory.csv`.
 */
typedef struct BvdTrajectory BvdTrajectory;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *bvd_version(void);

/**
 * Copies the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `len - 1` bytes) and returns the full message length.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t bvd_last_error_message(char *buf, size_t len);

/**
 * Parses `config` (the `key = value` text of the CLI) and assembles the model.
 *
 * # Safety
 * `config` must be a NUL-terminated string; `out` must be writable.
 */
enum BvdStatus bvd_model_new(const char *config, struct BvdModel **out);

/**
 * # Safety
 * `model` must be null or a handle from [`bvd_model_new`] not yet freed.
 */
void bvd_model_free(struct BvdModel *model);

/**
 * Runs the viscous time stepping of `model` and returns its trajectory table.
 *
 * # Safety
 * `model` must be a live handle; `out` must be writable.
 */
enum BvdStatus bvd_solve(const struct BvdModel *model, struct BvdTrajectory **out);

/**
 * Number of knots (rows), including the initial state.
 *
 * # Safety
 * `traj` must be a live handle; `out_len` must be writable.
 */
enum BvdStatus bvd_trajectory_len(const struct BvdTrajectory *traj, size_t *out_len);

/**
 * Copies the column `name` into `buf`, which must hold at least
 * [`bvd_trajectory_len`] values.
 *
 * # Safety
 * `traj` must be a live handle, `name` NUL-terminated, `buf` valid for `len` writes.
 */
enum BvdStatus bvd_trajectory_column(const struct BvdTrajectory *traj,
                                     const char *name,
                                     double *buf,
                                     size_t len);

/**
 * # Safety
 * `traj` must be null or a handle from [`bvd_solve`] not yet freed.
 */
void bvd_trajectory_free(struct BvdTrajectory *traj);

/**
 * Classic discrete Gronwall check for `a_0..a_{n-1}` and `b_0..b_{n-1}`.
 * Writes 1/0 to `out_hypotheses_ok` and `out_holds`.
 *
 * # Safety
 * `a` and `b` must be valid for `n` reads; the outputs must be writable.
 */
enum BvdStatus bvd_check_gronwall_classic(const double *a,
                                          const double *b,
                                          size_t n,
                                          double big_b,
                                          int32_t *out_hypotheses_ok,
                                          int32_t *out_holds);

/**
 * Checks every instance of a `check-gronwall` data text. Writes the number of
 * instances, and 1 to `out_all_hold` if each admissible instance holds.
 *
 * # Safety
 * `data` must be NUL-terminated; the outputs must be writable.
 */
enum BvdStatus bvd_check_gronwall_data(const char *data, size_t *out_count, int32_t *out_all_hold);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BVDAMAGE_H */
