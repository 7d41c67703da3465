#ifndef PR2_H
#define PR2_H

#pragma once

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum Pr2Status {
  PR2_STATUS_OK = 0,
  PR2_STATUS_NULL_POINTER = 1,
  PR2_STATUS_INVALID_ARGUMENT = 2,
  PR2_STATUS_INVALID_CONFIG = 3,
  PR2_STATUS_IO = 4,
  PR2_STATUS_NUMERIC = 5,
  PR2_STATUS_PANIC = 6,
} Pr2Status;

/**
 * A validated experiment configuration.
 */
typedef struct Pr2Experiment Pr2Experiment;

/**
 * A single-state tabular PR2-Q learner with its own random stream.
 */
typedef struct Pr2qHandle Pr2qHandle;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until the
 * next call into the library from the same thread.
 */
const char *pr2_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *pr2_version(void);

/**
 * # Safety
 * `s` must be null or a string returned by this library, freed at most once.
 */
void pr2_string_free(char *s);

/**
 * Payoffs of the default 2x2 matrix game for actions `a1`, `a2` in {0, 1}.
 *
 * # Safety
 * `r1` and `r2` must be valid for writes.
 */
enum Pr2Status pr2_matrix_payoff(uint32_t a1, uint32_t a2, double *r1, double *r2);

/**
 * Shared reward of the max-of-two-quadratics game. Actions outside
 * [-10, 10] are rejected.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum Pr2Status pr2_diff_reward(double a1, double a2, double *out);

/**
 * Log-sum-exp of one joint-Q row.
 *
 * # Safety
 * `q` must point at `len` readable values and `out` must be valid for writes.
 */
enum Pr2Status pr2_soft_marginal(const double *q, size_t len, double *out);

/**
 * Softmax of one joint-Q row, written to `out[0..len]`.
 *
 * # Safety
 * `q` must point at `len` readable values and `out` at `len` writable ones.
 */
enum Pr2Status pr2_opponent_conditional(const double *q, size_t len, double *out);

/**
 * Parses and validates an experiment configuration.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` valid for writes.
 */
enum Pr2Status pr2_experiment_from_json(const char *json, struct Pr2Experiment **out);

/**
 * Replaces the seed list of an experiment.
 *
 * # Safety
 * `exp` must be a live handle and `seeds` must point at `len` values.
 */
enum Pr2Status pr2_experiment_set_seeds(struct Pr2Experiment *exp,
                                        const uint64_t *seeds,
                                        size_t len);

/**
 * Runs every seed, writes `run_<seed>.csv` and `summary.json` under `out_dir`
 * and returns the summary JSON in `summary`, to be freed with
 * [`pr2_string_free`].
 *
 * # Safety
 * `exp` must be a live handle, `out_dir` a NUL-terminated path and `summary`
 * valid for writes.
 */
enum Pr2Status pr2_experiment_run(const struct Pr2Experiment *exp,
                                  const char *out_dir,
                                  char **summary);

/**
 * # Safety
 * `exp` must be null or a handle from [`pr2_experiment_from_json`], freed once.
 */
void pr2_experiment_free(struct Pr2Experiment *exp);

/**
 * Creates a PR2-Q learner with `n_own` own and `n_opp` opponent actions.
 * `params_json` may be null for the defaults.
 *
 * # Safety
 * `params_json` must be null or NUL-terminated; `out` must be valid for writes.
 */
enum Pr2Status pr2q_agent_new(uint32_t n_own,
                              uint32_t n_opp,
                              const char *params_json,
                              uint64_t seed,
                              struct Pr2qHandle **out);

/**
 * Samples an action from the current policy.
 *
 * # Safety
 * `agent` must be a live handle and `action` valid for writes.
 */
enum Pr2Status pr2q_agent_act(struct Pr2qHandle *agent, uint32_t *action);

/**
 * One learning step on an observed joint action and reward.
 *
 * # Safety
 * `agent` must be a live handle.
 */
enum Pr2Status pr2q_agent_update(struct Pr2qHandle *agent,
                                 uint32_t own,
                                 uint32_t opp,
                                 double reward);

/**
 * Writes the action distribution to `out[0..len]`; `len` must equal the
 * number of own actions.
 *
 * # Safety
 * `agent` must be a live handle and `out` must point at `len` writable values.
 */
enum Pr2Status pr2q_agent_policy(const struct Pr2qHandle *agent, double *out, size_t len);

/**
 * # Safety
 * `agent` must be null or a handle from [`pr2q_agent_new`], freed once.
 */
void pr2q_agent_free(struct Pr2qHandle *agent);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PR2_H */
