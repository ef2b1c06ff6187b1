#ifndef MSEXPLORE_H
#define MSEXPLORE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/**
 * Status codes returned by fallible calls.
 */
typedef enum MsxStatus {
  MSX_STATUS_OK = 0,
  MSX_STATUS_NULL_POINTER = 1,
  MSX_STATUS_INVALID_UTF8 = 2,
  /**
   * Bad input: malformed JSON, wrong dimension, out-of-range parameter.
   */
  MSX_STATUS_CONFIG = 3,
  /**
   * A construction started and failed.
   */
  MSX_STATUS_CONSTRUCTION = 4,
  MSX_STATUS_PANIC = 5,
} MsxStatus;

typedef enum MsxProfile {
  MSX_PROFILE_CALIBRATED = 0,
  MSX_PROFILE_PAPER = 1,
} MsxProfile;

typedef enum MsxPolicy {
  MSX_POLICY_TWO_POINT = 0,
  MSX_POLICY_THOMPSON = 1,
  MSX_POLICY_UNIFORM = 2,
} MsxPolicy;

typedef struct MsxBody MsxBody;

typedef struct MsxEnvironment MsxEnvironment;

typedef struct MsxFunction MsxFunction;

typedef struct MsxMeasure MsxMeasure;

/**
 * Outcome of an exploration check.
 */
typedef struct MsxReport {
  double p_hat;
  double ci_low;
  double ci_high;
  double threshold;
  size_t samples;
  bool pass;
} MsxReport;

/**
 * Per-game totals of a bandit run.
 */
typedef struct MsxGameStats {
  size_t horizon;
  size_t net_size;
  size_t true_scenario;
  double sum_v;
  double half_entropy;
  double regret;
  double regret_body;
  size_t step3_rounds;
  size_t fallback_rounds;
} MsxGameStats;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next call on the same thread.
 */
const char *msx_last_error(void);

/**
 * Library version as a static string.
 */
const char *msx_version(void);

/**
 * Releases a string returned by this library.
 *
 * # Safety
 * `s` must come from this library or be null.
 */
void msx_string_free(char *s);

/**
 * # Safety
 * `json` is a NUL-terminated string and `out` is writable.
 */
enum MsxStatus msx_body_from_json(const char *json, struct MsxBody **out);

/**
 * # Safety
 * `body` is a live handle or null (returns 0).
 */
size_t msx_body_dimension(const struct MsxBody *body);

/**
 * # Safety
 * `x` points to `n` doubles and `inside` is writable.
 */
enum MsxStatus msx_body_contains(const struct MsxBody *body,
                                 const double *x,
                                 size_t n,
                                 bool *inside);

/**
 * # Safety
 * `body` comes from `msx_body_from_json` or is null.
 */
void msx_body_free(struct MsxBody *body);

/**
 * # Safety
 * `json` is a NUL-terminated string and `out` is writable.
 */
enum MsxStatus msx_function_from_json(const char *json, struct MsxFunction **out);

/**
 * # Safety
 * `x` points to `n` doubles and `value` is writable.
 */
enum MsxStatus msx_function_value(const struct MsxFunction *f,
                                  const double *x,
                                  size_t n,
                                  double *value);

/**
 * # Safety
 * `f` comes from `msx_function_from_json` or is null.
 */
void msx_function_free(struct MsxFunction *f);

/**
 * Builds the exploratory measure of `f` on `body` at accuracy `eps`.
 *
 * # Safety
 * Handles are live and `out` is writable.
 */
enum MsxStatus msx_measure_build(const struct MsxBody *body,
                                 const struct MsxFunction *f,
                                 double eps,
                                 enum MsxProfile profile,
                                 uint64_t seed,
                                 struct MsxMeasure **out);

/**
 * # Safety
 * `json` is a NUL-terminated string and `out` is writable.
 */
enum MsxStatus msx_measure_from_json(const char *json, struct MsxMeasure **out);

/**
 * Writes a newly allocated JSON string to `out`; release it with
 * `msx_string_free`.
 *
 * # Safety
 * `m` is live and `out` is writable.
 */
enum MsxStatus msx_measure_to_json(const struct MsxMeasure *m, char **out);

/**
 * # Safety
 * `m` is a live handle or null (returns 0).
 */
size_t msx_measure_dimension(const struct MsxMeasure *m);

/**
 * Draws `count` points into `out`, row after row; `out_len` must be at
 * least `count` times the dimension.
 *
 * # Safety
 * `out` points to `out_len` writable doubles.
 */
enum MsxStatus msx_measure_sample(const struct MsxMeasure *m,
                                  uint64_t seed,
                                  size_t count,
                                  double *out,
                                  size_t out_len);

/**
 * # Safety
 * `m` comes from this library or is null.
 */
void msx_measure_free(struct MsxMeasure *m);

/**
 * Estimates μ{|f − g| > gap·max(ε, f)} from `samples` draws and compares
 * the lower confidence bound with `threshold`.
 *
 * # Safety
 * Handles are live and `report` is writable.
 */
enum MsxStatus msx_verify(const struct MsxMeasure *m,
                          const struct MsxFunction *f,
                          const struct MsxFunction *g,
                          double eps,
                          double gap,
                          double threshold,
                          size_t samples,
                          uint64_t seed,
                          struct MsxReport *report);

/**
 * Scenario file contents as JSON; loss references resolve against the
 * current directory.
 *
 * # Safety
 * `json` is a NUL-terminated string and `out` is writable.
 */
enum MsxStatus msx_environment_from_json(const char *json, struct MsxEnvironment **out);

/**
 * Plays one game with the default parameters.
 *
 * # Safety
 * `env` is live and `stats` is writable.
 */
enum MsxStatus msx_game_run(const struct MsxEnvironment *env,
                            enum MsxPolicy policy,
                            uint64_t seed,
                            struct MsxGameStats *stats);

/**
 * # Safety
 * `env` comes from this library or is null.
 */
void msx_environment_free(struct MsxEnvironment *env);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MSEXPLORE_H */
