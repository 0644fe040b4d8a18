#ifndef FTFORM_H
#define FTFORM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Outcome of a simulation run, mirroring the CLI exit codes.
 */
typedef enum FtRunStatus {
  FT_RUN_STATUS_CONVERGED = 0,
  FT_RUN_STATUS_DIVERGED = 2,
  FT_RUN_STATUS_INCONCLUSIVE = 3,
} FtRunStatus;

typedef enum FtStatus {
  FT_STATUS_OK = 0,
  FT_STATUS_NULL_POINTER = 1,
  FT_STATUS_INVALID_UTF8 = 2,
  FT_STATUS_PARSE = 3,
  FT_STATUS_VALIDATION = 4,
  FT_STATUS_IO = 5,
  FT_STATUS_GRAPH = 6,
  FT_STATUS_BUFFER_TOO_SMALL = 7,
  FT_STATUS_NOT_FOUND = 8,
  FT_STATUS_PANIC = 9,
} FtStatus;

/**
 * Opaque leader-follower graph.
 */
typedef struct FtGraph FtGraph;

/**
 * Opaque finished run.
 */
typedef struct FtRun FtRun;

/**
 * Opaque scenario definition.
 */
typedef struct FtScenario FtScenario;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copy the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `cap`). Returns the full message length in bytes.
 *
 * # Safety
 * `buf` must be null or point to `cap` writable bytes.
 */
size_t ft_last_error_message(char *buf, size_t cap);

/**
 * `N(k) = exp(k^2) cos(pi k / 2) + 1`.
 */
double ft_nussbaum(double kappa);

/**
 * Parse an edge list (`from to weight` per line, node 0 is the leader).
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` a valid pointer.
 */
enum FtStatus ft_graph_parse(const char *text, struct FtGraph **out);

/**
 * Number of followers in the graph, 0 for a null handle.
 *
 * # Safety
 * `g` must be null or a live handle.
 */
size_t ft_graph_followers(const struct FtGraph *g);

/**
 * Solve `H^T pi = 1` and the smallest eigenvalue of `Xi`. `pi` receives
 * `len` entries and `len` must equal the follower count.
 *
 * # Safety
 * `g` must be a live handle, `pi` must hold `len` doubles and `lambda_min`
 * must be valid.
 */
enum FtStatus ft_graph_certificate(const struct FtGraph *g,
                                   double *pi,
                                   size_t len,
                                   double *lambda_min);

/**
 * # Safety
 * `g` must be null or a handle from [`ft_graph_parse`] not yet freed.
 */
void ft_graph_free(struct FtGraph *g);

/**
 * Built-in scenario by name (`paper-5a`, `paper-5b`).
 *
 * # Safety
 * `name` must be a NUL-terminated string and `out` a valid pointer.
 */
enum FtStatus ft_scenario_preset(const char *name, struct FtScenario **out);

/**
 * Load and validate a scenario file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum FtStatus ft_scenario_load(const char *path, struct FtScenario **out);

/**
 * Override the horizon; the scenario is unchanged on error.
 *
 * # Safety
 * `sc` must be a live handle.
 */
enum FtStatus ft_scenario_set_t_end(struct FtScenario *sc, double t_end);

/**
 * Override the integration step, keeping the logging rate.
 *
 * # Safety
 * `sc` must be a live handle.
 */
enum FtStatus ft_scenario_set_step(struct FtScenario *sc, double step);

/**
 * # Safety
 * `sc` must be null or a scenario handle not yet freed.
 */
void ft_scenario_free(struct FtScenario *sc);

/**
 * Simulate a scenario. A diverged run still succeeds and yields a handle
 * holding the partial trace.
 *
 * # Safety
 * `sc` must be a live handle and `out` a valid pointer.
 */
enum FtStatus ft_run(const struct FtScenario *sc, struct FtRun **out);

/**
 * # Safety
 * `r` must be a live handle and `status` valid.
 */
enum FtStatus ft_run_status(const struct FtRun *r, enum FtRunStatus *status);

/**
 * Number of logged samples, 0 for a null handle.
 *
 * # Safety
 * `r` must be null or a live handle.
 */
size_t ft_run_samples(const struct FtRun *r);

/**
 * Copy a named channel (`t` for time, otherwise e.g. `agent1.track1[0]`)
 * into `buf`. `written` receives the sample count; with a short buffer the
 * call fails with `BufferTooSmall` and still reports the needed size.
 *
 * # Safety
 * `r` must be a live handle, `name` NUL-terminated, `buf` must hold `cap`
 * doubles (or be null when `cap` is 0) and `written` must be valid.
 */
enum FtStatus ft_run_channel(const struct FtRun *r,
                             const char *name,
                             double *buf,
                             size_t cap,
                             size_t *written);

/**
 * Write the trace CSV. Existing files are overwritten.
 *
 * # Safety
 * `r` must be a live handle and `path` NUL-terminated.
 */
enum FtStatus ft_run_export_csv(const struct FtRun *r, const char *path);

/**
 * # Safety
 * `r` must be null or a run handle not yet freed.
 */
void ft_run_free(struct FtRun *r);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FTFORM_H */
