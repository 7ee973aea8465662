#ifndef THRESHOLD_CONTACT_H
#define THRESHOLD_CONTACT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes.
 */
typedef enum TcStatus {
  TC_STATUS_OK = 0,
  TC_STATUS_NULL_POINTER = 1,
  TC_STATUS_INVALID_ARGUMENT = 2,
  TC_STATUS_GRAPH_SPEC = 3,
  TC_STATUS_WRONG_GRAPH = 4,
  TC_STATUS_RESOURCE_LIMIT = 5,
  TC_STATUS_RECURRENT = 6,
  TC_STATUS_HYPOTHESIS_FAILS = 7,
  TC_STATUS_BELOW_THRESHOLD = 8,
  TC_STATUS_INVALID_BRACKET = 9,
  TC_STATUS_IO = 10,
  TC_STATUS_PANIC = 11,
} TcStatus;

/**
 * Opaque graph handle.
 */
typedef struct TcGraph TcGraph;

/**
 * Opaque clock schedule handle.
 */
typedef struct TcSchedule TcSchedule;

/**
 * Monte Carlo estimate.
 */
typedef struct TcEstimate {
  double value;
  double std_error;
  uint64_t replicas;
} TcEstimate;

typedef struct TcDuality {
  struct TcEstimate p_eta;
  struct TcEstimate p_dual;
  double z_score;
} TcDuality;

typedef struct TcCritical {
  double lo;
  double hi;
  double estimate;
  size_t evaluations;
} TcCritical;

typedef struct TcGreen {
  size_t d;
  uint64_t terms;
  double value;
  double tail;
  double uncertainty;
  /**
   * `(G - 1)/G`
   */
  double f_e1;
} TcGreen;

typedef struct TcBounds {
  double lower;
  /**
   * NaN when the upper bound's hypothesis fails.
   */
  double upper;
  bool has_upper;
} TcBounds;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or null. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *tc_last_error(void);

/**
 * Crate version as a static NUL-terminated string.
 */
const char *tc_version(void);

/**
 * Builds a graph from a spec string such as `"torus:d=2,L=32"`.
 *
 * # Safety
 * `spec` must be a NUL-terminated string and `out` valid for writes.
 */
enum TcStatus tc_graph_from_spec(const char *spec, struct TcGraph **out);

/**
 * # Safety
 * `out` must be valid for writes.
 */
enum TcStatus tc_graph_torus(size_t d, size_t side, struct TcGraph **out);

/**
 * Tree with `n` sons per vertex; `son_only_root` selects the root variant.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum TcStatus tc_graph_tree(size_t n, size_t depth, bool son_only_root, struct TcGraph **out);

/**
 * # Safety
 * `graph` must be a live handle and `out` valid for writes.
 */
enum TcStatus tc_graph_vertex_count(const struct TcGraph *graph, size_t *out);

/**
 * Releases a graph. Null is ignored.
 *
 * # Safety
 * `graph` must be null or a handle not yet freed.
 */
void tc_graph_free(struct TcGraph *graph);

/**
 * # Safety
 * `graph` must be a live handle and `out` valid for writes.
 */
enum TcStatus tc_schedule_build(const struct TcGraph *graph,
                                double lambda,
                                double horizon,
                                uint64_t seed,
                                struct TcSchedule **out);

/**
 * Number of clock rings in the schedule.
 *
 * # Safety
 * `schedule` must be a live handle and `out` valid for writes.
 */
enum TcStatus tc_schedule_len(const struct TcSchedule *schedule, size_t *out);

/**
 * Writes the versioned binary dump to `path`.
 *
 * # Safety
 * `schedule` must be a live handle and `path` a NUL-terminated string.
 */
enum TcStatus tc_schedule_write(const struct TcSchedule *schedule, const char *path);

/**
 * Reads a binary dump written by [`tc_schedule_write`].
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` valid for writes.
 */
enum TcStatus tc_schedule_read(const char *path, struct TcSchedule **out);

/**
 * # Safety
 * `schedule` must be null or a handle not yet freed.
 */
void tc_schedule_free(struct TcSchedule *schedule);

/**
 * Runs η and ξ from all ones on `schedule` and writes, per observation
 * time, the number of vertices where `η_t(x) != 1{ξ_t(x) > 0}`.
 *
 * # Safety
 * Handles must be live; `times` and `out_counts` must hold `n_times` values.
 */
enum TcStatus tc_coupling_mismatches(const struct TcSchedule *schedule,
                                     const struct TcGraph *graph,
                                     const double *times,
                                     size_t n_times,
                                     size_t *out_counts);

/**
 * `P(η_t(x) = 1)` from all ones at the observed vertex (origin or root).
 *
 * # Safety
 * `graph` must be a live handle and `out` valid for writes.
 */
enum TcStatus tc_survival_probability(const struct TcGraph *graph,
                                      double lambda,
                                      double t,
                                      uint64_t replicas,
                                      uint64_t seed,
                                      struct TcEstimate *out);

/**
 * `P(A_t ≠ ∅)` from the observed vertex; sets reaching `cap` count as alive.
 *
 * # Safety
 * `graph` must be a live handle and `out` valid for writes.
 */
enum TcStatus tc_dual_survival(const struct TcGraph *graph,
                               double lambda,
                               double t,
                               uint64_t replicas,
                               uint64_t seed,
                               size_t cap,
                               struct TcEstimate *out);

/**
 * # Safety
 * `graph` must be a live handle and `out` valid for writes.
 */
enum TcStatus tc_duality_check(const struct TcGraph *graph,
                               double lambda,
                               double t,
                               uint64_t replicas,
                               uint64_t seed,
                               struct TcDuality *out);

/**
 * Bisection on dual survival at time `t` for the rate where it crosses
 * `threshold`. A finite-size, finite-time proxy for the critical value.
 *
 * # Safety
 * `graph` must be a live handle and `out` valid for writes.
 */
enum TcStatus tc_critical_estimate(const struct TcGraph *graph,
                                   double lo,
                                   double hi,
                                   double threshold,
                                   double tol,
                                   double t,
                                   uint64_t replicas,
                                   uint64_t seed,
                                   size_t cap,
                                   struct TcCritical *out);

/**
 * `G_d(0,0)` from `terms` series terms plus a local-CLT tail
 * (`paper_tail = false`) or the closed-form tail bounds (`true`).
 * `terms = 0` selects the default length.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum TcStatus tc_green_function(size_t d, uint64_t terms, bool paper_tail, struct TcGreen *out);

/**
 * `F_d(e_1)`, 1 for recurrent dimensions.
 *
 * # Safety
 * `value` and `uncertainty` must be valid for writes.
 */
enum TcStatus tc_hitting_prob_e1(size_t d, double *value, double *uncertainty);

/**
 * Critical-value bounds for `Z^d`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum TcStatus tc_bounds_lattice(size_t d, struct TcBounds *out);

/**
 * Critical-value bounds for the tree with `n` sons per vertex.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum TcStatus tc_bounds_tree(size_t n, struct TcBounds *out);

/**
 * Truncated `G_t(0)` on the box of radius `radius` at ascending `times`,
 * with the mass on the two outer shells in `out_leakage`.
 *
 * # Safety
 * `times`, `out_g0` and `out_leakage` must hold `n_times` values.
 */
enum TcStatus tc_second_moment(size_t d,
                               double lambda,
                               uint32_t radius,
                               const double *times,
                               size_t n_times,
                               double *out_g0,
                               double *out_leakage);

/**
 * Structural checks on the truncated `Q`; `out_pass` is set when all hold.
 *
 * # Safety
 * `out_pass` must be valid for writes.
 */
enum TcStatus tc_qcheck(size_t d, double lambda, uint32_t radius, bool *out_pass);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* THRESHOLD_CONTACT_H */
