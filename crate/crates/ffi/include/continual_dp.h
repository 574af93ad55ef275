#ifndef CONTINUAL_DP_H
#define CONTINUAL_DP_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Neighbouring relation.
 */
typedef enum CdpAdjacency {
  /*
   Edge-event adjacency.
   */
  CDP_ADJACENCY_EDGE = 0,
  /*
   Node-event adjacency.
   */
  CDP_ADJACENCY_NODE = 1,
} CdpAdjacency;

/*
 Release mechanism.
 */
typedef enum CdpMechanism {
  /*
   Difference sequence through the binary mechanism.
   */
  CDP_MECHANISM_DIFF_RELEASE = 0,
  /*
   Sparse-vector based mechanism for monotone statistics.
   */
  CDP_MECHANISM_MONOTONE = 1,
} CdpMechanism;

/*
 Update regime.
 */
typedef enum CdpRegime {
  /*
   Insertions only.
   */
  CDP_REGIME_INCREMENTAL = 0,
  /*
   Deletions only.
   */
  CDP_REGIME_DECREMENTAL = 1,
  /*
   Insertions and deletions.
   */
  CDP_REGIME_FULLY_DYNAMIC = 2,
} CdpRegime;

/*
 Status code returned by every fallible function.
 */
typedef enum CdpStatus {
  /*
   Success.
   */
  CDP_STATUS_OK = 0,
  /*
   A required pointer argument was null.
   */
  CDP_STATUS_NULL_POINTER = 1,
  /*
   A parameter is outside its domain or a string is not valid UTF-8.
   */
  CDP_STATUS_INVALID_ARGUMENT = 2,
  /*
   An update log could not be parsed or applied.
   */
  CDP_STATUS_INVALID_SEQUENCE = 3,
  /*
   The statistic cannot be handled in the requested setting.
   */
  CDP_STATUS_UNSUPPORTED = 4,
  /*
   An index is out of range.
   */
  CDP_STATUS_OUT_OF_RANGE = 5,
  /*
   Any other failure.
   */
  CDP_STATUS_INTERNAL = 6,
} CdpStatus;

/*
 Opaque release result.
 */
typedef struct CdpRelease CdpRelease;

/*
 Opaque graph sequence.
 */
typedef struct CdpSequence CdpSequence;

/*
 Statistic selection. `tau`, `k`, `source` and `sink` are read only by the
 statistics that need them.
 */
typedef struct CdpFunction {
  /*
   Statistic name, for example `"edge_count"`.
   */
  const char *name;
  /*
   Degree threshold of `high_degree`.
   */
  uintptr_t tau;
  /*
   Star size of `kstar_count`.
   */
  uintptr_t k;
  /*
   Source terminal of `st_min_cut`.
   */
  uint64_t source;
  /*
   Sink terminal of `st_min_cut`.
   */
  uint64_t sink;
} CdpFunction;

/*
 Parameters of a release.
 */
typedef struct CdpReleaseParams {
  /*
   Mechanism to run.
   */
  enum CdpMechanism mechanism;
  /*
   Statistic to release.
   */
  struct CdpFunction function;
  /*
   Neighbouring relation (difference-sequence release only).
   */
  enum CdpAdjacency adjacency;
  /*
   Privacy parameter.
   */
  double epsilon;
  /*
   Failure probability of the error bound.
   */
  double delta;
  /*
   Multiplicative slack (monotone mechanism only).
   */
  double beta;
  /*
   Range bound of the monotone mechanism; zero selects the default.
   */
  double range;
  /*
   Declared maximum degree; zero means none.
   */
  uintptr_t max_degree;
  /*
   Seed of the random source.
   */
  uint64_t seed;
  /*
   Disables all noise when true (testing aid).
   */
  bool noise_off;
} CdpReleaseParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Description of the last error on this thread, or null if none. The
 string stays valid until the next failing call on the same thread.
 */
const char *cdp_last_error(void);

/*
 Parses an update log into a new sequence handle.

 # Safety
 `log` must be a NUL-terminated string and `out` a valid pointer.
 */
enum CdpStatus cdp_sequence_from_log(const char *log, struct CdpSequence **out);

/*
 Builds the lower-bound sequence of `target` (for example `"mst-edge"`)
 encoding the bit string `sigma` (for example `"101"`).

 # Safety
 `target` and `sigma` must be NUL-terminated strings and `out` a valid
 pointer.
 */
enum CdpStatus cdp_sequence_generate(const char *target,
                                     const char *sigma,
                                     uint32_t weight,
                                     struct CdpSequence **out);

/*
 Frees a sequence handle. Null is ignored.

 # Safety
 `seq` must come from this library and not be used afterwards.
 */
void cdp_sequence_free(struct CdpSequence *seq);

/*
 Number of update steps `T`.

 # Safety
 `seq` must be a live handle and `out` a valid pointer.
 */
enum CdpStatus cdp_sequence_len(const struct CdpSequence *seq, uintptr_t *out);

/*
 Serializes a sequence to the update-log format. The returned string must
 be freed with [`cdp_string_free`].

 # Safety
 `seq` must be a live handle and `out` a valid pointer.
 */
enum CdpStatus cdp_sequence_to_log(const struct CdpSequence *seq, char **out);

/*
 Frees a string returned by this library. Null is ignored.

 # Safety
 `s` must come from this library and not be used afterwards.
 */
void cdp_string_free(char *s);

/*
 Exact value of a scalar statistic at step `t` (`0` is the initial graph).
 For the degree histogram the value is the count of degree-2 nodes.

 # Safety
 `seq` must be a live handle, `function` valid and `out` a valid pointer.
 */
enum CdpStatus cdp_eval(const struct CdpSequence *seq,
                        const struct CdpFunction *function,
                        uintptr_t t,
                        double *out);

/*
 Tabulated difference-sequence sensitivity. Unbounded cells write
 `INFINITY` and return `Ok`; unknown combinations return `Unsupported`.
 `max_degree` zero means no declared degree.

 # Safety
 `function` must be valid and `out` a valid pointer.
 */
enum CdpStatus cdp_sensitivity_bound(const struct CdpFunction *function,
                                     enum CdpAdjacency adjacency,
                                     enum CdpRegime regime,
                                     uintptr_t max_degree,
                                     uint32_t max_weight,
                                     double *out);

/*
 Runs a private release of a scalar statistic along `seq`.

 # Safety
 `seq` must be a live handle, `params` valid and `out` a valid pointer.
 */
enum CdpStatus cdp_release(const struct CdpSequence *seq,
                           const struct CdpReleaseParams *params,
                           struct CdpRelease **out);

/*
 Number of released steps.

 # Safety
 `rel` must be a live handle and `out` a valid pointer.
 */
enum CdpStatus cdp_release_len(const struct CdpRelease *rel, uintptr_t *out);

/*
 Released and exact values at step `t` (1-based). Either output pointer
 may be null.

 # Safety
 `rel` must be a live handle; non-null outputs must be valid pointers.
 */
enum CdpStatus cdp_release_value(const struct CdpRelease *rel,
                                 uintptr_t t,
                                 double *released,
                                 double *truth);

/*
 Error bound reported by the mechanism: the per-step high-probability bound
 of the difference-sequence release, or the additive term of the monotone
 mechanism.

 # Safety
 `rel` must be a live handle and `out` a valid pointer.
 */
enum CdpStatus cdp_release_bound(const struct CdpRelease *rel, double *out);

/*
 Frees a release handle. Null is ignored.

 # Safety
 `rel` must come from this library and not be used afterwards.
 */
void cdp_release_free(struct CdpRelease *rel);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CONTINUAL_DP_H */
