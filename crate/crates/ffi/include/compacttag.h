#ifndef COMPACTTAG_H
#define COMPACTTAG_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Values accepted for the `protocol` argument of [`ct_runner_matmul`].
 */
typedef enum {
  CT_PROTOCOL_BASELINE = 0,
  CT_PROTOCOL_COMPACT_TAG = 1,
} CtProtocol;

/**
 * Result codes.
 */
typedef enum {
  CT_STATUS_OK = 0,
  CT_STATUS_NULL_POINTER = 1,
  CT_STATUS_INVALID_ARGUMENT = 2,
  CT_STATUS_SHAPE_MISMATCH = 3,
  /**
   * A MAC or checksum check failed, or a party equivocated.
   */
  CT_STATUS_PROTOCOL_ABORT = 4,
  CT_STATUS_MISSING_MATERIAL = 5,
  CT_STATUS_INTERNAL = 6,
} CtStatus;

/**
 * Opaque simulation context: ring parameters, party count, seed stream and
 * an optional adversary.
 */
typedef struct CtRunner CtRunner;

/**
 * Party 1's counters for one multiply-then-truncate.
 */
typedef struct {
  uint64_t tag_mults;
  uint64_t trunc_tag_mults;
  uint64_t value_mults;
  uint64_t broadcast_elements;
  uint64_t broadcast_bytes;
} CtStats;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. Valid until the
 * next failing call on the same thread.
 */
const char *ct_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *ct_version(void);

/**
 * 3*T1*T2*T3 + T1*T3
 */
uint64_t ct_formula_baseline_tag(uint64_t t1, uint64_t t2, uint64_t t3);

/**
 * 4*T1*T3 + 2*T2*T3 + 3*T1*T2 + T1
 */
uint64_t ct_formula_compact_tag(uint64_t t1, uint64_t t2, uint64_t t3);

double ct_formula_tag_ratio(uint64_t t1, uint64_t t2, uint64_t t3);

/**
 * Creates a runner. Writes the handle to `*out` on success.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one pointer.
 */
CtStatus ct_runner_new(uint32_t k,
                       uint32_t s,
                       uint32_t f,
                       size_t parties,
                       uint64_t seed,
                       CtRunner **out);

/**
 * Releases a runner. NULL is ignored.
 *
 * # Safety
 * `runner` must come from [`ct_runner_new`] and not have been freed.
 */
void ct_runner_free(CtRunner *runner);

/**
 * Installs an adversary from its JSON description; NULL restores an
 * honest run.
 *
 * # Safety
 * `runner` must be a live handle; `json` NULL or a NUL-terminated string.
 */
CtStatus ct_runner_set_adversary_json(CtRunner *runner, const char *json);

/**
 * Secret-shares X (t1 x t2) and Y (t2 x t3), row-major signed integers
 * (fixed point with f fractional bits), computes trunc(X * Y / 2^f) with
 * the chosen protocol, runs all checks and writes the opened t1 x t3
 * result to `out`. `stats` may be NULL.
 *
 * # Safety
 * `x`, `y` and `out` must point to t1*t2, t2*t3 and t1*t3 elements;
 * `runner` must be a live handle.
 */
CtStatus ct_runner_matmul(CtRunner *runner,
                          uint32_t protocol,
                          size_t t1,
                          size_t t2,
                          size_t t3,
                          const int64_t *x,
                          const int64_t *y,
                          int64_t *out,
                          CtStats *stats);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* COMPACTTAG_H */
