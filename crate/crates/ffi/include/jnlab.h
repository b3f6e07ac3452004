#ifndef JNLAB_H
#define JNLAB_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum JnStatus {
  JN_STATUS_OK = 0,
  JN_STATUS_NULL_POINTER = 1,
  JN_STATUS_INVALID_ARGUMENT = 2,
  JN_STATUS_PARSE_ERROR = 3,
  JN_STATUS_CONSTRUCTION_ERROR = 4,
  /**
   * The call completed but the check it ran did not pass.
   */
  JN_STATUS_VERIFICATION_FAILED = 5,
  JN_STATUS_DEPTH_EXCEEDED = 6,
  JN_STATUS_PANIC = 7,
} JnStatus;

/**
 * A sequence of measures.
 */
typedef struct JnSequence JnSequence;

/**
 * The report of a weak*-check.
 */
typedef struct JnVerdict JnVerdict;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The string
 * belongs to the caller.
 */
char *jn_last_error(void);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void jn_string_free(char *s);

/**
 * Library version as a static string.
 */
const char *jn_version(void);

/**
 * `2^-(n+1) Σ_s (δ_{s1^ω} − δ_{s0^ω})`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum JnStatus jn_sequence_standard(struct JnSequence **out);

/**
 * Densities `±λ` on the cylinders fixed by bit `n`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum JnStatus jn_sequence_independent(struct JnSequence **out);

/**
 * Normalized differences of empirical averages over the van der Corput
 * points, labelled from 1.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum JnStatus jn_sequence_van_der_corput(struct JnSequence **out);

/**
 * `½(δ_{0^n 1^ω} − δ_{0^ω})`, with convergence checked to `depth` bits over
 * `horizon` terms.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum JnStatus jn_sequence_comb(uint32_t depth, size_t horizon, struct JnSequence **out);

/**
 * A finite sequence from a JSON array of measures, each
 * `{"atoms": [{"point": …, "weight": "p/q"}, …]}`.
 *
 * # Safety
 * `json` must be a nul-terminated string and `out` valid for writes.
 */
enum JnStatus jn_sequence_from_json(const char *json, struct JnSequence **out);

/**
 * Term `i` as JSON.
 *
 * # Safety
 * `seq` must be a live handle and `out` valid for writes.
 */
enum JnStatus jn_sequence_term_json(const struct JnSequence *seq, size_t i, char **out);

/**
 * # Safety
 * `seq` must be null or a live handle; it is invalid afterwards.
 */
void jn_sequence_free(struct JnSequence *seq);

/**
 * fsJN check of the first `n_terms` terms: norms exactly 1 and, from the
 * middle of the range on, every cylinder of depth `<= depth` below `tol`
 * (a `"p/q"` string). Returns `VerificationFailed` with the verdict still
 * written when the check does not pass.
 *
 * # Safety
 * `seq` must be a live handle, `tol` a nul-terminated string and `out`
 * valid for writes.
 */
enum JnStatus jn_check_fsjn(const struct JnSequence *seq,
                            uint32_t depth,
                            size_t n_terms,
                            const char *tol,
                            struct JnVerdict **out);

/**
 * # Safety
 * `verdict` must be a live handle and `out` valid for writes.
 */
enum JnStatus jn_verdict_passed(const struct JnVerdict *verdict, bool *out);

/**
 * The verdict as JSON (`csv == false`) or as CSV rows.
 *
 * # Safety
 * `verdict` must be a live handle and `out` valid for writes.
 */
enum JnStatus jn_verdict_render(const struct JnVerdict *verdict, bool csv, char **out);

/**
 * # Safety
 * `verdict` must be null or a live handle; it is invalid afterwards.
 */
void jn_verdict_free(struct JnVerdict *verdict);

/**
 * Runs a command-line config (the JSON written next to `--out`) and
 * returns its artifact as JSON. The `out` field of the config is ignored.
 * Returns `VerificationFailed`, with the artifact written, when the
 * command's own check does not pass.
 *
 * # Safety
 * `config` must be a nul-terminated string and `out` valid for writes.
 */
enum JnStatus jn_run_config(const char *config, char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* JNLAB_H */
