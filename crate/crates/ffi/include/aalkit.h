#ifndef AALKIT_H
#define AALKIT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum AalStatus {
  AAL_STATUS_OK = 0,
  AAL_STATUS_FAIL = 1,
  AAL_STATUS_NULL_POINTER = 2,
  AAL_STATUS_INVALID_UTF8 = 3,
  AAL_STATUS_PARSE = 4,
  AAL_STATUS_GUARD = 5,
  AAL_STATUS_INVALID = 6,
  AAL_STATUS_PANIC = 7,
} AalStatus;

/**
 * A finite algebra.
 */
typedef struct AalAlgebra AalAlgebra;

/**
 * A Hilbert calculus.
 */
typedef struct AalCalculus AalCalculus;

/**
 * An algebra with a designated filter.
 */
typedef struct AalMatrix AalMatrix;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent error on this thread. Valid until the next
 * call into the library from the same thread.
 */
const char *aal_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *aal_version(void);

/**
 * # Safety
 * `s` must be null or a string returned by this library.
 */
void aal_string_free(char *s);

/**
 * Parses an algebra in the `carrier`/`op` table format.
 *
 * # Safety
 * `src` must be a NUL-terminated string and `out_algebra` writable.
 */
enum AalStatus aal_algebra_parse(const char *src, struct AalAlgebra **out_algebra);

/**
 * # Safety
 * `algebra` must be null or a live handle.
 */
void aal_algebra_free(struct AalAlgebra *algebra);

/**
 * # Safety
 * `algebra` must be a live handle and `out_size` writable.
 */
enum AalStatus aal_algebra_size(const struct AalAlgebra *algebra, size_t *out_size);

/**
 * Builds a matrix from a copy of `algebra` and the `len` elements at `filter`.
 *
 * # Safety
 * `filter` must point to `len` readable values (it may be null when `len`
 * is zero) and `out_matrix` must be writable.
 */
enum AalStatus aal_matrix_new(const struct AalAlgebra *algebra,
                              const size_t *filter,
                              size_t len,
                              struct AalMatrix **out_matrix);

/**
 * # Safety
 * `matrix` must be null or a live handle.
 */
void aal_matrix_free(struct AalMatrix *matrix);

/**
 * Writes the Leibniz congruence of `matrix` as block labels, one per
 * element, numbered by first occurrence. `labels` must have room for the
 * carrier size; `out_blocks` receives the number of blocks.
 *
 * # Safety
 * `labels` must point to `capacity` writable values.
 */
enum AalStatus aal_leibniz(const struct AalMatrix *matrix,
                           size_t *labels,
                           size_t capacity,
                           size_t *out_blocks);

/**
 * `AAL_STATUS_OK` when the Leibniz congruence is the identity, else
 * `AAL_STATUS_FAIL`.
 *
 * # Safety
 * `matrix` must be a live handle.
 */
enum AalStatus aal_matrix_is_reduced(const struct AalMatrix *matrix);

/**
 * Parses a calculus. `signature` is a `symbol arity` per line listing; when
 * null the commutative-ring signature is used.
 *
 * # Safety
 * `src` must be a NUL-terminated string, `signature` null or one, and
 * `out_calculus` writable.
 */
enum AalStatus aal_calculus_parse(const char *src,
                                  const char *signature,
                                  struct AalCalculus **out_calculus);

/**
 * # Safety
 * `calculus` must be null or a live handle.
 */
void aal_calculus_free(struct AalCalculus *calculus);

/**
 * `AAL_STATUS_OK` when the filter of `matrix` is closed under every rule,
 * `AAL_STATUS_FAIL` otherwise.
 *
 * # Safety
 * Both handles must be live.
 */
enum AalStatus aal_is_model(const struct AalCalculus *calculus, const struct AalMatrix *matrix);

/**
 * Normal form of a ring term as a polynomial. Free the result with
 * [`aal_string_free`].
 *
 * # Safety
 * `term` must be a NUL-terminated string and `out_text` writable.
 */
enum AalStatus aal_normalize(const char *term, char **out_text);

/**
 * `AAL_STATUS_OK` when `lhs = rhs` holds in every commutative ring,
 * `AAL_STATUS_FAIL` otherwise.
 *
 * # Safety
 * Both arguments must be NUL-terminated strings.
 */
enum AalStatus aal_cr_valid(const char *lhs, const char *rhs);

/**
 * Runs the command-line tool in-process. `argv` excludes the program name.
 * The report goes to `out_report` (free with [`aal_string_free`]) and the
 * exit status to `out_exit`.
 *
 * # Safety
 * `argv` must point to `argc` NUL-terminated strings.
 */
enum AalStatus aal_run(size_t argc, const char *const *argv, char **out_report, int32_t *out_exit);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* AALKIT_H */
