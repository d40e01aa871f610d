#ifndef HAHN_H
#define HAHN_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes; 1–5 match the exit codes of the `hahn` command.
 */
typedef enum HfStatus {
  HfOk = 0,
  HfSyntax = 1,
  HfDomain = 2,
  HfBudget = 3,
  HfConstant = 4,
  HfDivision = 5,
  /**
   * Null pointer or invalid UTF-8.
   */
  HfInvalidArgument = 6,
  /**
   * A bug: the library panicked.
   */
  HfInternal = 7,
} HfStatus;

/**
 * Opaque transseries handle.
 */
typedef struct HfElem HfElem;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failure on this thread. Valid until the next call
 * into this library from the same thread; never NULL.
 */
const char *hf_last_error_message(void);

/**
 * Parse and evaluate `expr` with default limits.
 *
 * # Safety
 * `expr` must be a NUL-terminated string; `out` must be writable.
 */
enum HfStatus hf_eval(const char *expr, struct HfElem **out);

/**
 * First `n_terms` terms as text, e.g. `1 + x^-1 + O(x^-2)`.
 *
 * # Safety
 * `e` must be a live handle; `out` must be writable. Free the result with
 * `hf_string_free`.
 */
enum HfStatus hf_print(const struct HfElem *e, uintptr_t n_terms, char **out);

/**
 * # Safety
 * `s` must come from this library and not have been freed; NULL is ignored.
 */
void hf_string_free(char *s);

/**
 * # Safety
 * `e` must come from this library and not have been freed; NULL is ignored.
 */
void hf_elem_free(struct HfElem *e);

/**
 * ∂ = x·d/dx
 *
 * # Safety
 * `e` must be a live handle; `out` must be writable.
 */
enum HfStatus hf_derive(const struct HfElem *e, struct HfElem **out);

/**
 * Antiderivative with constant term 0.
 *
 * # Safety
 * `e` must be a live handle; `out` must be writable.
 */
enum HfStatus hf_integrate(const struct HfElem *e, struct HfElem **out);

/**
 * # Safety
 * `e` must be a live handle; `out` must be writable.
 */
enum HfStatus hf_exp(const struct HfElem *e, struct HfElem **out);

/**
 * # Safety
 * `e` must be a live handle; `out` must be writable.
 */
enum HfStatus hf_log(const struct HfElem *e, struct HfElem **out);

/**
 * # Safety
 * `a` and `b` must be live handles; `out` must be writable.
 */
enum HfStatus hf_add(const struct HfElem *a, const struct HfElem *b, struct HfElem **out);

/**
 * # Safety
 * `a` and `b` must be live handles; `out` must be writable.
 */
enum HfStatus hf_mul(const struct HfElem *a, const struct HfElem *b, struct HfElem **out);

/**
 * TIL-closedness of a set given one expression per line.
 *
 * # Safety
 * `set` must be a NUL-terminated string; `verdict` must be writable.
 */
enum HfStatus hf_check_til(const char *set, bool *verdict);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HAHN_H */
