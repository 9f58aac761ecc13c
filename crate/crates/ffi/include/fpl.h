#ifndef FPL_H
#define FPL_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdbool.h>
#include <stdint.h>
#include <stddef.h>

/**
 * Result code of every fallible call.
 */
typedef enum FplStatus {
  FPL_STATUS_OK = 0,
  FPL_STATUS_NULL_POINTER = 1,
  FPL_STATUS_INVALID_ARGUMENT = 2,
  FPL_STATUS_INFEASIBLE = 3,
  FPL_STATUS_UNSOLVABLE = 4,
  FPL_STATUS_NOT_REACHED = 5,
  FPL_STATUS_BUDGET_EXHAUSTED = 6,
  FPL_STATUS_INCONSISTENT = 7,
  FPL_STATUS_PARSE = 8,
  FPL_STATUS_BUFFER_TOO_SMALL = 9,
  FPL_STATUS_PANIC = 99,
} FplStatus;

/**
 * Opaque hidden form handle.
 */
typedef struct FplHiddenForm FplHiddenForm;

/**
 * Opaque integration result handle.
 */
typedef struct FplIntegration FplIntegration;

/**
 * Opaque painting handle.
 */
typedef struct FplPainting FplPainting;

/**
 * Opaque random phenomenon handle.
 */
typedef struct FplPhenomenon FplPhenomenon;

/**
 * Counters of one puzzle game.
 */
typedef struct FplPuzzleSummary {
  uint64_t fragments_drawn;
  uint64_t placements;
  uint64_t trials;
  uint32_t completed_replicas;
  /**
   * 1-based draw that completed the last replica.
   */
  uint64_t last_completion_draw;
} FplPuzzleSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer is
 * valid until the next failing call on the same thread.
 */
const char *fpl_last_error(void);

/**
 * Free a string returned by this library.
 *
 * # Safety
 * `s` must be null or a pointer returned by an `fpl_*` call, not yet freed.
 */
void fpl_string_free(char *s);

/**
 * Generate a unique-edge painting with `counts[j]` tiles of label `j + 1`.
 *
 * # Safety
 * `counts` must point to `q` readable values; `out` must be writable.
 */
enum FplStatus fpl_painting_generate(uint32_t width,
                                     uint32_t height,
                                     const uint32_t *counts,
                                     uintptr_t q,
                                     uint64_t seed,
                                     struct FplPainting **out);

/**
 * Parse a painting from its JSON form.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum FplStatus fpl_painting_from_json(const char *json, struct FplPainting **out);

/**
 * JSON form of a painting; free the result with `fpl_string_free`.
 *
 * # Safety
 * `p` must be a live painting handle; `out` must be writable.
 */
enum FplStatus fpl_painting_to_json(const struct FplPainting *p, char **out);

/**
 * Width, height and label count of a painting.
 *
 * # Safety
 * `p` must be a live painting handle; the out pointers must be writable.
 */
enum FplStatus fpl_painting_dims(const struct FplPainting *p,
                                 uint32_t *width,
                                 uint32_t *height,
                                 uint32_t *q);

/**
 * Tiles per label, written to `out[0..q]`.
 *
 * # Safety
 * `p` must be a live painting handle; `out` must hold `len` values.
 */
enum FplStatus fpl_painting_histogram(const struct FplPainting *p, uint64_t *out, uintptr_t len);

/**
 * # Safety
 * `p` must be null or a handle from this library, not yet freed.
 */
void fpl_painting_free(struct FplPainting *p);

/**
 * Play the puzzle game: `border` non-zero assembles by edge signatures,
 * otherwise by location.
 *
 * # Safety
 * `p` must be a live painting handle; `out` must be writable.
 */
enum FplStatus fpl_puzzle_play(const struct FplPainting *p,
                               bool border,
                               uint32_t replicas,
                               uint64_t seed,
                               struct FplPuzzleSummary *out);

/**
 * The draw-with-replacement phenomenon of a painting.
 *
 * # Safety
 * `p` must be a live painting handle; `out` must be writable.
 */
enum FplStatus fpl_phenomenon_from_painting(const struct FplPainting *p,
                                            struct FplPhenomenon **out);

/**
 * An urn with labels `"1".."n"` weighted by `weights`.
 *
 * # Safety
 * `weights` must point to `n` readable values; `out` must be writable.
 */
enum FplStatus fpl_phenomenon_from_weights(const uint64_t *weights,
                                           uintptr_t n,
                                           struct FplPhenomenon **out);

/**
 * Number of labels in the phenomenon's universe.
 *
 * # Safety
 * `ph` must be a live phenomenon handle.
 */
uintptr_t fpl_phenomenon_label_count(const struct FplPhenomenon *ph);

/**
 * # Safety
 * `ph` must be null or a handle from this library, not yet freed.
 */
void fpl_phenomenon_free(struct FplPhenomenon *ph);

/**
 * Draw `draws` labels and write per-label counts to `counts`.
 *
 * # Safety
 * `ph` must be a live phenomenon handle; `counts` must hold `len` values.
 */
enum FplStatus fpl_prob_game(const struct FplPhenomenon *ph,
                             uint64_t draws,
                             uint64_t seed,
                             uint64_t *counts,
                             uintptr_t len);

/**
 * Share of `repetitions` length-`n` runs whose frequency of label
 * `label_index` lies within `epsilon` of `p_num / p_den`.
 *
 * # Safety
 * `ph` must be a live phenomenon handle; `out` must be writable.
 */
enum FplStatus fpl_meta_probability(const struct FplPhenomenon *ph,
                                    uintptr_t label_index,
                                    uint64_t p_num,
                                    uint64_t p_den,
                                    double epsilon,
                                    uint64_t n,
                                    uint64_t repetitions,
                                    uint64_t seed,
                                    double *out);

/**
 * Doubling search from 16 up to `cap` for the first `N` whose estimate
 * reaches `1 - delta`.
 *
 * # Safety
 * `ph` must be a live phenomenon handle; `out` must be writable.
 */
enum FplStatus fpl_find_n0(const struct FplPhenomenon *ph,
                           uintptr_t label_index,
                           uint64_t p_num,
                           uint64_t p_den,
                           double epsilon,
                           double delta,
                           uint64_t repetitions,
                           uint64_t seed,
                           uint64_t cap,
                           uint64_t *out);

/**
 * Number of count vectors of `n` draws over `q` labels, as a decimal
 * string; free it with `fpl_string_free`.
 *
 * # Safety
 * `out` must be writable.
 */
enum FplStatus fpl_count_structures(uint64_t n, uint64_t q, char **out);

/**
 * Generate a hidden form; `s_prime` 0 picks the smallest allowed range.
 *
 * # Safety
 * `counts` must point to `q` readable values; `out` must be writable.
 */
enum FplStatus fpl_form_generate(uint32_t width,
                                 uint32_t height,
                                 const uint32_t *counts,
                                 uintptr_t q,
                                 uint64_t seed,
                                 uint64_t s_prime,
                                 struct FplHiddenForm **out);

/**
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum FplStatus fpl_form_from_json(const char *json, struct FplHiddenForm **out);

/**
 * # Safety
 * `form` must be a live form handle; `out` must be writable.
 */
enum FplStatus fpl_form_to_json(const struct FplHiddenForm *form, char **out);

/**
 * # Safety
 * `form` must be null or a handle from this library, not yet freed.
 */
void fpl_form_free(struct FplHiddenForm *form);

/**
 * Integrate the form's complexified stream with `confirm` replicas, giving
 * up after `max_events` events.
 *
 * # Safety
 * `form` must be a live form handle; `out` must be writable.
 */
enum FplStatus fpl_integrate(const struct FplHiddenForm *form,
                             uint64_t seed,
                             uint32_t confirm,
                             uint64_t max_events,
                             struct FplIntegration **out);

/**
 * Number of labels in the integrated law.
 *
 * # Safety
 * `res` must be a live integration handle.
 */
uintptr_t fpl_integration_label_count(const struct FplIntegration *res);

/**
 * Probability of label `index` as a reduced fraction.
 *
 * # Safety
 * `res` must be a live integration handle; the out pointers must be writable.
 */
enum FplStatus fpl_integration_law(const struct FplIntegration *res,
                                   uintptr_t index,
                                   uint64_t *num,
                                   uint64_t *den);

/**
 * Tiles of one completed replica.
 *
 * # Safety
 * `res` must be a live integration handle; `out` must be writable.
 */
enum FplStatus fpl_integration_total(const struct FplIntegration *res, uint64_t *out);

/**
 * # Safety
 * `res` must be a live integration handle; `out` must be writable.
 */
enum FplStatus fpl_integration_to_json(const struct FplIntegration *res, char **out);

/**
 * # Safety
 * `res` must be null or a handle from this library, not yet freed.
 */
void fpl_integration_free(struct FplIntegration *res);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FPL_H */
