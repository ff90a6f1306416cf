#ifndef AUGMI_H
#define AUGMI_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum AugmiStatus {
  AUGMI_STATUS_OK = 0,
  AUGMI_STATUS_NULL_POINTER = 1,
  AUGMI_STATUS_INVALID_INPUT = 2,
  AUGMI_STATUS_PARSE = 3,
  AUGMI_STATUS_IO = 4,
  AUGMI_STATUS_INVARIANT = 5,
  AUGMI_STATUS_BUFFER_TOO_SMALL = 6,
  AUGMI_STATUS_INTERNAL = 7,
} AugmiStatus;

/**
 * Fitted attack handle.
 */
typedef struct AugmiAttackModel AugmiAttackModel;

/**
 * Target model handle.
 */
typedef struct AugmiTargetModel AugmiTargetModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *augmi_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *augmi_version(void);

/**
 * Cross-entropy of `logits[0..len]` against `label`.
 *
 * # Safety
 * `logits` must point to `len` readable doubles and `out_loss` must be writable.
 */
enum AugmiStatus augmi_cross_entropy(const double *logits,
                                     size_t len,
                                     size_t label,
                                     double *out_loss);

/**
 * Arithmetic mean of a loss set.
 *
 * # Safety
 * `losses` must point to `len` readable doubles and `out_mean` must be writable.
 */
enum AugmiStatus augmi_mean_statistic(const double *losses, size_t len, double *out_mean);

/**
 * Power-mean moment features of orders `1..=order`. `*written` is set to
 * `order` even when `cap` is too small.
 *
 * # Safety
 * `losses` must hold `len` doubles, `buf` must hold `cap` doubles and
 * `written` must be writable.
 */
enum AugmiStatus augmi_moment_features(const double *losses,
                                       size_t len,
                                       size_t order,
                                       double *buf,
                                       size_t cap,
                                       size_t *written);

/**
 * Upper bound on membership-inference success for an (epsilon, k) instance
 * with prior `q`.
 *
 * # Safety
 * `out_bound` must be writable.
 */
enum AugmiStatus augmi_mi_upper_bound(double epsilon, size_t k, double q, double *out_bound);

/**
 * Loads a target checkpoint written by `augmi train`.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out_model` writable.
 */
enum AugmiStatus augmi_target_model_load(const char *path_, struct AugmiTargetModel **out_model);

/**
 * Number of classes, or 0 for a null handle.
 *
 * # Safety
 * `model` must be null or a live handle.
 */
size_t augmi_target_model_classes(const struct AugmiTargetModel *model);

/**
 * Flattened input length, or 0 for a null handle.
 *
 * # Safety
 * `model` must be null or a live handle.
 */
size_t augmi_target_model_input_len(const struct AugmiTargetModel *model);

/**
 * Logits for one input of `augmi_target_model_input_len` features.
 *
 * # Safety
 * `model` must be a live handle, `features` must hold `len` doubles, `buf`
 * must hold `cap` doubles and `written` must be writable.
 */
enum AugmiStatus augmi_target_model_logits(const struct AugmiTargetModel *model,
                                           const double *features,
                                           size_t len,
                                           double *buf,
                                           size_t cap,
                                           size_t *written);

/**
 * # Safety
 * `model` must be null or a handle from `augmi_target_model_load` not yet freed.
 */
void augmi_target_model_free(struct AugmiTargetModel *model);

/**
 * Loads a fitted attack written by `augmi attack train`.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out_model` writable.
 */
enum AugmiStatus augmi_attack_model_load(const char *path_, struct AugmiAttackModel **out_model);

/**
 * Membership decision for one loss set. Pass NaN as `original_loss` when the
 * untransformed loss is unknown.
 *
 * # Safety
 * `model` must be a live handle, `losses` must hold `len` doubles and
 * `out_member` must be writable.
 */
enum AugmiStatus augmi_attack_model_decide(const struct AugmiAttackModel *model,
                                           const double *losses,
                                           size_t len,
                                           double original_loss,
                                           bool *out_member);

/**
 * # Safety
 * `model` must be null or a handle from `augmi_attack_model_load` not yet freed.
 */
void augmi_attack_model_free(struct AugmiAttackModel *model);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* AUGMI_H */
