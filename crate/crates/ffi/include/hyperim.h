#ifndef HYPERIM_H
#define HYPERIM_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every call.
typedef enum HyperimStatus {
  HYPERIM_STATUS_OK = 0,
  HYPERIM_STATUS_NULL_POINTER = 1,
  HYPERIM_STATUS_INVALID_ARGUMENT = 2,
  HYPERIM_STATUS_IO = 3,
  HYPERIM_STATUS_PARSE = 4,
  HYPERIM_STATUS_CHECKPOINT = 5,
  HYPERIM_STATUS_BUFFER_TOO_SMALL = 6,
  HYPERIM_STATUS_PANIC = 7,
} HyperimStatus;

// A loaded classifier. Create with [`hyperim_model_load`], release with
// [`hyperim_model_free`].
typedef struct HyperimModel HyperimModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null after a
// successful one. Valid until the next call on the same thread.
const char *hyperim_last_error(void);

// Load a checkpoint written by `hyperim train`.
//
// # Safety
// `path` must be a NUL-terminated string and `out` a writable pointer.
enum HyperimStatus hyperim_model_load(const char *path, struct HyperimModel **out);

// Release a model. Null is ignored.
//
// # Safety
// `model` must come from [`hyperim_model_load`] and not be used afterwards.
void hyperim_model_free(struct HyperimModel *model);

// Number of labels the model scores.
//
// # Safety
// `model` must be a live handle and `out` writable.
enum HyperimStatus hyperim_model_num_labels(const struct HyperimModel *model, size_t *out);

// Name of label `index`. The string is owned by the model.
//
// # Safety
// `model` must be a live handle and `out` writable.
enum HyperimStatus hyperim_model_label_name(const struct HyperimModel *model,
                                            size_t index,
                                            const char **out);

// Probability of every label for a whitespace-tokenized document.
// `probs` must hold `len` values with `len >= num_labels`.
//
// # Safety
// `model` must be a live handle, `text` NUL-terminated, `probs` writable
// for `len` doubles.
enum HyperimStatus hyperim_model_scores(const struct HyperimModel *model,
                                        const char *text,
                                        double *probs,
                                        size_t len);

// The `k` most probable labels, highest first. Writes `min(k, num_labels)`
// entries to `indices` and `probs` and stores that count in `written`.
//
// # Safety
// `model` must be a live handle, `text` NUL-terminated, `indices` and
// `probs` writable for `k` elements, `written` writable.
enum HyperimStatus hyperim_model_predict(const struct HyperimModel *model,
                                         const char *text,
                                         size_t k,
                                         size_t *indices,
                                         double *probs,
                                         size_t *written);

// Geodesic distance between two points of the `dim`-ball.
//
// # Safety
// `u` and `v` must be readable for `dim` doubles, `out` writable.
enum HyperimStatus hyperim_ball_distance(const double *u, const double *v, size_t dim, double *out);

// Möbius addition `u ⊕ v`, written to `out`.
//
// # Safety
// `u` and `v` must be readable and `out` writable for `dim` doubles.
enum HyperimStatus hyperim_ball_mobius_add(const double *u,
                                           const double *v,
                                           size_t dim,
                                           double *out);

// Möbius scalar multiplication `k ⊗ p`.
//
// # Safety
// `p` must be readable and `out` writable for `dim` doubles.
enum HyperimStatus hyperim_ball_scalar_mul(double k, const double *p, size_t dim, double *out);

// Exponential map at `p` of tangent vector `w`.
//
// # Safety
// `p` and `w` must be readable and `out` writable for `dim` doubles.
enum HyperimStatus hyperim_ball_exp_map(const double *p, const double *w, size_t dim, double *out);

// Logarithmic map at `p` of point `u`, a tangent vector at `p`.
//
// # Safety
// `p` and `u` must be readable and `out` writable for `dim` doubles.
enum HyperimStatus hyperim_ball_log_map(const double *p, const double *u, size_t dim, double *out);

// Project arbitrary finite coordinates into the ball.
//
// # Safety
// `x` must be readable and `out` writable for `dim` doubles.
enum HyperimStatus hyperim_ball_project(const double *x, size_t dim, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HYPERIM_H */
