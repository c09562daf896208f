#ifndef CIR_H
#define CIR_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// First-occurrence distribution family for [`cir_pmf_materialize`] and
// [`cir_stream_sampling`].
typedef enum CirPmfKind {
  // `param` is the exponent.
  CIR_PMF_KIND_ZIPF = 0,
  // `param` is the mean.
  CIR_PMF_KIND_POISSON = 1,
  // `param` is the success probability.
  CIR_PMF_KIND_GEOMETRIC = 2,
  // `param` is ignored.
  CIR_PMF_KIND_UNIFORM = 3,
} CirPmfKind;

typedef enum CirPolicy {
  CIR_POLICY_RESERVOIR = 0,
  CIR_POLICY_CLASS_BALANCED = 1,
  CIR_POLICY_FREQUENCY_AWARE = 2,
} CirPolicy;

// Result code of every fallible call.
typedef enum CirStatus {
  CIR_STATUS_OK = 0,
  CIR_STATUS_NULL_POINTER = 1,
  CIR_STATUS_INVALID_ARGUMENT = 2,
  CIR_STATUS_INVALID_CONFIG = 3,
  CIR_STATUS_INVALID_DATA = 4,
  CIR_STATUS_IO = 5,
  CIR_STATUS_NUMERICAL = 6,
  CIR_STATUS_BUFFER_TOO_SMALL = 7,
  CIR_STATUS_PANIC = 8,
} CirStatus;

// Replay buffer with its own RNG (opaque).
typedef struct CirBuffer CirBuffer;

// Labelled dataset (opaque).
typedef struct CirDataset CirDataset;

// Generated stream (opaque).
typedef struct CirStream CirStream;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or NULL. The pointer stays
// valid until the next failing call on the same thread.
const char *cir_last_error(void);

// Releases a string returned by this library. NULL is ignored.
//
// # Safety
// `s` must come from this library and not have been freed already.
void cir_string_free(char *s);

// Writes the truncated, renormalised pmf over `support_len` experiences
// into `out` (capacity `support_len`).
//
// # Safety
// `out` must point to `support_len` writable doubles.
enum CirStatus cir_pmf_materialize(enum CirPmfKind kind,
                                   double param,
                                   size_t support_len,
                                   double *out);

// Gaussian-blob dataset; returns the training split.
//
// # Safety
// `out` must be a valid pointer to a handle slot.
enum CirStatus cir_dataset_synthetic(size_t classes,
                                     size_t per_class,
                                     size_t dim,
                                     double spread,
                                     uint64_t seed,
                                     struct CirDataset **out);

// Dataset from row-major `features` (`rows × dim`) and `labels`.
//
// # Safety
// `features` must hold `rows * dim` doubles and `labels` `rows` values.
enum CirStatus cir_dataset_from_arrays(const double *features,
                                       const size_t *labels,
                                       size_t rows,
                                       size_t dim,
                                       size_t num_classes,
                                       struct CirDataset **out);

// # Safety
// `ds` must be a live dataset handle.
enum CirStatus cir_dataset_len(const struct CirDataset *ds, size_t *out);

// # Safety
// `ds` must be NULL or a handle not freed before.
void cir_dataset_free(struct CirDataset *ds);

// Slot-based stream with `experiences` experiences of `slots` slots each.
//
// # Safety
// `ds` must be a live dataset handle; `out` a valid handle slot.
enum CirStatus cir_stream_slot(const struct CirDataset *ds,
                               size_t experiences,
                               size_t slots,
                               uint64_t seed,
                               struct CirStream **out);

// Sampling-based stream. `repetition` holds one probability per class.
//
// # Safety
// `repetition` must hold `repetition_len` doubles.
enum CirStatus cir_stream_sampling(const struct CirDataset *ds,
                                   size_t experiences,
                                   size_t experience_size,
                                   enum CirPmfKind first_kind,
                                   double first_param,
                                   const double *repetition,
                                   size_t repetition_len,
                                   uint64_t seed,
                                   struct CirStream **out);

// # Safety
// `stream` must be a live stream handle.
enum CirStatus cir_stream_len(const struct CirStream *stream, size_t *out);

// Copies the instance indices of one experience into `buf`. `written`
// receives the experience size; if `capacity` is smaller, nothing is copied
// and `CIR_STATUS_BUFFER_TOO_SMALL` is returned.
//
// # Safety
// `buf` must hold `capacity` writable values.
enum CirStatus cir_stream_experience(const struct CirStream *stream,
                                     size_t index,
                                     size_t *buf,
                                     size_t capacity,
                                     size_t *written);

// Stream manifest as JSON; free the result with [`cir_string_free`].
//
// # Safety
// `stream` must be a live stream handle.
enum CirStatus cir_stream_manifest_json(const struct CirStream *stream, char **out);

// # Safety
// `stream` must be NULL or a handle not freed before.
void cir_stream_free(struct CirStream *stream);

// # Safety
// `out` must be a valid handle slot.
enum CirStatus cir_buffer_new(enum CirPolicy policy_kind,
                              size_t capacity,
                              uint64_t seed,
                              struct CirBuffer **out);

// Feeds one experience of `(instance, label)` pairs to the buffer.
//
// # Safety
// `instances` and `labels` must each hold `len` values.
enum CirStatus cir_buffer_update(struct CirBuffer *buffer,
                                 const size_t *instances,
                                 const size_t *labels,
                                 size_t len);

// # Safety
// `buffer` must be a live buffer handle.
enum CirStatus cir_buffer_len(const struct CirBuffer *buffer, size_t *out);

// Copies stored `(instance, label)` pairs into two arrays of `capacity`.
// Same size protocol as [`cir_stream_experience`].
//
// # Safety
// `instances` and `labels` must each hold `capacity` writable values.
enum CirStatus cir_buffer_contents(const struct CirBuffer *buffer,
                                   size_t *instances,
                                   size_t *labels,
                                   size_t capacity,
                                   size_t *written);

// # Safety
// `buffer` must be NULL or a handle not freed before.
void cir_buffer_free(struct CirBuffer *buffer);

// Linear CKA between row-major `x` (`rows × cols_x`) and `y` (`rows × cols_y`).
//
// # Safety
// `x` and `y` must hold `rows * cols_x` and `rows * cols_y` doubles.
enum CirStatus cir_linear_cka(const double *x,
                              size_t cols_x,
                              const double *y,
                              size_t cols_y,
                              size_t rows,
                              double *out);

// Runs the experiment described by a TOML config file and returns the run
// summary as JSON. Free `summary_json` with [`cir_string_free`].
//
// # Safety
// `config_path` must be a NUL-terminated string; `summary_json` may be NULL.
enum CirStatus cir_run_config(const char *config_path, char **summary_json);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CIR_H */
