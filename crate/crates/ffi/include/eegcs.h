#ifndef EEGCS_H
#define EEGCS_H

/* Generated by cbindgen from crates/ffi/src. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Number of values written by [`eegcs_fsm_bands`]: delta, theta, alpha,
// beta, gamma.
#define EEGCS_NUM_BANDS 5

typedef enum EegcsStatus {
  EEGCS_STATUS_OK = 0,
  EEGCS_STATUS_VALIDATION = 1,
  EEGCS_STATUS_DEGENERATE = 2,
  EEGCS_STATUS_PARSE = 3,
  EEGCS_STATUS_UNSUPPORTED = 4,
  EEGCS_STATUS_NUMERICAL = 5,
  EEGCS_STATUS_NON_CONVERGENCE = 6,
  EEGCS_STATUS_INFEASIBLE = 7,
  EEGCS_STATUS_UNDEFINED_SPECTRUM = 8,
  EEGCS_STATUS_NETWORK = 9,
  EEGCS_STATUS_IO = 10,
  EEGCS_STATUS_NULL_POINTER = 11,
  EEGCS_STATUS_INVALID_UTF8 = 12,
  EEGCS_STATUS_PANIC = 13,
} EegcsStatus;

typedef enum EegcsEpsilonMode {
  // ε = value · ‖y‖₂ per instant.
  EEGCS_EPSILON_MODE_RELATIVE = 0,
  // ε = value.
  EEGCS_EPSILON_MODE_ABSOLUTE = 1,
} EegcsEpsilonMode;

// Opaque learned dictionary.
typedef struct EegcsModel EegcsModel;

typedef struct EegcsRecoveryConfig {
  enum EegcsEpsilonMode epsilon_mode;
  double epsilon;
  double solver_tol;
  size_t max_iters;
} EegcsRecoveryConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failure on this thread, or null if none. The pointer
// stays valid until the next failing call on the same thread.
const char *eegcs_last_error_message(void);

// Learns a model from `num_samples × num_channels` training samples.
// `labels` may be null, giving labels `ch0`, `ch1`, ….
//
// # Safety
// `samples` must point to `num_samples * num_channels` doubles; `labels`,
// if non-null, to `num_channels` NUL-terminated strings; `out` must be
// writable.
enum EegcsStatus eegcs_model_train(const double *samples,
                                   size_t num_samples,
                                   size_t num_channels,
                                   const char *const *labels,
                                   double sample_rate,
                                   size_t window_len,
                                   bool centered,
                                   struct EegcsModel **out);

// # Safety
// `json` must be a NUL-terminated string and `out` writable.
enum EegcsStatus eegcs_model_from_json(const char *json, struct EegcsModel **out);

// Writes a newly allocated JSON string to `out`; release it with
// [`eegcs_string_free`].
//
// # Safety
// `model` must come from this library and `out` must be writable.
enum EegcsStatus eegcs_model_to_json(const struct EegcsModel *model, char **out);

// # Safety
// `s` must be null or a string returned by this library, freed once.
void eegcs_string_free(char *s);

// Number of channels, or 0 for a null model.
//
// # Safety
// `model` must be null or come from this library.
size_t eegcs_model_num_channels(const struct EegcsModel *model);

// # Safety
// `model` must be null or come from this library, freed once.
void eegcs_model_free(struct EegcsModel *model);

// Default recovery settings: relative ε = 1e-3, tolerance 1e-6, 20000
// iterations.
struct EegcsRecoveryConfig eegcs_recovery_config_default(void);

// Reconstructs all model channels from the channels at indices `measured`.
// `samples` is `num_samples × num_measured`; `out` receives
// `num_samples × eegcs_model_num_channels(model)` values. A null `config`
// uses the defaults.
//
// # Safety
// Pointers must reference arrays of the stated sizes; `config` may be null.
enum EegcsStatus eegcs_reconstruct(const struct EegcsModel *model,
                                   const size_t *measured,
                                   size_t num_measured,
                                   const double *samples,
                                   size_t num_samples,
                                   const struct EegcsRecoveryConfig *config,
                                   double *out);

// Fractional spectral measure of `signal` in each default band, written to
// `out[0..EEGCS_NUM_BANDS]`.
//
// # Safety
// `signal` must hold `len` doubles and `out` room for `EEGCS_NUM_BANDS`.
enum EegcsStatus eegcs_fsm_bands(const double *signal, size_t len, double sample_rate, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EEGCS_H */
