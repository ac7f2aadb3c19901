/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#ifndef RIRSIM_H
#define RIRSIM_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum RirsimStatus {
  RIRSIM_STATUS_OK = 0,
  // A required pointer argument was NULL.
  RIRSIM_STATUS_NULL_POINTER = 1,
  RIRSIM_STATUS_INVALID_ARGUMENT = 2,
  // Positions outside the room or an inconsistent microphone pair.
  RIRSIM_STATUS_INVALID_GEOMETRY = 3,
  // The requested T60 needs more than total absorption.
  RIRSIM_STATUS_INFEASIBLE_ROOM = 4,
  // No tail scale reaches the DRR target.
  RIRSIM_STATUS_INFEASIBLE_DRR = 5,
  // The signal cannot be analysed (no energy, too short, too little decay).
  RIRSIM_STATUS_ANALYSIS = 6,
  // The queried value does not exist for this response.
  RIRSIM_STATUS_NOT_AVAILABLE = 7,
  // An internal panic was caught.
  RIRSIM_STATUS_PANIC = 8,
} RirsimStatus;

// Source directivity patterns accepted by [`rirsim_scene_new`].
typedef enum RirsimPattern {
  RIRSIM_PATTERN_OMNIDIRECTIONAL = 0,
  RIRSIM_PATTERN_SUBCARDIOID = 1,
  RIRSIM_PATTERN_CARDIOID = 2,
  RIRSIM_PATTERN_SUPERCARDIOID = 3,
  RIRSIM_PATTERN_HYPERCARDIOID = 4,
} RirsimPattern;

// Synthesis parameters.
typedef struct RirsimConfig RirsimConfig;

// Impulse response of one microphone.
typedef struct RirsimRir RirsimRir;

// Room, source and microphone pair.
typedef struct RirsimScene RirsimScene;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *rirsim_version(void);

// Message of the last failed call on this thread, or NULL after a
// successful call. The pointer stays valid until the next call into the
// library from the same thread.
const char *rirsim_last_error_message(void);

// Creates a configuration with default parameters.
//
// # Safety
// `out` must be NULL or point to writable storage for one pointer.
enum RirsimStatus rirsim_config_new_default(struct RirsimConfig **out);

// # Safety
// `cfg` must be NULL or a handle from [`rirsim_config_new_default`] that has
// not been freed.
void rirsim_config_free(struct RirsimConfig *cfg);

// # Safety
// `cfg` must be NULL or a live configuration handle.
enum RirsimStatus rirsim_config_set_sample_rate(struct RirsimConfig *cfg, uint32_t fs);

// # Safety
// `cfg` must be NULL or a live configuration handle.
enum RirsimStatus rirsim_config_set_length(struct RirsimConfig *cfg, size_t n_samples);

// # Safety
// `cfg` must be NULL or a live configuration handle.
enum RirsimStatus rirsim_config_set_image_order(struct RirsimConfig *cfg, size_t order);

// # Safety
// `cfg` must be NULL or a live configuration handle.
enum RirsimStatus rirsim_config_set_fade_speed(struct RirsimConfig *cfg, double kappa);

// Half-width in samples of the direct-path window.
//
// # Safety
// `cfg` must be NULL or a live configuration handle.
enum RirsimStatus rirsim_config_set_drr_window(struct RirsimConfig *cfg, size_t half_width);

// Enables (`enabled != 0`) or disables the early-part high-pass.
//
// # Safety
// `cfg` must be NULL or a live configuration handle.
enum RirsimStatus rirsim_config_set_highpass(struct RirsimConfig *cfg,
                                             int32_t enabled,
                                             double cutoff_hz);

// Range of the source directivity factor drawn per synthesis. Equal bounds
// fix the factor.
//
// # Safety
// `cfg` must be NULL or a live configuration handle.
enum RirsimStatus rirsim_config_set_source_factor_range(struct RirsimConfig *cfg,
                                                        double min,
                                                        double max);

// # Safety
// `cfg` must be NULL or a live configuration handle.
enum RirsimStatus rirsim_config_set_mic_factor(struct RirsimConfig *cfg, double beta);

// Nonzero `expected` solves the tail scale against the expected DRR over
// tail realizations instead of the drawn realization.
//
// # Safety
// `cfg` must be NULL or a live configuration handle.
enum RirsimStatus rirsim_config_set_tail_solve_expected(struct RirsimConfig *cfg, int32_t expected);

// Builds a scene. Positions are `[x, y, z]` in metres, angles in radians.
// The microphone pair is centred on `array_center` with its axis at azimuth
// `array_orientation` in the horizontal plane. `pattern` is a
// [`RirsimPattern`] value.
//
// # Safety
// `room_dims`, `source_position` and `array_center` must each be NULL or
// point to three readable doubles; `out` must be NULL or writable.
enum RirsimStatus rirsim_scene_new(const double *room_dims,
                                   double t60,
                                   const double *source_position,
                                   double look_azimuth,
                                   double look_elevation,
                                   int32_t pattern,
                                   const double *array_center,
                                   double array_orientation,
                                   double mic_spacing,
                                   struct RirsimScene **out);

// Source to array-centre distance in metres, or NaN for a NULL scene.
//
// # Safety
// `scene` must be NULL or a live scene handle.
double rirsim_scene_distance(const struct RirsimScene *scene);

// # Safety
// `scene` must be NULL or a live scene handle.
void rirsim_scene_free(struct RirsimScene *scene);

// Full synthesis: image sources plus a stochastic tail scaled to the DRR
// target. Writes one handle per microphone.
//
// # Safety
// `cfg` and `scene` must be NULL or live handles; the output pointers must
// be NULL or writable.
enum RirsimStatus rirsim_synthesize(const struct RirsimConfig *cfg,
                                    const struct RirsimScene *scene,
                                    uint64_t seed,
                                    struct RirsimRir **out_mic0,
                                    struct RirsimRir **out_mic1);

// Image-source responses up to `max_order`, without a tail.
//
// # Safety
// As for [`rirsim_synthesize`].
enum RirsimStatus rirsim_synthesize_ism_only(const struct RirsimConfig *cfg,
                                             const struct RirsimScene *scene,
                                             size_t max_order,
                                             struct RirsimRir **out_mic0,
                                             struct RirsimRir **out_mic1);

// Number of samples, or 0 for a NULL handle.
//
// # Safety
// `rir` must be NULL or a live response handle.
size_t rirsim_rir_len(const struct RirsimRir *rir);

// Sample rate in Hz, or 0 for a NULL handle.
//
// # Safety
// `rir` must be NULL or a live response handle.
uint32_t rirsim_rir_sample_rate(const struct RirsimRir *rir);

// Copies the samples into `dst`, which must hold at least
// [`rirsim_rir_len`] values.
//
// # Safety
// `rir` must be NULL or a live handle; `dst` must be NULL or point to
// `capacity` writable doubles.
enum RirsimStatus rirsim_rir_copy_samples(const struct RirsimRir *rir,
                                          double *dst,
                                          size_t capacity);

// Sample index of the direct-path arrival.
//
// # Safety
// `rir` must be NULL or a live handle; `out` must be NULL or writable.
enum RirsimStatus rirsim_rir_direct_index(const struct RirsimRir *rir, size_t *out);

// DRR the response was synthesized to hit. `NotAvailable` for responses
// without a target.
//
// # Safety
// `rir` must be NULL or a live handle; `out` must be NULL or writable.
enum RirsimStatus rirsim_rir_target_drr(const struct RirsimRir *rir, double *out);

// DRR measured on the final response. `NotAvailable` when it could not be
// measured (no reverberant energy).
//
// # Safety
// `rir` must be NULL or a live handle; `out` must be NULL or writable.
enum RirsimStatus rirsim_rir_measured_drr(const struct RirsimRir *rir, double *out);

// # Safety
// `rir` must be NULL or a live response handle.
void rirsim_rir_free(struct RirsimRir *rir);

// Direct-to-reverberant energy ratio of `samples` around `direct_index`
// with a direct window of `half_width` samples on each side.
//
// # Safety
// `samples` must be NULL or point to `len` readable doubles; `out` must be
// NULL or writable.
enum RirsimStatus rirsim_measure_drr(const double *samples,
                                     size_t len,
                                     size_t direct_index,
                                     size_t half_width,
                                     double *out);

// Critical distance in metres of a room with dimensions `room_dims` and
// reverberation time `t60`, for source factor `alpha` and microphone factor
// `beta`.
//
// # Safety
// `room_dims` must be NULL or point to three doubles; `out` must be NULL or
// writable.
enum RirsimStatus rirsim_critical_distance(const double *room_dims,
                                           double t60,
                                           double alpha,
                                           double beta,
                                           double *out);

// Reverberation time in seconds from a linear fit to the energy decay
// curve between -5 and -35 dB.
//
// # Safety
// `samples` must be NULL or point to `len` readable doubles; `out` must be
// NULL or writable.
enum RirsimStatus rirsim_estimate_t60(const double *samples,
                                      size_t len,
                                      uint32_t sample_rate,
                                      double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RIRSIM_H */
