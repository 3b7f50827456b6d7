#ifndef RISOPT_H
#define RISOPT_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes.
 */
typedef enum RisoptStatus {
  RISOPT_STATUS_OK = 0,
  RISOPT_STATUS_NULL_POINTER = 1,
  RISOPT_STATUS_INVALID_INPUT = 2,
  RISOPT_STATUS_DIMENSION = 3,
  RISOPT_STATUS_PARSE = 4,
  RISOPT_STATUS_IO = 5,
  RISOPT_STATUS_SINGULAR = 6,
  RISOPT_STATUS_INFEASIBLE_USER = 7,
  RISOPT_STATUS_DUALITY = 8,
  RISOPT_STATUS_DOMAIN = 9,
  RISOPT_STATUS_BUFFER_TOO_SMALL = 10,
  RISOPT_STATUS_PANIC = 11,
} RisoptStatus;

/**
 * Opaque channel-components handle.
 */
typedef struct RisoptChannel RisoptChannel;

/**
 * Opaque scene handle.
 */
typedef struct RisoptScene RisoptScene;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *risopt_version(void);

/**
 * Copies the calling thread's last error message into `buf` (NUL-terminated,
 * truncated to `len`). Returns the full message length, or 0 if none.
 *
 * # Safety
 * `buf` must be valid for `len` bytes or null.
 */
size_t risopt_last_error_message(char *buf, size_t len);

/**
 * `kTB` in watts.
 *
 * # Safety
 * `out_watts` must be a valid pointer.
 */
enum RisoptStatus risopt_noise_power(double temperature_k, double bandwidth_hz, double *out_watts);

/**
 * The built-in default scene.
 */
struct RisoptScene *risopt_scene_default(void);

/**
 * Loads a scene JSON file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum RisoptStatus risopt_scene_load(const char *path, struct RisoptScene **out);

/**
 * # Safety
 * `scene` must come from this library and not be used afterwards.
 */
void risopt_scene_free(struct RisoptScene *scene);

/**
 * Traces a scene into channel components.
 *
 * # Safety
 * `scene` must be a live handle and `out` a valid pointer.
 */
enum RisoptStatus risopt_channel_from_scene(const struct RisoptScene *scene,
                                            struct RisoptChannel **out);

/**
 * Loads a channel file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum RisoptStatus risopt_channel_load(const char *path, struct RisoptChannel **out);

/**
 * Writes a channel file.
 *
 * # Safety
 * `channel` must be a live handle and `path` a NUL-terminated string.
 */
enum RisoptStatus risopt_channel_save(const struct RisoptChannel *channel, const char *path);

/**
 * # Safety
 * `channel` must come from this library and not be used afterwards.
 */
void risopt_channel_free(struct RisoptChannel *channel);

/**
 * Users, BS antennas and RIS ports.
 *
 * # Safety
 * All pointers must be valid.
 */
enum RisoptStatus risopt_channel_dims(const struct RisoptChannel *channel,
                                      size_t *k,
                                      size_t *m,
                                      size_t *n);

/**
 * Effective channel for per-element capacitances, written row-major into
 * `out_re`/`out_im` (each of length `K·M`).
 *
 * # Safety
 * `caps_pf` must hold `n_caps` values; the outputs must hold `out_len` values.
 */
enum RisoptStatus risopt_effective_channel(const struct RisoptChannel *channel,
                                           const double *caps_pf,
                                           size_t n_caps,
                                           double *out_re,
                                           double *out_im,
                                           size_t out_len);

/**
 * Max-min duality beamformer on the effective channel; returns the minimum
 * rate in bps/Hz.
 *
 * # Safety
 * `caps_pf` must hold `n_caps` values; `out_rate` must be valid.
 */
enum RisoptStatus risopt_min_rate(const struct RisoptChannel *channel,
                                  const double *caps_pf,
                                  size_t n_caps,
                                  double p_dbm,
                                  double noise_w,
                                  double *out_rate);

/**
 * Continuous per-element optimization from a seeded random start; writes
 * the optimized capacitances (pF) and the final minimum rate.
 *
 * # Safety
 * `out_caps_pf` must hold `n_caps` values; `out_rate` must be valid.
 */
enum RisoptStatus risopt_optimize(const struct RisoptChannel *channel,
                                  double p_dbm,
                                  double noise_w,
                                  uint64_t seed,
                                  double *out_caps_pf,
                                  size_t n_caps,
                                  double *out_rate);

/**
 * Exhaustive search over adjacent-pair 1-bit states (element count must be
 * even or the last element forms its own group). Writes the best
 * enumeration index and its minimum rate.
 *
 * # Safety
 * The output pointers must be valid.
 */
enum RisoptStatus risopt_exhaustive_best(const struct RisoptChannel *channel,
                                         double p_dbm,
                                         double noise_w,
                                         uint64_t *out_index,
                                         double *out_rate);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RISOPT_H */
