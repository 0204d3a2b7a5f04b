#ifndef HARVEST_H
#define HARVEST_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum HvStatus {
  HV_STATUS_OK = 0,
  HV_STATUS_NULL_ARGUMENT = 1,
  HV_STATUS_INVALID_UTF8 = 2,
  HV_STATUS_IO = 3,
  HV_STATUS_FORMAT = 4,
  HV_STATUS_STRUCTURE = 5,
  HV_STATUS_CONFIG = 6,
  HV_STATUS_CONTRACT = 7,
  HV_STATUS_OUT_OF_RANGE = 8,
  HV_STATUS_PANIC = 9,
} HvStatus;

/**
 * Pipeline configuration handle.
 */
typedef struct HvConfig HvConfig;

/**
 * Processed frame: ranked fruits plus rejections.
 */
typedef struct HvPickList HvPickList;

/**
 * One ranked fruit. Angles, pose and approach direction are meaningful only
 * when `has_pose` is nonzero.
 */
typedef struct HvFruit {
  uint16_t id;
  double center_m[3];
  double radius_m;
  bool has_pose;
  double theta_rad;
  double phi_rad;
  /**
   * Row-major 3x3.
   */
  double r_pose[9];
  double approach_dir[3];
  double confidence;
  bool can_pick;
  size_t candidates;
  uint32_t votes;
} HvFruit;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. Valid until the
 * next call into this library from the same thread.
 */
const char *hv_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *hv_version(void);

/**
 * Default configuration.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage.
 */
enum HvStatus hv_config_default(struct HvConfig **out);

/**
 * Loads a TOML configuration file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum HvStatus hv_config_load(const char *path, struct HvConfig **out);

/**
 * Enables or disables pose verification.
 *
 * # Safety
 * `cfg` must come from `hv_config_default` or `hv_config_load`.
 */
enum HvStatus hv_config_set_verify(struct HvConfig *cfg, bool enabled);

/**
 * # Safety
 * `cfg` must be null or a handle not yet freed.
 */
void hv_config_free(struct HvConfig *cfg);

/**
 * Processes the frame directory `frame_dir`. When `out_dir` is non-null the
 * pick list, voxmaps and timing table are written there too.
 *
 * # Safety
 * `cfg` must be a live handle, strings NUL-terminated, `out` writable.
 */
enum HvStatus hv_process_frame(const struct HvConfig *cfg,
                               const char *frame_dir,
                               const char *out_dir,
                               struct HvPickList **out);

/**
 * Number of ranked fruits; 0 for a null handle.
 *
 * # Safety
 * `list` must be null or a live handle.
 */
size_t hv_pick_list_len(const struct HvPickList *list);

/**
 * Number of fruits rejected before a sphere was found.
 *
 * # Safety
 * `list` must be null or a live handle.
 */
size_t hv_pick_list_rejected_len(const struct HvPickList *list);

/**
 * Copies the fruit at rank `index` (0 is the most confident) into `out`.
 *
 * # Safety
 * `list` must be a live handle and `out` writable.
 */
enum HvStatus hv_pick_list_get(const struct HvPickList *list, size_t index, struct HvFruit *out);

/**
 * Pick list as JSON. Release the string with `hv_string_free`.
 *
 * # Safety
 * `list` must be a live handle and `out` writable.
 */
enum HvStatus hv_pick_list_to_json(const struct HvPickList *list, char **out);

/**
 * # Safety
 * `list` must be null or a handle not yet freed.
 */
void hv_pick_list_free(struct HvPickList *list);

/**
 * # Safety
 * `s` must be null or a string returned by this library and not yet freed.
 */
void hv_string_free(char *s);

/**
 * Row-major approach rotation for azimuth `theta` and elevation `phi`.
 *
 * # Safety
 * `out` must point to 9 writable doubles.
 */
enum HvStatus hv_rotation_matrix(double theta, double phi, double *out);

/**
 * Pick confidence for a summed window penalty.
 */
double hv_confidence_from_penalty(double window_penalty);

/**
 * Renders the scene described by the JSON file `spec_path` into `out_dir`.
 *
 * # Safety
 * Strings must be NUL-terminated.
 */
enum HvStatus hv_synth_render(const char *spec_path, uint64_t seed, const char *out_dir);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HARVEST_H */
