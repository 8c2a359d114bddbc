/*
 * Copyright 2026 MotionBits Authors
 * SPDX-License-Identifier: Apache-2.0
 *
 * C API for the motionbits shared library: moving rigid-body segmentation
 * from optical flow, a synthetic scene oracle, evaluation, and the planar
 * motion-model sensitivity study.
 *
 * Conventions:
 *   - every fallible call returns mb_status; MB_OK is 0
 *   - on failure, mb_last_error() returns a thread-local message
 *   - objects are opaque handles released with their mb_*_free function
 *   - strings returned through char** are owned by the caller and released
 *     with mb_string_free
 *   - configuration is passed as JSON text (see README for the schemas);
 *     NULL means defaults
 */

#ifndef MOTIONBITS_H
#define MOTIONBITS_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define MB_API __declspec(dllexport)
#else
#define MB_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mb_status {
  MB_OK = 0,
  MB_ERR_INVALID_ARGUMENT = 1,
  MB_ERR_IO = 2,
  MB_ERR_FORMAT = 3,
  MB_ERR_DEGENERATE = 4,
  MB_ERR_NO_MODEL = 5,
  MB_ERR_DOMAIN = 6,
  MB_ERR_VALIDATION = 7,
  MB_ERR_INTERNAL = 8
} mb_status;

typedef struct mb_flow mb_flow_t;
typedef struct mb_labels mb_labels_t;
typedef struct mb_pipeline mb_pipeline_t;

MB_API const char* mb_version(void);
MB_API const char* mb_last_error(void); /* thread-local; valid until the next failing call */
MB_API void mb_string_free(char* text);

/* ---- dense flow fields (.flo container) -------------------------------- */

MB_API mb_status mb_flow_create(int width, int height, const float* data /* nullable */,
                                mb_flow_t** out);
MB_API mb_status mb_flow_read(const char* path, mb_flow_t** out);
MB_API mb_status mb_flow_write(const mb_flow_t* flow, const char* path);
MB_API mb_status mb_flow_compose(const mb_flow_t* ab, const mb_flow_t* bc, mb_flow_t** out);
MB_API int mb_flow_width(const mb_flow_t* flow);
MB_API int mb_flow_height(const mb_flow_t* flow);
MB_API const float* mb_flow_data(const mb_flow_t* flow); /* row-major (dx, dy) pairs */
MB_API void mb_flow_free(mb_flow_t* flow);

/* ---- label maps (16-bit grayscale PNG) ---------------------------------- */

MB_API mb_status mb_labels_create(int width, int height, const uint16_t* data /* nullable */,
                                  mb_labels_t** out);
MB_API mb_status mb_labels_read(const char* path, mb_labels_t** out);
MB_API mb_status mb_labels_write(const mb_labels_t* labels, const char* path);
MB_API mb_status mb_labels_warp(const mb_labels_t* labels, const mb_flow_t* flow,
                                mb_labels_t** out);
MB_API int mb_labels_width(const mb_labels_t* labels);
MB_API int mb_labels_height(const mb_labels_t* labels);
MB_API const uint16_t* mb_labels_data(const mb_labels_t* labels);
MB_API void mb_labels_free(mb_labels_t* labels);

/* ---- streaming segmentation --------------------------------------------- */

MB_API mb_status mb_pipeline_create(const char* config_json /* nullable */, int width, int height,
                                    mb_pipeline_t** out);
/* One transition: forward flow (t-1 -> t) and backward flow (t -> t-1).
 * Produces the frame-t label map and, when sidecar_json is non-NULL, the
 * frame's JSON sidecar. */
MB_API mb_status mb_pipeline_push(mb_pipeline_t* pipeline, const mb_flow_t* forward,
                                  const mb_flow_t* backward, mb_labels_t** out_labels,
                                  char** sidecar_json /* nullable */);
MB_API void mb_pipeline_free(mb_pipeline_t* pipeline);

/* ---- one-shot runners (the CLI subcommands) ------------------------------ */

/* Renders a scene to out_dir. Exactly one of scene_spec_json (an explicit
 * scene document) or sampler_json (sampler parameters; seed taken from the
 * "seed" key) must be non-NULL. */
MB_API mb_status mb_run_simulate(const char* scene_spec_json, const char* sampler_json,
                                 uint64_t seed, const char* out_dir);

/* Online segmentation over a scene directory; returns the emitted frame
 * count through out_frames when non-NULL. */
MB_API mb_status mb_run_segment(const char* config_json /* nullable */, const char* scene_dir,
                                const char* out_dir, int* out_frames);

/* Hungarian-matched Overlap/Boundary metrics; the JSON report is returned
 * through report_json and, when report_csv is non-NULL, a per-scene CSV
 * table. options_json keys: boundary_tol_frac, boundary_tol_px, population
 * ("gt"|"union"), final_frame_only. */
MB_API mb_status mb_run_eval(const char* options_json /* nullable */, const char* pred_dir,
                             const char* gt_dir, char** report_json,
                             char** report_csv /* nullable */);

/* Monte Carlo sensitivity study; config_json follows the sensitivity schema
 * (or use {"preset": "tabletop"|"in-the-wild", ...overrides}). */
MB_API mb_status mb_run_sensitivity(const char* config_json /* nullable */, char** summary_json);

/* Per-trial deviation histogram for the same configuration, as CSV text
 * with bins of bin_width_pct percent. */
MB_API mb_status mb_run_sensitivity_histogram(const char* config_json /* nullable */,
                                              double bin_width_pct, char** csv);

/* Mask overlays and flow quiver plots. options_json keys: quiver_grid,
 * quiver_scale. */
MB_API mb_status mb_run_render(const char* options_json /* nullable */, const char* scene_dir,
                               const char* masks_dir, const char* out_dir, int* out_frames);

#ifdef __cplusplus
}
#endif

#endif /* MOTIONBITS_H */
