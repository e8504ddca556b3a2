#ifndef STSS_STSS_H
#define STSS_STSS_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define STSS_API __declspec(dllexport)
#else
#define STSS_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum stss_status {
  STSS_OK = 0,
  STSS_ERR_ARGUMENT = 1, /* bad argument or violated precondition */
  STSS_ERR_CONFIG = 2,   /* invalid configuration or layout mismatch */
  STSS_ERR_IO = 3,       /* missing, corrupt or unwritable file */
  STSS_ERR_NUMERIC = 4,  /* NaN/Inf produced, e.g. diverged training */
  STSS_ERR_HISTORY = 5,  /* frame index has too few history frames */
  STSS_ERR_INTERNAL = 6
} stss_status;

typedef enum stss_role { STSS_ROLE_SF = 0, STSS_ROLE_EF = 1, STSS_ROLE_ALL = -1 } stss_role;

/* Message of the last failed call on this thread; "" if none. */
STSS_API const char* stss_last_error(void);
STSS_API const char* stss_status_string(stss_status status);
STSS_API const char* stss_version(void);

/* ---- data ---------------------------------------------------------------- */

/* Writes the INI description of a built-in desk scene (variant 0 or 1). */
STSS_API stss_status stss_desk_scene_config(int variant, uint64_t seed, int frames, const char* path);
/* Renders every frame of the scene described by an INI file into out_dir. */
STSS_API stss_status stss_synth(const char* scene_ini, const char* out_dir);
/* Warps history frames and caches the 21-channel network inputs. */
STSS_API stss_status stss_preprocess(const char* clip_dir);

/* ---- model --------------------------------------------------------------- */

typedef struct stss_model stss_model;

/* preset: "desk" or "paper". */
STSS_API stss_status stss_model_create(const char* preset, int use_erm, uint64_t seed, stss_model** out);
STSS_API stss_status stss_model_load(const char* checkpoint, stss_model** out);
STSS_API stss_status stss_model_save(const stss_model* model, const char* checkpoint);
STSS_API void stss_model_free(stss_model* model);

typedef struct stss_components {
  uint64_t backbone;
  uint64_t history;
  uint64_t erm;
  uint64_t total;
} stss_components;

STSS_API stss_status stss_model_param_count(const stss_model* model, stss_components* out);
/* Multiply-adds for an LR input of height x width. */
STSS_API stss_status stss_model_flops(const stss_model* model, size_t height, size_t width, stss_components* out);

/* input: 21 x height x width planar floats (raw cached network input).
   output: 3 x 2height x 2width planar floats. */
STSS_API stss_status stss_model_infer(const stss_model* model, const float* input, size_t height, size_t width,
                                      float* output);
/* Writes %06d_pred.stsf (and .png if png != 0) for every cached frame. */
STSS_API stss_status stss_infer_clip(const stss_model* model, const char* clip_dir, const char* out_dir, int png);

/* ---- training ------------------------------------------------------------ */

typedef void (*stss_progress_fn)(int step, int epoch, float lr, double loss, void* user);

/* Trains from a run INI ([data], [train], [rrm], [net]) and writes the
   checkpoint (plus checkpoint.cfg). epochs > 0 overrides the file. loss_csv
   and progress may be NULL. */
STSS_API stss_status stss_train(const char* run_ini, const char* checkpoint, const char* loss_csv, int epochs,
                                stss_progress_fn progress, void* user);

/* ---- evaluation ---------------------------------------------------------- */

typedef struct stss_report stss_report;

typedef struct stss_report_row {
  const char* scene; /* owned by the report */
  int role;          /* stss_role */
  int frames;
  double psnr, ssim;
  double edge_psnr, edge_ssim;
  double hole_psnr, hole_ssim;
  int edge_empty, hole_empty;
} stss_report_row;

/* model == NULL evaluates the bilinear warped-frame baseline. */
STSS_API stss_status stss_evaluate(const stss_model* model, const char* const* clip_dirs, size_t count,
                                   stss_report** out);
STSS_API void stss_report_free(stss_report* report);
STSS_API size_t stss_report_row_count(const stss_report* report);
STSS_API stss_status stss_report_get_row(const stss_report* report, size_t index, stss_report_row* out);
/* Rows of one role (or STSS_ROLE_ALL) merged across scenes; scene is "all". */
STSS_API stss_status stss_report_combined(const stss_report* report, int role, stss_report_row* out);
STSS_API double stss_report_ms_per_frame(const stss_report* report);
/* Copies the CSV text into buf (NUL-terminated) if it fits; *needed gets
   the size including the terminator. buf may be NULL to query. */
STSS_API stss_status stss_report_csv(const stss_report* report, char* buf, size_t capacity, size_t* needed);
STSS_API stss_status stss_report_write_csv(const stss_report* report, const char* path);

/* ---- timing -------------------------------------------------------------- */

typedef struct stss_bench_row {
  size_t lr_width, lr_height;
  int samples;
  double lr_ms, gbuffer_ms, warp_ms, network_ms;
} stss_bench_row;

/* Median per-stage wall clock on a desk scene rendered at the given LR size. */
STSS_API stss_status stss_bench(const stss_model* model, size_t lr_width, size_t lr_height, int samples,
                                stss_bench_row* out);

#ifdef __cplusplus
}
#endif

#endif
