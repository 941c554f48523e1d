/* C interface to the m2n2 point-prompt segmentation engine.
 *
 * Every function returns an m2n2_status; on failure a message is available
 * from m2n2_last_error() on the calling thread. Handles are opaque and must
 * be released with the matching *_free function. A session is not
 * thread-safe; bundles are immutable and may be shared between sessions and
 * threads.
 */
#ifndef M2N2_M2N2_H
#define M2N2_M2N2_H

#include <stddef.h>
#include <stdint.h>

#if defined(M2N2_BUILDING_LIBRARY)
#define M2N2_API __attribute__((visibility("default")))
#else
#define M2N2_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum m2n2_status {
  M2N2_OK = 0,
  M2N2_BAD_MAGIC = 1,
  M2N2_DTYPE_MISMATCH = 2,
  M2N2_NON_FINITE = 3,
  M2N2_IO_FAILURE = 4,
  M2N2_MISSING_FILE = 5,
  M2N2_DIM_MISMATCH = 6,
  M2N2_WEIGHT_ERROR = 7,
  M2N2_DEGENERATE_ROW = 8,
  M2N2_NO_CONVERGENCE = 9,
  M2N2_NOT_DOUBLY_STOCHASTIC = 10,
  M2N2_SEED_OUT_OF_RANGE = 11,
  M2N2_INVALID_ARGUMENT = 12,
  M2N2_NO_CANDIDATES = 13,
  M2N2_EMPTY_PROMPT_SET = 14,
  M2N2_OUT_OF_BOUNDS = 15,
  M2N2_EMPTY_HISTORY = 16,
  M2N2_NO_ERROR = 17,
  M2N2_SPEC_INVALID = 18,
  M2N2_BUFFER_TOO_SMALL = 19,
  M2N2_INTERNAL = 99
} m2n2_status;

typedef struct m2n2_bundle m2n2_bundle;
typedef struct m2n2_session m2n2_session;
typedef struct m2n2_report m2n2_report;

/* Pipeline switches. Zero-initialise and call m2n2_options_default. */
typedef struct m2n2_options {
  int use_adaptive;     /* adaptive size gate (1) or the prior gate (0) */
  int use_depth_fill;   /* depth term in the geodesic flood fill */
  double temperature;   /* attention sharpening exponent */
  double sigma_adaptive;
} m2n2_options;

typedef struct m2n2_click_info {
  uint64_t area;
  int fallback_used;
  int pass2_triggered;
  int constraint_residual;
  double area_delta;
  double limit; /* INFINITY when unbounded */
  double lambda;
} m2n2_click_info;

typedef struct m2n2_bench_options {
  const char* strategy; /* "center" or "random" */
  int max_clicks;
  uint64_t seed;
  int threads;
} m2n2_bench_options;

M2N2_API const char* m2n2_version(void);
M2N2_API const char* m2n2_last_error(void);
M2N2_API const char* m2n2_status_name(int status);

M2N2_API void m2n2_options_default(m2n2_options* opts);
M2N2_API void m2n2_bench_options_default(m2n2_bench_options* opts);

/* Loads and prepares a bundle directory. opts may be NULL for defaults. */
M2N2_API m2n2_status m2n2_bundle_open(const char* dir, const m2n2_options* opts, m2n2_bundle** out);
M2N2_API void m2n2_bundle_free(m2n2_bundle* bundle);
M2N2_API const char* m2n2_bundle_id(const m2n2_bundle* bundle);
M2N2_API m2n2_status m2n2_bundle_dims(const m2n2_bundle* bundle, int* height, int* width);
M2N2_API m2n2_status m2n2_bundle_original_dims(const m2n2_bundle* bundle, int* height, int* width);
M2N2_API size_t m2n2_bundle_gt_count(const m2n2_bundle* bundle);
/* Ground-truth ids in sorted order; NULL when index is out of range. */
M2N2_API const char* m2n2_bundle_gt_id(const m2n2_bundle* bundle, size_t index);
/* Metadata and configuration fingerprint as a JSON object (owned by the bundle). */
M2N2_API const char* m2n2_bundle_meta_json(const m2n2_bundle* bundle);

M2N2_API m2n2_status m2n2_session_new(m2n2_bundle* bundle, m2n2_session** out);
M2N2_API void m2n2_session_free(m2n2_session* session);
/* label: 1 foreground, 0 background. Coordinates are image pixels. */
M2N2_API m2n2_status m2n2_session_add_click(m2n2_session* session, int x, int y, int label, m2n2_click_info* info);
/* info describes the click that is now the latest one (zeroed when none remain). */
M2N2_API m2n2_status m2n2_session_undo(m2n2_session* session, m2n2_click_info* info);
M2N2_API size_t m2n2_session_click_count(const m2n2_session* session);
M2N2_API uint64_t m2n2_session_area(const m2n2_session* session);
/* Copies the H*W mask (0/1 bytes, row-major). */
M2N2_API m2n2_status m2n2_session_mask(const m2n2_session* session, uint8_t* buffer, size_t size);
/* Run lengths, row-major, alternating, first run background. If capacity is
 * too small, *count receives the required length and M2N2_BUFFER_TOO_SMALL
 * is returned. */
M2N2_API m2n2_status m2n2_session_mask_rle(const m2n2_session* session, uint32_t* runs, size_t capacity,
                                           size_t* count);
M2N2_API m2n2_status m2n2_session_mask_png(const m2n2_session* session, const char* path);
/* PNG bytes (0/255 grey); release with m2n2_buffer_free. */
M2N2_API m2n2_status m2n2_session_mask_png_bytes(const m2n2_session* session, uint8_t** data, size_t* size);
/* IoU of the current mask against a ground-truth mask of the bundle,
 * measured at the ground-truth resolution. */
M2N2_API m2n2_status m2n2_session_iou(const m2n2_session* session, const char* gt_id, double* out);

M2N2_API void m2n2_buffer_free(void* data);

/* IoU between two mask PNG files (nonzero = foreground), a resampled to b. */
M2N2_API m2n2_status m2n2_mask_iou_files(const char* pred_png, const char* gt_png, double* out);

M2N2_API m2n2_status m2n2_benchmark_run(const char* dataset_dir, const m2n2_options* opts,
                                        const m2n2_bench_options* bench, m2n2_report** out);
M2N2_API void m2n2_report_free(m2n2_report* report);
M2N2_API double m2n2_report_noc90(const m2n2_report* report);
M2N2_API double m2n2_report_noc95(const m2n2_report* report);
/* mIoU after n clicks, 1 <= n <= max_clicks; NaN otherwise. */
M2N2_API double m2n2_report_miou_at(const m2n2_report* report, int n);
M2N2_API size_t m2n2_report_failure_count(const m2n2_report* report);
M2N2_API const char* m2n2_report_json(const m2n2_report* report);
M2N2_API const char* m2n2_report_csv(const m2n2_report* report);

/* Writes count synthetic bundles (kind "overlap" or "mixed") under dir. */
M2N2_API m2n2_status m2n2_synth_write_suite(const char* dir, const char* kind, int count, uint64_t seed);

#ifdef __cplusplus
}
#endif

#endif
