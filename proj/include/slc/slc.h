/* Skin-lesion classification toolkit: C interface.
 *
 * Every function returns an slc_status. On failure the message is available
 * from slc_last_error() on the same thread until the next call. Objects are
 * opaque handles released with their *_free function; passing NULL to a
 * free function is a no-op.
 *
 * String outputs use a caller buffer: `cap` bytes are available at `buf`,
 * and `*needed` (when not NULL) receives the full length including the
 * terminating NUL. A buffer that is too small yields SLC_ERR_BUFFER with the
 * output truncated but terminated.
 */
#ifndef SLC_SLC_H
#define SLC_SLC_H

#include <stddef.h>
#include <stdint.h>

#if defined(SLC_BUILDING_LIBRARY)
#define SLC_API __attribute__((visibility("default")))
#else
#define SLC_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum slc_status {
  SLC_OK = 0,
  SLC_ERR_INVALID_ARGUMENT = 1,
  SLC_ERR_SHAPE = 2,
  SLC_ERR_IO = 3,
  SLC_ERR_FORMAT = 4,
  SLC_ERR_EMPTY = 5,
  SLC_ERR_VALIDATION = 6,
  SLC_ERR_UNSUPPORTED = 7,
  SLC_ERR_INTERNAL = 8,
  SLC_ERR_BUFFER = 9
} slc_status;

#define SLC_NUM_CLASSES 8

SLC_API const char* slc_version(void);
SLC_API const char* slc_status_name(slc_status status);
SLC_API const char* slc_last_error(void);
/* Class name for index 0..7 in model output order, or NULL. */
SLC_API const char* slc_class_name(size_t index);

/* ---- configuration ------------------------------------------------------ */

typedef struct slc_config slc_config;

SLC_API slc_status slc_config_new(slc_config** out);
SLC_API slc_status slc_config_load(const char* path, slc_config** out);
SLC_API slc_status slc_config_parse(const char* text, slc_config** out);
SLC_API slc_status slc_config_set(slc_config* cfg, const char* key, const char* value);
SLC_API slc_status slc_config_get(const slc_config* cfg, const char* key, char* buf, size_t cap,
                                  size_t* needed);
SLC_API slc_status slc_config_serialize(const slc_config* cfg, char* buf, size_t cap,
                                        size_t* needed);
SLC_API slc_status slc_config_save(const slc_config* cfg, const char* path);
/* Every key with its default and meaning, one per line. */
SLC_API slc_status slc_config_describe(char* buf, size_t cap, size_t* needed);
SLC_API slc_status slc_config_run_name(const slc_config* cfg, char* buf, size_t cap,
                                       size_t* needed);
SLC_API void slc_config_free(slc_config* cfg);

/* ---- pipeline ----------------------------------------------------------- */

typedef struct slc_pipeline slc_pipeline;
typedef void (*slc_log_fn)(const char* line, void* user);

/* Opens (creating if needed) a run directory and takes its lock. With
 * run_dir NULL the directory is <run_root>/<config run name>. */
SLC_API slc_status slc_pipeline_open(const slc_config* cfg, const char* run_root,
                                     const char* run_dir, slc_log_fn log, void* user,
                                     slc_pipeline** out);
SLC_API slc_status slc_pipeline_run_dir(const slc_pipeline* p, char* buf, size_t cap,
                                        size_t* needed);
/* stage: ingest | preprocess | segment | augment | train | crossval | evaluate */
SLC_API slc_status slc_pipeline_run(slc_pipeline* p, const char* stage);
/* Like running `evaluate`, with an explicit weights file (NULL = default). */
SLC_API slc_status slc_pipeline_evaluate(slc_pipeline* p, const char* weights_path);
/* Writes `CLASS,p0,...,p7`. weights_path NULL uses the best
 * cross-validation checkpoint. */
SLC_API slc_status slc_pipeline_predict(slc_pipeline* p, const char* image_path,
                                        const char* weights_path, char* buf, size_t cap,
                                        size_t* needed);
SLC_API void slc_pipeline_free(slc_pipeline* p);

/* ---- images ------------------------------------------------------------- */

typedef struct slc_image slc_image;

SLC_API slc_status slc_image_load(const char* path, slc_image** out);
/* Copies height*width*channels interleaved bytes. */
SLC_API slc_status slc_image_from_pixels(size_t height, size_t width, size_t channels,
                                         const uint8_t* pixels, slc_image** out);
SLC_API slc_status slc_image_save_png(const slc_image* img, const char* path);
SLC_API slc_status slc_image_info(const slc_image* img, size_t* height, size_t* width,
                                  size_t* channels);
/* Borrowed pointer valid until the image is freed. */
SLC_API const uint8_t* slc_image_pixels(const slc_image* img);
SLC_API slc_status slc_image_resize(const slc_image* img, size_t height, size_t width,
                                    slc_image** out);
SLC_API slc_status slc_image_grayscale(const slc_image* img, slc_image** out);
SLC_API slc_status slc_image_piecewise(const slc_image* img, uint8_t r1, uint8_t s1, uint8_t r2,
                                       uint8_t s2, slc_image** out);
SLC_API slc_status slc_image_shades_of_gray(const slc_image* img, double p, slc_image** out);
SLC_API slc_status slc_image_crop_black_border(const slc_image* img, uint8_t threshold,
                                               slc_image** out);
/* Threshold segmentation; the mask comes back as a 0/255 gray image. */
SLC_API slc_status slc_image_threshold_segment(const slc_image* img, uint8_t r1, uint8_t s1,
                                               uint8_t r2, uint8_t s2, uint8_t threshold,
                                               int invert, slc_image** out);
SLC_API void slc_image_free(slc_image* img);

/* ---- models ------------------------------------------------------------- */

typedef struct slc_model slc_model;

/* kind: m1 | m2-one | m2-dual | unet. input_size 0 = default. Weights are
 * Xavier-initialised from seed. For unet, input_size must be a multiple of
 * 8 (depth 3, base 8, 3 channels). */
SLC_API slc_status slc_model_build(const char* kind, size_t input_size, uint64_t seed,
                                   slc_model** out);
SLC_API slc_status slc_model_parameter_count(const slc_model* m, uint64_t* count);
SLC_API slc_status slc_model_input_count(const slc_model* m, size_t* count);
/* Shape of input i as channels, height, width. */
SLC_API slc_status slc_model_input_shape(const slc_model* m, size_t i, size_t shape[3]);
SLC_API slc_status slc_model_output_size(const slc_model* m, size_t* size);
/* Human-readable layer table. */
SLC_API slc_status slc_model_table(const slc_model* m, char* buf, size_t cap, size_t* needed);
/* inputs[i] points at the [C,H,W] f32 values of input i; `out` receives
 * output_size values. */
SLC_API slc_status slc_model_forward(const slc_model* m, const float* const* inputs,
                                     size_t input_count, float* out, size_t out_len);
SLC_API slc_status slc_model_save_weights(const slc_model* m, const char* path);
/* Replaces the weights; names and shapes must match the architecture. */
SLC_API slc_status slc_model_load_weights(slc_model* m, const char* path);
/* 1 when both models hold bit-identical weights, else 0. */
SLC_API slc_status slc_model_weights_equal(const slc_model* a, const slc_model* b, int* equal);
SLC_API void slc_model_free(slc_model* m);

/* ---- data helpers ------------------------------------------------------- */

/* Synthetic ISIC-layout dataset: <out_dir>/labels.csv and <out_dir>/images. */
SLC_API slc_status slc_synth_dataset(const char* out_dir, size_t per_class, size_t size,
                                     uint64_t seed, int with_masks);
/* Balancing arithmetic for 8 class counts: synthesize[i] = max(0, target - counts[i]). */
SLC_API slc_status slc_balance_plan(const size_t counts[SLC_NUM_CLASSES], size_t target,
                                    uint64_t seed, size_t synthesize[SLC_NUM_CLASSES],
                                    size_t* total);

#ifdef __cplusplus
}
#endif

#endif /* SLC_SLC_H */
