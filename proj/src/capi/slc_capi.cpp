#include "slc/slc.h"

#include <cstring>
#include <exception>
#include <memory>
#include <new>
#include <string>

#include "augment.hpp"
#include "config.hpp"
#include "error.hpp"
#include "image.hpp"
#include "image_io.hpp"
#include "models.hpp"
#include "pipeline.hpp"
#include "segmentation.hpp"
#include "synth.hpp"
#include "weights_io.hpp"

struct slc_config {
  slc::config::RunConfig cfg;
};

struct slc_pipeline {
  std::unique_ptr<slc::pipeline::Pipeline> p;
};

struct slc_image {
  slc::imaging::Image img;
};

struct slc_model {
  slc::nn::NetworkSpec spec;
  slc::nn::Weights weights;
};

namespace {

thread_local std::string g_last_error;

slc_status to_status(slc::ErrorCode c) {
  switch (c) {
    case slc::ErrorCode::InvalidArgument: return SLC_ERR_INVALID_ARGUMENT;
    case slc::ErrorCode::Shape: return SLC_ERR_SHAPE;
    case slc::ErrorCode::Io: return SLC_ERR_IO;
    case slc::ErrorCode::Format: return SLC_ERR_FORMAT;
    case slc::ErrorCode::Empty: return SLC_ERR_EMPTY;
    case slc::ErrorCode::Validation: return SLC_ERR_VALIDATION;
    case slc::ErrorCode::Unsupported: return SLC_ERR_UNSUPPORTED;
    case slc::ErrorCode::Internal: return SLC_ERR_INTERNAL;
  }
  return SLC_ERR_INTERNAL;
}

template <typename F>
slc_status guarded(F&& f) {
  try {
    g_last_error.clear();
    return f();
  } catch (const slc::Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const std::filesystem::filesystem_error& e) {
    g_last_error = e.what();
    return SLC_ERR_IO;
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return SLC_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return SLC_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown failure";
    return SLC_ERR_INTERNAL;
  }
}

slc_status invalid(const char* what) {
  g_last_error = what;
  return SLC_ERR_INVALID_ARGUMENT;
}

#define SLC_CHECK_ARG(cond)                                          \
  do {                                                               \
    if (!(cond)) return invalid("invalid argument: " #cond);        \
  } while (0)

slc_status copy_out(const std::string& s, char* buf, std::size_t cap, std::size_t* needed) {
  if (needed) *needed = s.size() + 1;
  if (buf && cap > 0) {
    const std::size_t n = std::min(cap - 1, s.size());
    std::memcpy(buf, s.data(), n);
    buf[n] = '\0';
  }
  if (cap < s.size() + 1) {
    if (!buf && cap == 0 && needed) return SLC_OK;  // size query
    g_last_error = "output buffer too small: need " + std::to_string(s.size() + 1) + " bytes";
    return SLC_ERR_BUFFER;
  }
  return SLC_OK;
}

slc_status new_image(slc::imaging::Image img, slc_image** out) {
  *out = new slc_image{std::move(img)};
  return SLC_OK;
}

slc::imaging::PiecewiseParams piecewise(uint8_t r1, uint8_t s1, uint8_t r2, uint8_t s2) {
  slc::imaging::PiecewiseParams p{r1, s1, r2, s2};
  slc::imaging::validate(p);
  return p;
}

}  // namespace

extern "C" {

SLC_API const char* slc_version(void) { return "1.0.0"; }

SLC_API const char* slc_status_name(slc_status s) {
  switch (s) {
    case SLC_OK: return "ok";
    case SLC_ERR_INVALID_ARGUMENT: return "invalid-argument";
    case SLC_ERR_SHAPE: return "shape";
    case SLC_ERR_IO: return "io";
    case SLC_ERR_FORMAT: return "format";
    case SLC_ERR_EMPTY: return "empty";
    case SLC_ERR_VALIDATION: return "validation";
    case SLC_ERR_UNSUPPORTED: return "unsupported";
    case SLC_ERR_INTERNAL: return "internal";
    case SLC_ERR_BUFFER: return "buffer";
  }
  return "unknown";
}

SLC_API const char* slc_last_error(void) { return g_last_error.c_str(); }

SLC_API const char* slc_class_name(size_t index) {
  if (index >= slc::models::kNumClasses) return nullptr;
  return slc::models::kClassNames[index].data();
}

// --- configuration ---------------------------------------------------------

SLC_API slc_status slc_config_new(slc_config** out) {
  SLC_CHECK_ARG(out);
  return guarded([&] {
    *out = new slc_config{};
    return SLC_OK;
  });
}

SLC_API slc_status slc_config_load(const char* path, slc_config** out) {
  SLC_CHECK_ARG(path && out);
  return guarded([&] {
    *out = new slc_config{slc::config::load(path)};
    return SLC_OK;
  });
}

SLC_API slc_status slc_config_parse(const char* text, slc_config** out) {
  SLC_CHECK_ARG(text && out);
  return guarded([&] {
    *out = new slc_config{slc::config::parse(text)};
    return SLC_OK;
  });
}

SLC_API slc_status slc_config_set(slc_config* cfg, const char* key, const char* value) {
  SLC_CHECK_ARG(cfg && key && value);
  return guarded([&] {
    slc::config::set(cfg->cfg, key, value);
    return SLC_OK;
  });
}

SLC_API slc_status slc_config_get(const slc_config* cfg, const char* key, char* buf, size_t cap,
                                  size_t* needed) {
  SLC_CHECK_ARG(cfg && key);
  return guarded([&] { return copy_out(slc::config::get(cfg->cfg, key), buf, cap, needed); });
}

SLC_API slc_status slc_config_serialize(const slc_config* cfg, char* buf, size_t cap,
                                        size_t* needed) {
  SLC_CHECK_ARG(cfg);
  return guarded([&] { return copy_out(slc::config::serialize(cfg->cfg), buf, cap, needed); });
}

SLC_API slc_status slc_config_save(const slc_config* cfg, const char* path) {
  SLC_CHECK_ARG(cfg && path);
  return guarded([&] {
    slc::config::save(cfg->cfg, path);
    return SLC_OK;
  });
}

SLC_API slc_status slc_config_describe(char* buf, size_t cap, size_t* needed) {
  return guarded([&] { return copy_out(slc::config::describe(), buf, cap, needed); });
}

SLC_API slc_status slc_config_run_name(const slc_config* cfg, char* buf, size_t cap,
                                       size_t* needed) {
  SLC_CHECK_ARG(cfg);
  return guarded([&] { return copy_out(slc::config::run_name(cfg->cfg), buf, cap, needed); });
}

SLC_API void slc_config_free(slc_config* cfg) { delete cfg; }

// --- pipeline --------------------------------------------------------------

SLC_API slc_status slc_pipeline_open(const slc_config* cfg, const char* run_root,
                                     const char* run_dir, slc_log_fn log, void* user,
                                     slc_pipeline** out) {
  SLC_CHECK_ARG(cfg && out && (run_root || run_dir));
  return guarded([&] {
    const std::filesystem::path dir =
        run_dir ? std::filesystem::path(run_dir)
                : slc::pipeline::run_dir_for(cfg->cfg, run_root);
    slc::train::LogFn fn;
    if (log) fn = [log, user](const std::string& line) { log(line.c_str(), user); };
    *out = new slc_pipeline{std::make_unique<slc::pipeline::Pipeline>(cfg->cfg, dir, fn)};
    return SLC_OK;
  });
}

SLC_API slc_status slc_pipeline_run_dir(const slc_pipeline* p, char* buf, size_t cap,
                                        size_t* needed) {
  SLC_CHECK_ARG(p);
  return guarded([&] { return copy_out(p->p->run_dir().string(), buf, cap, needed); });
}

SLC_API slc_status slc_pipeline_run(slc_pipeline* p, const char* stage) {
  SLC_CHECK_ARG(p && stage);
  return guarded([&] {
    p->p->run(slc::pipeline::parse_stage(stage));
    return SLC_OK;
  });
}

SLC_API slc_status slc_pipeline_evaluate(slc_pipeline* p, const char* weights_path) {
  SLC_CHECK_ARG(p);
  return guarded([&] {
    std::optional<std::filesystem::path> w;
    if (weights_path) w = weights_path;
    p->p->evaluate(w);
    return SLC_OK;
  });
}

SLC_API slc_status slc_pipeline_predict(slc_pipeline* p, const char* image_path,
                                        const char* weights_path, char* buf, size_t cap,
                                        size_t* needed) {
  SLC_CHECK_ARG(p && image_path);
  return guarded([&] {
    std::optional<std::filesystem::path> w;
    if (weights_path) w = weights_path;
    return copy_out(p->p->predict(image_path, w), buf, cap, needed);
  });
}

SLC_API void slc_pipeline_free(slc_pipeline* p) { delete p; }

// --- images ----------------------------------------------------------------

SLC_API slc_status slc_image_load(const char* path, slc_image** out) {
  SLC_CHECK_ARG(path && out);
  return guarded([&] { return new_image(slc::imaging::load_image(path), out); });
}

SLC_API slc_status slc_image_from_pixels(size_t height, size_t width, size_t channels,
                                         const uint8_t* pixels, slc_image** out) {
  SLC_CHECK_ARG(pixels && out);
  return guarded([&] {
    slc::imaging::Image img(height, width, channels);
    std::memcpy(img.pixels.data(), pixels, img.pixels.size());
    slc::imaging::validate(img);
    return new_image(std::move(img), out);
  });
}

SLC_API slc_status slc_image_save_png(const slc_image* img, const char* path) {
  SLC_CHECK_ARG(img && path);
  return guarded([&] {
    slc::imaging::save_png(img->img, path);
    return SLC_OK;
  });
}

SLC_API slc_status slc_image_info(const slc_image* img, size_t* height, size_t* width,
                                  size_t* channels) {
  SLC_CHECK_ARG(img);
  if (height) *height = img->img.height;
  if (width) *width = img->img.width;
  if (channels) *channels = img->img.channels;
  return SLC_OK;
}

SLC_API const uint8_t* slc_image_pixels(const slc_image* img) {
  return img ? img->img.pixels.data() : nullptr;
}

SLC_API slc_status slc_image_resize(const slc_image* img, size_t height, size_t width,
                                    slc_image** out) {
  SLC_CHECK_ARG(img && out);
  return guarded([&] { return new_image(slc::imaging::resize(img->img, height, width), out); });
}

SLC_API slc_status slc_image_grayscale(const slc_image* img, slc_image** out) {
  SLC_CHECK_ARG(img && out);
  return guarded([&] { return new_image(slc::imaging::to_grayscale(img->img), out); });
}

SLC_API slc_status slc_image_piecewise(const slc_image* img, uint8_t r1, uint8_t s1, uint8_t r2,
                                       uint8_t s2, slc_image** out) {
  SLC_CHECK_ARG(img && out);
  return guarded([&] {
    return new_image(slc::imaging::piecewise_linear(img->img, piecewise(r1, s1, r2, s2)), out);
  });
}

SLC_API slc_status slc_image_shades_of_gray(const slc_image* img, double p, slc_image** out) {
  SLC_CHECK_ARG(img && out);
  return guarded([&] { return new_image(slc::imaging::shades_of_gray(img->img, p), out); });
}

SLC_API slc_status slc_image_crop_black_border(const slc_image* img, uint8_t threshold,
                                               slc_image** out) {
  SLC_CHECK_ARG(img && out);
  return guarded(
      [&] { return new_image(slc::imaging::crop_black_border(img->img, threshold), out); });
}

SLC_API slc_status slc_image_threshold_segment(const slc_image* img, uint8_t r1, uint8_t s1,
                                               uint8_t r2, uint8_t s2, uint8_t threshold,
                                               int invert, slc_image** out) {
  SLC_CHECK_ARG(img && out);
  return guarded([&] {
    const auto m = slc::seg::threshold_segment(img->img, piecewise(r1, s1, r2, s2), threshold,
                                               invert != 0);
    return new_image(slc::imaging::mask_to_image(m), out);
  });
}

SLC_API void slc_image_free(slc_image* img) { delete img; }

// --- models ----------------------------------------------------------------

SLC_API slc_status slc_model_build(const char* kind, size_t input_size, uint64_t seed,
                                   slc_model** out) {
  SLC_CHECK_ARG(kind && out);
  return guarded([&] {
    slc::nn::NetworkSpec spec;
    if (std::strcmp(kind, "unet") == 0) {
      slc::seg::UNetConfig cfg;
      if (input_size) cfg.input_size = input_size;
      spec = slc::seg::build_unet(cfg);
    } else {
      spec = slc::models::build_model(slc::models::parse_model_kind(kind), input_size);
    }
    slc::SeededRng rng(seed);
    auto weights = slc::nn::init_weights(spec, rng);
    *out = new slc_model{std::move(spec), std::move(weights)};
    return SLC_OK;
  });
}

SLC_API slc_status slc_model_parameter_count(const slc_model* m, uint64_t* count) {
  SLC_CHECK_ARG(m && count);
  *count = m->spec.parameter_count();
  return SLC_OK;
}

SLC_API slc_status slc_model_input_count(const slc_model* m, size_t* count) {
  SLC_CHECK_ARG(m && count);
  *count = m->spec.inputs().size();
  return SLC_OK;
}

SLC_API slc_status slc_model_input_shape(const slc_model* m, size_t i, size_t shape[3]) {
  SLC_CHECK_ARG(m && shape);
  if (i >= m->spec.inputs().size()) return invalid("input index out of range");
  const auto& s = m->spec.layer(m->spec.inputs()[i]).output_shape;
  for (std::size_t k = 0; k < 3; ++k) shape[k] = s.at(k);
  return SLC_OK;
}

SLC_API slc_status slc_model_output_size(const slc_model* m, size_t* size) {
  SLC_CHECK_ARG(m && size);
  *size = slc::shape_numel(m->spec.output_shape());
  return SLC_OK;
}

SLC_API slc_status slc_model_table(const slc_model* m, char* buf, size_t cap, size_t* needed) {
  SLC_CHECK_ARG(m);
  return guarded([&] { return copy_out(m->spec.table(), buf, cap, needed); });
}

SLC_API slc_status slc_model_forward(const slc_model* m, const float* const* inputs,
                                     size_t input_count, float* out, size_t out_len) {
  SLC_CHECK_ARG(m && inputs && out);
  return guarded([&] {
    const auto& ids = m->spec.inputs();
    slc::require(input_count == ids.size(), slc::ErrorCode::Shape,
                 "model takes " + std::to_string(ids.size()) + " inputs, got " +
                     std::to_string(input_count));
    std::vector<slc::Tensor> xs;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      slc::require(inputs[i] != nullptr, slc::ErrorCode::InvalidArgument, "null input pointer");
      const auto& shape = m->spec.layer(ids[i]).output_shape;
      const std::size_t n = slc::shape_numel(shape);
      xs.emplace_back(shape, std::vector<float>(inputs[i], inputs[i] + n));
    }
    const slc::Tensor y = slc::nn::forward(m->spec, m->weights, xs);
    slc::require(out_len == y.size(), slc::ErrorCode::Shape,
                 "output buffer holds " + std::to_string(out_len) + " values, model produces " +
                     std::to_string(y.size()));
    std::memcpy(out, y.ptr(), y.size() * sizeof(float));
    return SLC_OK;
  });
}

SLC_API slc_status slc_model_save_weights(const slc_model* m, const char* path) {
  SLC_CHECK_ARG(m && path);
  return guarded([&] {
    slc::io::save_weights(m->weights, path);
    return SLC_OK;
  });
}

SLC_API slc_status slc_model_load_weights(slc_model* m, const char* path) {
  SLC_CHECK_ARG(m && path);
  return guarded([&] {
    auto w = slc::io::load_weights(path);
    slc::nn::check_weights(m->spec, w);
    m->weights = std::move(w);
    return SLC_OK;
  });
}

SLC_API slc_status slc_model_weights_equal(const slc_model* a, const slc_model* b, int* equal) {
  SLC_CHECK_ARG(a && b && equal);
  *equal = a->weights.bit_identical(b->weights) ? 1 : 0;
  return SLC_OK;
}

SLC_API void slc_model_free(slc_model* m) { delete m; }

// --- data helpers ----------------------------------------------------------

SLC_API slc_status slc_synth_dataset(const char* out_dir, size_t per_class, size_t size,
                                     uint64_t seed, int with_masks) {
  SLC_CHECK_ARG(out_dir);
  return guarded([&] {
    slc::synth::LesionOptions opt;
    opt.size = size;
    opt.vignette = true;
    slc::synth::write_isic_layout(out_dir, per_class, opt, seed, with_masks != 0);
    return SLC_OK;
  });
}

SLC_API slc_status slc_balance_plan(const size_t counts[SLC_NUM_CLASSES], size_t target,
                                    uint64_t seed, size_t synthesize[SLC_NUM_CLASSES],
                                    size_t* total) {
  SLC_CHECK_ARG(counts && synthesize);
  return guarded([&] {
    std::map<std::size_t, std::size_t> c;
    for (std::size_t i = 0; i < SLC_NUM_CLASSES; ++i) c[i] = counts[i];
    const auto plan = slc::augment::plan_balance(c, target, slc::SeededRng(seed));
    for (const auto& cp : plan.classes) synthesize[cp.class_index] = cp.synthesize;
    if (total) *total = plan.total();
    return SLC_OK;
  });
}

}  // extern "C"
