#pragma once

// Synthetic dermoscopy-like data: a dark ellipse on skin tone whose colour
// identifies the class. Classes are separable by colour alone, which makes
// the set useful for smoke-testing the classifiers end to end.

#include <cstdint>
#include <filesystem>
#include <vector>

#include "image.hpp"
#include "rng.hpp"

namespace slc::synth {

struct LesionSample {
  imaging::Image image;
  imaging::Mask mask;
  std::size_t label = 0;
};

struct LesionOptions {
  std::size_t size = 64;
  double noise = 6.0;
  /// Per-sample colour jitter (+- intensity units).
  double jitter = 10.0;
  /// Black corners outside an inscribed circle, like a dermoscope field.
  bool vignette = false;
};

LesionSample lesion(std::size_t label, const LesionOptions& opt, SeededRng& rng);

/// `per_class` samples of each of the 8 classes, ordered by class then index.
std::vector<LesionSample> lesion_set(std::size_t per_class, const LesionOptions& opt,
                                     SeededRng rng);

/// Writes <out>/images/<id>.png, <out>/images/<id>_mask.png when
/// `with_masks`, and <out>/labels.csv in the ISIC 2019 layout. Returns the
/// labels path.
std::filesystem::path write_isic_layout(const std::filesystem::path& out, std::size_t per_class,
                                        const LesionOptions& opt, std::uint64_t seed,
                                        bool with_masks = false);

}  // namespace slc::synth
