#include "synth.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "csv.hpp"
#include "error.hpp"
#include "image_io.hpp"
#include "models.hpp"

namespace slc::synth {

namespace fs = std::filesystem;

namespace {

// Dark, mutually distinct lesion colours (luma below 100, so the default
// brighten-and-threshold segmenter still separates them from skin).
constexpr std::array<std::array<double, 3>, models::kNumClasses> kPalette = {{
    {120, 20, 20},
    {20, 90, 20},
    {20, 20, 160},
    {110, 60, 10},
    {90, 20, 110},
    {20, 90, 110},
    {60, 60, 60},
    {140, 70, 100},
}};

constexpr std::array<double, 3> kSkin = {215, 175, 150};

}  // namespace

LesionSample lesion(std::size_t label, const LesionOptions& opt, SeededRng& rng) {
  require(label < models::kNumClasses, ErrorCode::InvalidArgument, "class index out of range");
  require(opt.size >= 8, ErrorCode::InvalidArgument, "synthetic image size must be >= 8");
  const double s = static_cast<double>(opt.size);
  const double r = s * rng.uniform(0.18, 0.3);
  const double aspect = 1.0 + rng.uniform(-0.25, 0.25);
  const double rx = r * std::sqrt(aspect), ry = r / std::sqrt(aspect);
  const double angle = rng.uniform(0.0, std::numbers::pi);
  const double cx = s / 2 + rng.uniform(-0.1, 0.1) * s;
  const double cy = s / 2 + rng.uniform(-0.1, 0.1) * s;
  std::array<double, 3> fg{}, bg{};
  for (std::size_t c = 0; c < 3; ++c) {
    fg[c] = kPalette[label][c] + rng.uniform(-opt.jitter, opt.jitter);
    bg[c] = kSkin[c] + rng.uniform(-opt.jitter, opt.jitter);
  }

  LesionSample out{imaging::Image(opt.size, opt.size, 3), imaging::Mask(opt.size, opt.size),
                   label};
  const double ca = std::cos(angle), sa = std::sin(angle);
  const double field = s / 2;
  for (std::size_t y = 0; y < opt.size; ++y) {
    for (std::size_t x = 0; x < opt.size; ++x) {
      const double dx = x + 0.5 - cx, dy = y + 0.5 - cy;
      const double u = (dx * ca + dy * sa) / rx, v = (-dx * sa + dy * ca) / ry;
      const bool inside = u * u + v * v <= 1.0;
      const double fx = x + 0.5 - field, fy = y + 0.5 - field;
      const bool dark = opt.vignette && fx * fx + fy * fy > field * field;
      out.mask.at(y, x) = inside && !dark;
      for (std::size_t c = 0; c < 3; ++c) {
        const double noise = opt.noise * rng.normal();
        out.image.at(y, x, c) = dark ? 0 : imaging::to_u8((inside ? fg[c] : bg[c]) + noise);
      }
    }
  }
  return out;
}

std::vector<LesionSample> lesion_set(std::size_t per_class, const LesionOptions& opt,
                                     SeededRng rng) {
  std::vector<LesionSample> out;
  out.reserve(per_class * models::kNumClasses);
  for (std::size_t c = 0; c < models::kNumClasses; ++c) {
    SeededRng crng = rng.derive(c);
    for (std::size_t i = 0; i < per_class; ++i) {
      SeededRng r = crng.derive(i);
      out.push_back(lesion(c, opt, r));
    }
  }
  return out;
}

fs::path write_isic_layout(const fs::path& out, std::size_t per_class, const LesionOptions& opt,
                           std::uint64_t seed, bool with_masks) {
  require(per_class >= 1, ErrorCode::InvalidArgument, "need at least one image per class");
  const fs::path images = out / "images";
  fs::create_directories(images);
  const auto set = lesion_set(per_class, opt, SeededRng(seed));
  std::vector<csv::Row> rows{{"image", "MEL", "NV", "BCC", "AK", "BKL", "DF", "VASC", "SCC"}};
  for (std::size_t i = 0; i < set.size(); ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "SYN_%07zu", i);
    imaging::save_png(set[i].image, images / (std::string(id) + ".png"));
    if (with_masks) imaging::save_mask_png(set[i].mask, images / (std::string(id) + "_mask.png"));
    csv::Row row{id};
    for (std::size_t c = 0; c < models::kNumClasses; ++c)
      row.push_back(c == set[i].label ? "1.0" : "0.0");
    rows.push_back(std::move(row));
  }
  const fs::path labels = out / "labels.csv";
  csv::write(labels, rows);
  return labels;
}

}  // namespace slc::synth
