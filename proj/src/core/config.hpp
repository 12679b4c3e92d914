#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "augment.hpp"
#include "image.hpp"
#include "models.hpp"
#include "training.hpp"

namespace slc::config {

enum class SegmentMethod { Threshold, UNet };

/// Every run setting, with the defaults documented in `describe()`.
struct RunConfig {
  std::uint64_t seed = 0;

  // data
  std::string labels_csv;
  std::string image_dir;

  // preprocessing
  bool crop_border = true;
  std::uint8_t crop_threshold = 10;
  bool color_constancy = true;
  double minkowski_p = 6.0;
  imaging::PiecewiseParams piecewise{};
  /// 0 selects the model's native size (512 for m1, 256 otherwise).
  std::size_t image_size = 0;

  // segmentation
  SegmentMethod segment_method = SegmentMethod::Threshold;
  std::uint8_t segment_threshold = 128;
  bool segment_invert = true;
  std::size_t unet_depth = 3;
  std::size_t unet_base = 8;
  std::size_t unet_size = 64;
  std::size_t unet_epochs = 30;
  std::size_t unet_samples = 50;

  // augmentation / balancing
  bool balance = true;
  std::size_t balance_target = 2000;
  augment::AugmentRanges ranges{};

  // model and training
  models::ModelKind model = models::ModelKind::DualPath;
  bool use_mask = false;  // m1 only: train on masked images
  std::size_t folds = 10;
  /// 0 selects 20 for m1 and 2 otherwise.
  std::size_t epochs = 0;
  std::size_t batch_size = 75;
  train::AdamConfig adam{};
  double validation_fraction = 0.1;

  std::size_t resolved_image_size() const;
  std::size_t resolved_epochs() const;
  train::TrainOptions train_options() const;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

void validate(const RunConfig& cfg);

/// Sets one key from its text form; unknown keys and unparsable values throw.
void set(RunConfig& cfg, const std::string& key, const std::string& value);
std::string get(const RunConfig& cfg, const std::string& key);
std::vector<std::string> keys();
/// One line per key: `key = default  # meaning`.
std::string describe();

/// `key = value` lines in a fixed key order; doubles are written in the
/// shortest form that reads back to the same value.
std::string serialize(const RunConfig& cfg);
/// Blank lines and `#` comments are ignored; later keys override earlier.
RunConfig parse(const std::string& text);
RunConfig load(const std::filesystem::path& path);
void save(const RunConfig& cfg, const std::filesystem::path& path);

/// FNV-1a of the serialized config without the seed.
std::uint64_t hash(const RunConfig& cfg);
/// `<16 hex digits of hash>-s<seed>`
std::string run_name(const RunConfig& cfg);

const char* segment_method_name(SegmentMethod m);

}  // namespace slc::config
