#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "image.hpp"
#include "rng.hpp"

namespace slc::augment {

using imaging::Image;
using imaging::Mask;
using imaging::Rect;

enum class AugmentKind { Rotate, Scale, FlipH, FlipV, Shear, Contrast, Brightness, Crop, Cutout };

const char* augment_kind_name(AugmentKind kind);

/// A fully resolved augmentation; applying it involves no randomness.
struct AugmentOp {
  AugmentKind kind = AugmentKind::FlipH;
  /// degrees (rotate), factor (scale, shear), gain (contrast), delta (brightness)
  double value = 0.0;
  /// crop / cutout region
  Rect rect{};

  static AugmentOp rotate(double degrees) { return {AugmentKind::Rotate, degrees, {}}; }
  static AugmentOp scale(double factor) { return {AugmentKind::Scale, factor, {}}; }
  static AugmentOp flip_h() { return {AugmentKind::FlipH, 0.0, {}}; }
  static AugmentOp flip_v() { return {AugmentKind::FlipV, 0.0, {}}; }
  static AugmentOp shear(double factor) { return {AugmentKind::Shear, factor, {}}; }
  static AugmentOp contrast(double gain) { return {AugmentKind::Contrast, gain, {}}; }
  static AugmentOp brightness(double delta) { return {AugmentKind::Brightness, delta, {}}; }
  static AugmentOp crop(Rect r) { return {AugmentKind::Crop, 0.0, r}; }
  static AugmentOp cutout(Rect r) { return {AugmentKind::Cutout, 0.0, r}; }

  friend bool operator==(const AugmentOp&, const AugmentOp&) = default;
};

using OpChain = std::vector<AugmentOp>;

void validate(const AugmentOp& op, std::size_t height, std::size_t width);

/// Output has the input's dimensions. Rotation, scaling and shear sample
/// bilinearly about the image centre and fill uncovered pixels with black;
/// crop resizes the region back to full size; cutout zeroes the region.
Image apply_augment(const Image& img, const AugmentOp& op);
/// Geometric ops move the mask with nearest-neighbour sampling; photometric
/// ops and cutout leave it unchanged.
Mask apply_augment(const Mask& mask, const AugmentOp& op);
Image apply_chain(const Image& img, const OpChain& chain);
Mask apply_chain(const Mask& mask, const OpChain& chain);

/// `op:param|op:param`; rectangles are `x,y,w,h`, flips take no parameter.
std::string serialize_chain(const OpChain& chain);
OpChain parse_chain(const std::string& text);

/// Sampling ranges for drawn augmentations.
struct AugmentRanges {
  double rotate_degrees = 45.0;
  double scale_min = 0.8;
  double scale_max = 1.2;
  double shear = 0.2;
  double contrast_min = 0.7;
  double contrast_max = 1.3;
  double brightness = 30.0;
  /// Crop keeps this fraction range of each side.
  double crop_min = 0.75;
  double crop_max = 0.95;
  /// Cutout hole size as a fraction of each side.
  double cutout_min = 0.05;
  double cutout_max = 0.25;
  std::size_t max_chain = 3;

  friend bool operator==(const AugmentRanges&, const AugmentRanges&) = default;
};

AugmentOp draw_op(AugmentKind kind, const AugmentRanges& ranges, SeededRng& rng,
                  std::size_t height, std::size_t width);
/// 1..max_chain ops drawn uniformly from the balancing set (rotate, crop,
/// scale, flip_h, flip_v, shear, contrast).
OpChain draw_chain(const AugmentRanges& ranges, SeededRng& rng, std::size_t height,
                   std::size_t width);

// --- class balancing -------------------------------------------------------

struct PlannedItem {
  std::string src_id;
  /// Empty for an original image.
  OpChain chain;
  std::uint64_t seed = 0;
};

struct ClassPlan {
  std::size_t class_index = 0;
  std::size_t source_count = 0;
  std::size_t target = 0;
  std::size_t synthesize = 0;
  std::vector<PlannedItem> items;
};

struct BalancePlan {
  std::size_t target = 0;
  std::uint64_t seed = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<ClassPlan> classes;

  std::size_t total() const;
};

/// For each class below `target`, keeps every source and synthesizes
/// target - count augmented copies, cycling through a seeded shuffle of the
/// sources; classes at or above `target` are subsampled uniformly without
/// replacement. `height`/`width` bound the crop and cutout rectangles.
BalancePlan plan_balance(const std::map<std::size_t, std::vector<std::string>>& ids_by_class,
                         std::size_t target, SeededRng rng, const AugmentRanges& ranges = {},
                         std::size_t height = 256, std::size_t width = 256);
/// Same, with ids generated as `<CLASS>_<n>`.
BalancePlan plan_balance(const std::map<std::size_t, std::size_t>& class_counts,
                         std::size_t target, SeededRng rng, const AugmentRanges& ranges = {},
                         std::size_t height = 256, std::size_t width = 256);

struct ManifestRow {
  std::string out_path;
  std::string src_id;
  std::string class_name;
  std::string op_chain;
  std::uint64_t seed = 0;

  friend bool operator==(const ManifestRow&, const ManifestRow&) = default;
};

struct SourceRecord {
  std::filesystem::path image;
  std::optional<std::filesystem::path> mask;
};

/// Where a synthesized item is written: <out_dir>/<CLASS>/<src_id>_aug<n>.png
std::filesystem::path augmented_path(const std::filesystem::path& out_dir,
                                     std::string_view class_name, const std::string& src_id,
                                     std::size_t n);
/// Companion mask path for an augmented image: foo.png -> foo_mask.png
std::filesystem::path companion_mask_path(const std::filesystem::path& image_path);

/// Manifest the plan produces, without touching the file system. Original
/// rows point at the source image.
std::vector<ManifestRow> plan_manifest(const BalancePlan& plan,
                                       const std::map<std::string, SourceRecord>& sources,
                                       const std::filesystem::path& out_dir);

/// Writes every synthesized image (and its mask when the source has one)
/// and returns the manifest.
std::vector<ManifestRow> execute_plan(const BalancePlan& plan,
                                      const std::map<std::string, SourceRecord>& sources,
                                      const std::filesystem::path& out_dir);

void write_manifest(const std::vector<ManifestRow>& rows, const std::filesystem::path& path);
std::vector<ManifestRow> read_manifest(const std::filesystem::path& path);

}  // namespace slc::augment
