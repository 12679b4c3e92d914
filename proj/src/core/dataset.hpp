#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "models.hpp"

namespace slc::data {

/// ISIC 2019 ground-truth columns in file order, and the class each maps to.
inline constexpr std::array<std::string_view, models::kNumClasses> kIsicColumns = {
    "MEL", "NV", "BCC", "AK", "BKL", "DF", "VASC", "SCC"};

struct DatasetEntry {
  std::string id;
  std::filesystem::path image;
  std::size_t label = 0;
  std::optional<std::filesystem::path> mask;
};

struct DatasetManifest {
  std::vector<DatasetEntry> entries;

  std::array<std::size_t, models::kNumClasses> counts() const;
  /// One line per class, `NAME count`, then `total N`.
  std::string counts_report() const;
};

/// Finds <dir>/<id>.jpg, .jpeg, .png (first match). A mask is picked up from
/// <dir>/<id>_segmentation.png or <dir>/<id>_mask.png when present.
std::optional<std::filesystem::path> find_image(const std::filesystem::path& dir,
                                                const std::string& id);

/// Reads an ISIC-layout labels file (`image,MEL,NV,BCC,AK,BKL,DF,VASC,SCC`,
/// optionally a trailing UNK column that must be 0). Rows must be one-hot;
/// violations name the data row (1-based, header excluded).
DatasetManifest ingest(const std::filesystem::path& labels_csv,
                       const std::filesystem::path& image_dir);

/// `id,image,class,mask` with class names.
void write_manifest(const DatasetManifest& m, const std::filesystem::path& path);
DatasetManifest read_manifest(const std::filesystem::path& path);

}  // namespace slc::data
