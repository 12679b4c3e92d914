#include "dataset.hpp"

#include <charconv>
#include <set>

#include "csv.hpp"
#include "error.hpp"

namespace slc::data {

namespace fs = std::filesystem;

std::array<std::size_t, models::kNumClasses> DatasetManifest::counts() const {
  std::array<std::size_t, models::kNumClasses> c{};
  for (const auto& e : entries) ++c.at(e.label);
  return c;
}

std::string DatasetManifest::counts_report() const {
  const auto c = counts();
  std::string out;
  for (std::size_t i = 0; i < c.size(); ++i)
    out += std::string(models::kClassNames[i]) + " " + std::to_string(c[i]) + "\n";
  out += "total " + std::to_string(entries.size()) + "\n";
  return out;
}

std::optional<fs::path> find_image(const fs::path& dir, const std::string& id) {
  for (const char* ext : {".jpg", ".jpeg", ".png", ".JPG", ".PNG"}) {
    fs::path p = dir / (id + ext);
    if (fs::is_regular_file(p)) return p;
  }
  return std::nullopt;
}

namespace {

std::optional<fs::path> find_mask(const fs::path& dir, const std::string& id) {
  for (const char* suffix : {"_segmentation.png", "_mask.png"}) {
    fs::path p = dir / (id + suffix);
    if (fs::is_regular_file(p)) return p;
  }
  return std::nullopt;
}

std::string where(std::size_t row) { return "labels row " + std::to_string(row); }

// ISIC files use 0/1 as well as 0.0/1.0.
int parse_flag(const std::string& s, std::size_t row, const std::string& column) {
  double v = 0.0;
  auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size() || (v != 0.0 && v != 1.0))
    fail(ErrorCode::Format,
         where(row) + ": column " + column + " holds '" + s + "', expected 0 or 1");
  return v == 1.0;
}

}  // namespace

DatasetManifest ingest(const fs::path& labels_csv, const fs::path& image_dir) {
  require(fs::is_regular_file(labels_csv), ErrorCode::Io,
          "labels file not found: " + labels_csv.string());
  require(fs::is_directory(image_dir), ErrorCode::Io,
          "image directory not found: " + image_dir.string());
  const auto rows = csv::read(labels_csv);
  require(!rows.empty(), ErrorCode::Empty, "labels file is empty: " + labels_csv.string());

  const auto& header = rows[0];
  bool header_ok = header.size() >= 9 && header[0] == "image";
  for (std::size_t c = 0; header_ok && c < kIsicColumns.size(); ++c)
    header_ok = header[c + 1] == kIsicColumns[c];
  const bool has_unk = header_ok && header.size() == 10 && header[9] == "UNK";
  header_ok = header_ok && (header.size() == 9 || has_unk);
  require(header_ok, ErrorCode::Format,
          "labels header must be image,MEL,NV,BCC,AK,BKL,DF,VASC,SCC[,UNK]");
  require(rows.size() > 1, ErrorCode::Empty, "labels file has no data rows");

  DatasetManifest m;
  std::set<std::string> seen;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    require(row.size() == header.size(), ErrorCode::Format,
            where(r) + ": expected " + std::to_string(header.size()) + " fields, got " +
                std::to_string(row.size()));
    const std::string& id = row[0];
    require(!id.empty(), ErrorCode::Format, where(r) + ": empty image id");
    require(seen.insert(id).second, ErrorCode::Validation,
            where(r) + ": duplicate image id '" + id + "'");
    int ones = 0;
    std::size_t label = 0;
    for (std::size_t c = 0; c < kIsicColumns.size(); ++c) {
      if (parse_flag(row[c + 1], r, std::string(kIsicColumns[c]))) {
        ++ones;
        label = c;
      }
    }
    if (has_unk && parse_flag(row[9], r, "UNK"))
      fail(ErrorCode::Validation, where(r) + " ('" + id + "'): UNK label is not one of the 8 classes");
    require(ones == 1, ErrorCode::Validation,
            where(r) + " ('" + id + "'): expected exactly one class marked 1, found " +
                std::to_string(ones));
    auto img = find_image(image_dir, id);
    require(img.has_value(), ErrorCode::Io,
            where(r) + ": image '" + id + "' not found in " + image_dir.string());
    m.entries.push_back({id, *img, label, find_mask(image_dir, id)});
  }
  return m;
}

void write_manifest(const DatasetManifest& m, const fs::path& path) {
  std::vector<csv::Row> rows{{"id", "image", "class", "mask"}};
  for (const auto& e : m.entries)
    rows.push_back({e.id, e.image.string(), std::string(models::kClassNames.at(e.label)),
                    e.mask ? e.mask->string() : std::string()});
  csv::write(path, rows);
}

DatasetManifest read_manifest(const fs::path& path) {
  require(fs::is_regular_file(path), ErrorCode::Io, "manifest not found: " + path.string());
  const auto rows = csv::read(path);
  require(!rows.empty() && rows[0] == csv::Row{"id", "image", "class", "mask"}, ErrorCode::Format,
          path.string() + ": not a dataset manifest");
  DatasetManifest m;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    require(row.size() == 4, ErrorCode::Format,
            path.string() + " row " + std::to_string(r) + ": expected 4 fields");
    DatasetEntry e{row[0], row[1], models::class_index(row[2]), std::nullopt};
    if (!row[3].empty()) e.mask = fs::path(row[3]);
    m.entries.push_back(std::move(e));
  }
  return m;
}

}  // namespace slc::data
