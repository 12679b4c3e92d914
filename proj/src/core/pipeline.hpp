#pragma once

// Command-line workflow over a run directory. Each stage reads the manifest
// of the stage before it and writes its own directory holding a manifest
// and a log:
//
//   ingest/      manifest.csv counts.txt
//   preprocess/  manifest.csv images/
//   segment/     manifest.csv masks/ [unet.slcw]
//   augment/     manifest.csv images/
//   train/       weights.slcw metrics.json metrics.txt
//   crossval/    best.slcw metrics.json metrics.txt folds.csv
//   evaluate/    metrics.json metrics.txt

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "config.hpp"
#include "image.hpp"
#include "metrics.hpp"
#include "training.hpp"

namespace slc::pipeline {

enum class Stage { Ingest, Preprocess, Segment, Augment, Train, Crossval, Evaluate };

Stage parse_stage(std::string_view s);
const char* stage_name(Stage s);

/// `<root>/<run_name(cfg)>`
std::filesystem::path run_dir_for(const config::RunConfig& cfg, const std::filesystem::path& root);

/// Advisory exclusive lock on `<dir>/.lock`, held for the object's lifetime.
class RunLock {
 public:
  explicit RunLock(const std::filesystem::path& dir);
  ~RunLock();
  RunLock(const RunLock&) = delete;
  RunLock& operator=(const RunLock&) = delete;

 private:
  int fd_ = -1;
};

/// Crop, colour-correct and resize one decoded image the way the preprocess
/// stage does. `rect` receives the crop rectangle when not null.
imaging::Image preprocess_image(const imaging::Image& img, const config::RunConfig& cfg,
                                imaging::Rect* rect = nullptr);

/// Model inputs for one preprocessed image and its mask.
std::vector<Tensor> model_inputs(const imaging::Image& img, const imaging::Mask& mask,
                                 const config::RunConfig& cfg);

/// Samples listed in an augment manifest, loaded on demand.
class ManifestDataset final : public train::Dataset {
 public:
  struct Row {
    std::filesystem::path image;
    std::filesystem::path mask;
    std::size_t label = 0;
    std::size_t group = 0;
  };

  ManifestDataset(std::vector<Row> rows, config::RunConfig cfg)
      : rows_(std::move(rows)), cfg_(std::move(cfg)) {}

  std::size_t size() const override { return rows_.size(); }
  std::size_t label(std::size_t i) const override { return rows_.at(i).label; }
  train::Sample get(std::size_t i) const override;
  const Row& row(std::size_t i) const { return rows_.at(i); }
  std::vector<std::size_t> groups() const;

 private:
  std::vector<Row> rows_;
  config::RunConfig cfg_;
};

class Pipeline {
 public:
  /// Creates the run directory, takes its lock and records the config. A
  /// directory created with a different config is refused.
  Pipeline(config::RunConfig cfg, const std::filesystem::path& run_dir,
           train::LogFn log = {});

  const std::filesystem::path& run_dir() const noexcept { return dir_; }
  const config::RunConfig& config() const noexcept { return cfg_; }

  void run(Stage s);
  void ingest();
  void preprocess();
  void segment();
  void augment();
  train::MetricsReport train();
  train::MetricsReport crossval();
  /// Scores `weights` (default: the best cross-validation checkpoint) on
  /// every preprocessed original.
  train::MetricsReport evaluate(const std::optional<std::filesystem::path>& weights = {});
  /// `CLASS,p0,...,p7` for one image file.
  std::string predict(const std::filesystem::path& image,
                      const std::optional<std::filesystem::path>& weights = {});

  std::filesystem::path stage_dir(Stage s) const { return dir_ / stage_name(s); }

 private:
  class StageLog;

  ManifestDataset training_set() const;
  std::filesystem::path default_weights() const;

  config::RunConfig cfg_;
  std::filesystem::path dir_;
  train::LogFn log_;
  std::optional<RunLock> lock_;
};

}  // namespace slc::pipeline
