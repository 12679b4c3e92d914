#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "metrics.hpp"
#include "network.hpp"
#include "rng.hpp"

namespace slc::train {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  friend bool operator==(const AdamConfig&, const AdamConfig&) = default;
};

/// First and second moment buffers, one per parameter tensor.
struct AdamState {
  AdamConfig config;
  std::uint64_t t = 0;
  std::vector<Tensor> m;
  std::vector<Tensor> v;
};

AdamState make_adam_state(const nn::Weights& params, const AdamConfig& config = {});

/// One bias-corrected Adam update of every tensor from `grads`.
void adam_step(std::span<Tensor> params, std::span<const Tensor> grads, AdamState& state);
/// Same, reading each parameter's own gradient buffer.
void adam_step(nn::Weights& params, AdamState& state);

// --- folds -----------------------------------------------------------------

struct FoldPlan {
  std::size_t k = 0;
  /// sample index -> fold
  std::vector<std::size_t> assignment;
  /// counts[fold][class], in stratification units (groups when given)
  std::vector<std::vector<std::size_t>> counts;

  std::vector<std::size_t> validation_indices(std::size_t fold) const;
  std::vector<std::size_t> training_indices(std::size_t fold) const;
};

/// Shuffles each class with `rng` and deals it round-robin over k folds.
/// When `groups` is non-empty, samples sharing a group id (an image and its
/// augmented derivatives) are dealt as one unit and land in the same fold.
FoldPlan make_stratified_folds(std::span<const std::size_t> labels, std::size_t k, SeededRng rng,
                               std::span<const std::size_t> groups = {});

struct FoldAudit {
  bool partition = false;    // every sample in exactly one valid fold
  bool stratified = false;   // per-class counts across folds differ by <= 1
  bool groups_intact = false;  // no group split across folds
  std::vector<std::string> problems;

  bool ok() const { return partition && stratified && groups_intact; }
};

FoldAudit audit_folds(const FoldPlan& plan, std::span<const std::size_t> labels,
                      std::span<const std::size_t> groups = {});

// --- data ------------------------------------------------------------------

struct Sample {
  std::vector<Tensor> inputs;
  std::size_t label = 0;
};

/// Indexed sample source; implementations may load lazily.
class Dataset {
 public:
  virtual ~Dataset() = default;
  virtual std::size_t size() const = 0;
  virtual std::size_t label(std::size_t i) const = 0;
  virtual Sample get(std::size_t i) const = 0;
};

class InMemoryDataset final : public Dataset {
 public:
  InMemoryDataset() = default;
  explicit InMemoryDataset(std::vector<Sample> samples) : samples_(std::move(samples)) {}

  void add(Sample s) { samples_.push_back(std::move(s)); }
  std::size_t size() const override { return samples_.size(); }
  std::size_t label(std::size_t i) const override { return samples_.at(i).label; }
  Sample get(std::size_t i) const override { return samples_.at(i); }
  const Sample& at(std::size_t i) const { return samples_.at(i); }

 private:
  std::vector<Sample> samples_;
};

std::vector<std::size_t> labels_of(const Dataset& data);

// --- training --------------------------------------------------------------

struct TrainOptions {
  AdamConfig adam;
  std::size_t batch_size = 75;
  std::size_t epochs = 2;
  std::uint64_t seed = 0;
};

using LogFn = std::function<void(const std::string&)>;

/// One pass over `indices` in an order shuffled by `rng`. Each batch's
/// gradient is the mean over the samples actually in it (the last batch may
/// be short). Returns the mean loss of every batch.
std::vector<double> train_epoch(const nn::NetworkSpec& spec, nn::Weights& weights,
                                AdamState& state, const Dataset& data,
                                std::span<const std::size_t> indices, std::size_t batch_size,
                                SeededRng& rng);

/// Loss of one sample and its gradient accumulated into `weights`.
double accumulate_sample_gradient(const nn::NetworkSpec& spec, nn::Weights& weights,
                                  const Sample& sample);

struct Evaluation {
  ConfusionMatrix confusion;
  double mean_loss = 0.0;
};

Evaluation evaluate(const nn::NetworkSpec& spec, const nn::Weights& weights, const Dataset& data,
                    std::span<const std::size_t> indices, std::size_t classes = 8);

struct CrossValidationResult {
  MetricsReport report;
  /// Best-epoch weights of the fold with the highest accuracy.
  nn::Weights best_weights;
  std::size_t best_fold = 0;
};

/// k independent trainings, one per validation fold, each from a fresh
/// Xavier initialisation seeded per fold. A fold reports the validation
/// accuracy of its best epoch.
CrossValidationResult cross_validate(const nn::NetworkSpec& spec, const Dataset& data,
                                     const FoldPlan& plan, const TrainOptions& options,
                                     const LogFn& log = {});

struct HoldoutResult {
  FoldMetrics metrics;
  nn::Weights weights;
};

/// Trains on every index in `train_idx` and keeps the epoch that scores best
/// on `val_idx`.
HoldoutResult train_with_validation(const nn::NetworkSpec& spec, const Dataset& data,
                                    std::span<const std::size_t> train_idx,
                                    std::span<const std::size_t> val_idx,
                                    const TrainOptions& options, SeededRng rng,
                                    const LogFn& log = {});

}  // namespace slc::train
