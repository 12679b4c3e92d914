#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

namespace slc::train {

/// Square count matrix; rows are true classes, columns predictions.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t classes = 8) : n_(classes), counts_(classes * classes, 0) {}
  ConfusionMatrix(std::size_t classes, std::vector<std::uint64_t> counts);

  std::size_t classes() const noexcept { return n_; }
  std::uint64_t at(std::size_t truth, std::size_t predicted) const {
    return counts_.at(truth * n_ + predicted);
  }
  void add(std::size_t truth, std::size_t predicted, std::uint64_t count = 1);
  std::uint64_t row_sum(std::size_t truth) const;
  std::uint64_t total() const;
  std::uint64_t correct() const;
  const std::vector<std::uint64_t>& counts() const noexcept { return counts_; }

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

 private:
  std::size_t n_;
  std::vector<std::uint64_t> counts_;
};

/// trace / total.
double accuracy(const ConfusionMatrix& cm);
/// Unweighted mean of per-class recall TP / (TP + FN); classes with no
/// samples are left out of the mean.
double mean_sensitivity(const ConfusionMatrix& cm);

struct FoldMetrics {
  std::size_t fold = 0;
  /// Epoch (1-based) whose weights scored best on the validation fold.
  std::size_t best_epoch = 0;
  double accuracy = 0.0;
  double mean_sensitivity = 0.0;
  std::size_t train_count = 0;
  std::size_t validation_count = 0;
  ConfusionMatrix confusion;
  std::vector<double> epoch_accuracy;
  std::vector<double> epoch_loss;
};

struct MetricsReport {
  std::string model;
  std::size_t folds = 0;
  std::uint64_t seed = 0;
  std::size_t epochs = 0;
  std::vector<FoldMetrics> fold_metrics;
  /// sum of fold accuracies / K
  double mean_accuracy = 0.0;
  double mean_sensitivity = 0.0;
  /// total correct / total validated, across folds
  double pooled_accuracy = 0.0;
};

/// Fills the aggregate fields from fold_metrics.
void finalize(MetricsReport& report);

nlohmann::ordered_json to_json(const MetricsReport& report);
MetricsReport report_from_json(const nlohmann::ordered_json& j);
/// Plain-text table: one row per fold plus the mean.
std::string to_text_table(const MetricsReport& report);

}  // namespace slc::train
