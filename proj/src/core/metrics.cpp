#include "metrics.hpp"

#include <cstdio>
#include <sstream>

#include "error.hpp"

namespace slc::train {

ConfusionMatrix::ConfusionMatrix(std::size_t classes, std::vector<std::uint64_t> counts)
    : n_(classes), counts_(std::move(counts)) {
  require(counts_.size() == n_ * n_, ErrorCode::Shape,
          "confusion matrix needs " + std::to_string(n_ * n_) + " counts");
}

void ConfusionMatrix::add(std::size_t truth, std::size_t predicted, std::uint64_t count) {
  require(truth < n_ && predicted < n_, ErrorCode::InvalidArgument,
          "confusion matrix index out of range");
  counts_[truth * n_ + predicted] += count;
}

std::uint64_t ConfusionMatrix::row_sum(std::size_t truth) const {
  std::uint64_t s = 0;
  for (std::size_t p = 0; p < n_; ++p) s += at(truth, p);
  return s;
}

std::uint64_t ConfusionMatrix::total() const {
  std::uint64_t s = 0;
  for (auto c : counts_) s += c;
  return s;
}

std::uint64_t ConfusionMatrix::correct() const {
  std::uint64_t s = 0;
  for (std::size_t i = 0; i < n_; ++i) s += at(i, i);
  return s;
}

double accuracy(const ConfusionMatrix& cm) {
  const auto total = cm.total();
  require(total > 0, ErrorCode::Empty, "accuracy of an empty confusion matrix");
  return static_cast<double>(cm.correct()) / static_cast<double>(total);
}

double mean_sensitivity(const ConfusionMatrix& cm) {
  require(cm.total() > 0, ErrorCode::Empty, "sensitivity of an empty confusion matrix");
  double sum = 0.0;
  std::size_t present = 0;
  for (std::size_t c = 0; c < cm.classes(); ++c) {
    const auto row = cm.row_sum(c);
    if (row == 0) continue;
    sum += static_cast<double>(cm.at(c, c)) / static_cast<double>(row);
    ++present;
  }
  return sum / static_cast<double>(present);
}

void finalize(MetricsReport& report) {
  require(!report.fold_metrics.empty(), ErrorCode::Empty, "metrics report has no folds");
  double acc = 0.0, sens = 0.0;
  std::uint64_t correct = 0, total = 0;
  for (const auto& f : report.fold_metrics) {
    acc += f.accuracy;
    sens += f.mean_sensitivity;
    correct += f.confusion.correct();
    total += f.confusion.total();
  }
  const double k = static_cast<double>(report.fold_metrics.size());
  report.folds = report.fold_metrics.size();
  report.mean_accuracy = acc / k;
  report.mean_sensitivity = sens / k;
  report.pooled_accuracy = total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0;
}

nlohmann::ordered_json to_json(const MetricsReport& report) {
  nlohmann::ordered_json j;
  j["model"] = report.model;
  j["folds"] = report.folds;
  j["seed"] = report.seed;
  j["epochs"] = report.epochs;
  j["mean_accuracy"] = report.mean_accuracy;
  j["mean_sensitivity"] = report.mean_sensitivity;
  j["pooled_accuracy"] = report.pooled_accuracy;
  auto& arr = j["per_fold"] = nlohmann::ordered_json::array();
  for (const auto& f : report.fold_metrics) {
    nlohmann::ordered_json fj;
    fj["fold"] = f.fold;
    fj["best_epoch"] = f.best_epoch;
    fj["accuracy"] = f.accuracy;
    fj["mean_sensitivity"] = f.mean_sensitivity;
    fj["train_count"] = f.train_count;
    fj["validation_count"] = f.validation_count;
    fj["epoch_accuracy"] = f.epoch_accuracy;
    fj["epoch_loss"] = f.epoch_loss;
    auto& cm = fj["confusion"] = nlohmann::ordered_json::array();
    for (std::size_t t = 0; t < f.confusion.classes(); ++t) {
      std::vector<std::uint64_t> row;
      for (std::size_t p = 0; p < f.confusion.classes(); ++p) row.push_back(f.confusion.at(t, p));
      cm.push_back(row);
    }
    arr.push_back(std::move(fj));
  }
  return j;
}

MetricsReport report_from_json(const nlohmann::ordered_json& j) {
  try {
    MetricsReport r;
    r.model = j.at("model").get<std::string>();
    r.folds = j.at("folds").get<std::size_t>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.epochs = j.at("epochs").get<std::size_t>();
    r.mean_accuracy = j.at("mean_accuracy").get<double>();
    r.mean_sensitivity = j.at("mean_sensitivity").get<double>();
    r.pooled_accuracy = j.at("pooled_accuracy").get<double>();
    for (const auto& fj : j.at("per_fold")) {
      FoldMetrics f;
      f.fold = fj.at("fold").get<std::size_t>();
      f.best_epoch = fj.at("best_epoch").get<std::size_t>();
      f.accuracy = fj.at("accuracy").get<double>();
      f.mean_sensitivity = fj.at("mean_sensitivity").get<double>();
      f.train_count = fj.at("train_count").get<std::size_t>();
      f.validation_count = fj.at("validation_count").get<std::size_t>();
      f.epoch_accuracy = fj.at("epoch_accuracy").get<std::vector<double>>();
      f.epoch_loss = fj.at("epoch_loss").get<std::vector<double>>();
      const auto& cm = fj.at("confusion");
      const std::size_t n = cm.size();
      std::vector<std::uint64_t> counts;
      for (const auto& row : cm)
        for (const auto& v : row) counts.push_back(v.get<std::uint64_t>());
      f.confusion = ConfusionMatrix(n, std::move(counts));
      r.fold_metrics.push_back(std::move(f));
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Format, std::string("malformed metrics report: ") + e.what());
  }
}

std::string to_text_table(const MetricsReport& report) {
  std::ostringstream os;
  char line[160];
  os << "model " << report.model << ", " << report.folds << "-fold cross validation, seed "
     << report.seed << '\n';
  std::snprintf(line, sizeof line, "%-6s %-10s %-10s %-12s %-10s\n", "fold", "best_epoch",
                "accuracy", "sensitivity", "validated");
  os << line;
  for (const auto& f : report.fold_metrics) {
    std::snprintf(line, sizeof line, "%-6zu %-10zu %-10.4f %-12.4f %-10zu\n", f.fold + 1,
                  f.best_epoch, f.accuracy, f.mean_sensitivity, f.validation_count);
    os << line;
  }
  std::snprintf(line, sizeof line, "%-6s %-10s %-10.4f %-12.4f\n", "mean", "", report.mean_accuracy,
                report.mean_sensitivity);
  os << line;
  return os.str();
}

}  // namespace slc::train
