#include "training.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "error.hpp"
#include "models.hpp"
#include "ops.hpp"

namespace slc::train {

AdamState make_adam_state(const nn::Weights& params, const AdamConfig& config) {
  AdamState s;
  s.config = config;
  for (const auto& nt : params.tensors()) {
    s.m.emplace_back(nt.value.shape());
    s.v.emplace_back(nt.value.shape());
  }
  return s;
}

namespace {

void adam_update(Tensor& param, std::span<const float> grad, Tensor& m, Tensor& v,
                 const AdamConfig& c, double bc1, double bc2) {
  float* p = param.ptr();
  float* mp = m.ptr();
  float* vp = v.ptr();
  for (std::size_t i = 0; i < param.size(); ++i) {
    const double g = grad[i];
    const double mi = c.beta1 * mp[i] + (1.0 - c.beta1) * g;
    const double vi = c.beta2 * vp[i] + (1.0 - c.beta2) * g * g;
    mp[i] = static_cast<float>(mi);
    vp[i] = static_cast<float>(vi);
    const double mhat = mi / bc1;
    const double vhat = vi / bc2;
    p[i] = static_cast<float>(p[i] - c.lr * mhat / (std::sqrt(vhat) + c.eps));
  }
}

}  // namespace

void adam_step(std::span<Tensor> params, std::span<const Tensor> grads, AdamState& state) {
  require(params.size() == grads.size() && params.size() == state.m.size(), ErrorCode::Shape,
          "adam_step: parameter, gradient and state counts differ");
  for (std::size_t i = 0; i < params.size(); ++i) {
    check_shape(grads[i], params[i].shape(), "adam_step gradient");
    check_shape(state.m[i], params[i].shape(), "adam_step moment");
  }
  ++state.t;
  const double bc1 = 1.0 - std::pow(state.config.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(state.config.beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i)
    adam_update(params[i], grads[i].data(), state.m[i], state.v[i], state.config, bc1, bc2);
}

void adam_step(nn::Weights& params, AdamState& state) {
  require(params.size() == state.m.size(), ErrorCode::Shape,
          "adam_step: parameter and state counts differ");
  for (std::size_t i = 0; i < params.size(); ++i)
    check_shape(state.m[i], params[i].shape(), "adam_step moment");
  ++state.t;
  const double bc1 = 1.0 - std::pow(state.config.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(state.config.beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = params[i];
    const std::span<const float> g = p.grad();
    adam_update(p, g, state.m[i], state.v[i], state.config, bc1, bc2);
  }
}

// --- folds -----------------------------------------------------------------

std::vector<std::size_t> FoldPlan::validation_indices(std::size_t fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < assignment.size(); ++i)
    if (assignment[i] == fold) out.push_back(i);
  return out;
}

std::vector<std::size_t> FoldPlan::training_indices(std::size_t fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < assignment.size(); ++i)
    if (assignment[i] != fold) out.push_back(i);
  return out;
}

namespace {

// Stratification units: each group (or each sample when no groups are
// given) with its class and member samples, ordered by first appearance.
struct Unit {
  std::size_t label;
  std::vector<std::size_t> members;
};

std::vector<Unit> make_units(std::span<const std::size_t> labels,
                             std::span<const std::size_t> groups) {
  std::vector<Unit> units;
  if (groups.empty()) {
    for (std::size_t i = 0; i < labels.size(); ++i) units.push_back({labels[i], {i}});
    return units;
  }
  require(groups.size() == labels.size(), ErrorCode::Shape,
          "fold groups and labels differ in length");
  std::map<std::size_t, std::size_t> index;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto [it, fresh] = index.emplace(groups[i], units.size());
    if (fresh) {
      units.push_back({labels[i], {i}});
    } else {
      Unit& u = units[it->second];
      require(u.label == labels[i], ErrorCode::Validation,
              "group " + std::to_string(groups[i]) + " mixes classes");
      u.members.push_back(i);
    }
  }
  return units;
}

}  // namespace

FoldPlan make_stratified_folds(std::span<const std::size_t> labels, std::size_t k, SeededRng rng,
                               std::span<const std::size_t> groups) {
  require(k >= 2, ErrorCode::InvalidArgument,
          "cross-validation needs k >= 2 folds, got " + std::to_string(k));
  require(!labels.empty(), ErrorCode::Empty, "no samples to split into folds");
  const std::vector<Unit> units = make_units(labels, groups);

  std::map<std::size_t, std::vector<std::size_t>> by_class;
  for (std::size_t u = 0; u < units.size(); ++u) by_class[units[u].label].push_back(u);
  const std::size_t n_classes = by_class.rbegin()->first + 1;

  FoldPlan plan;
  plan.k = k;
  plan.assignment.assign(labels.size(), 0);
  plan.counts.assign(k, std::vector<std::size_t>(n_classes, 0));

  std::size_t offset = 0;
  for (auto& [cls, members] : by_class) {
    require(members.size() >= k, ErrorCode::InvalidArgument,
            "class " + std::to_string(cls) + " has " + std::to_string(members.size()) +
                " samples, fewer than k = " + std::to_string(k));
    SeededRng crng = rng.derive(cls);
    crng.shuffle(members);
    for (std::size_t j = 0; j < members.size(); ++j) {
      const std::size_t fold = (offset + j) % k;
      for (auto s : units[members[j]].members) plan.assignment[s] = fold;
      ++plan.counts[fold][cls];
    }
    // Start the next class where this one stopped so fold totals stay even.
    offset = (offset + members.size()) % k;
  }
  return plan;
}

FoldAudit audit_folds(const FoldPlan& plan, std::span<const std::size_t> labels,
                      std::span<const std::size_t> groups) {
  FoldAudit a;
  a.partition = plan.k >= 2 && plan.assignment.size() == labels.size();
  if (!a.partition) a.problems.push_back("assignment does not cover every sample");
  std::set<std::size_t> seen;
  for (std::size_t i = 0; a.partition && i < plan.assignment.size(); ++i) {
    if (plan.assignment[i] >= plan.k) {
      a.partition = false;
      a.problems.push_back("sample " + std::to_string(i) + " has fold out of range");
    }
  }
  if (a.partition) {
    // Validation sets are disjoint and their union is every sample.
    std::size_t covered = 0;
    for (std::size_t f = 0; f < plan.k; ++f) {
      for (auto i : plan.validation_indices(f)) {
        if (!seen.insert(i).second) a.partition = false;
        ++covered;
      }
    }
    if (covered != labels.size() || seen.size() != labels.size()) a.partition = false;
    if (!a.partition) a.problems.push_back("folds do not partition the samples");
  }

  a.groups_intact = true;
  if (!groups.empty()) {
    std::map<std::size_t, std::size_t> fold_of;
    for (std::size_t i = 0; i < groups.size() && i < plan.assignment.size(); ++i) {
      auto [it, fresh] = fold_of.emplace(groups[i], plan.assignment[i]);
      if (!fresh && it->second != plan.assignment[i]) {
        a.groups_intact = false;
        a.problems.push_back("group " + std::to_string(groups[i]) + " spans two folds");
        break;
      }
    }
  }

  // Recount per fold and class in stratification units.
  a.stratified = a.partition;
  if (a.partition) {
    std::map<std::size_t, std::vector<std::size_t>> per_class;
    std::set<std::size_t> counted_groups;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (!groups.empty() && !counted_groups.insert(groups[i]).second) continue;
      auto& v = per_class[labels[i]];
      v.resize(plan.k, 0);
      ++v[plan.assignment[i]];
    }
    for (const auto& [cls, v] : per_class) {
      const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
      if (*hi - *lo > 1) {
        a.stratified = false;
        a.problems.push_back("class " + std::to_string(cls) + " is unevenly spread over folds");
      }
    }
  }
  return a;
}

std::vector<std::size_t> labels_of(const Dataset& data) {
  std::vector<std::size_t> out(data.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = data.label(i);
  return out;
}

// --- training --------------------------------------------------------------

double accumulate_sample_gradient(const nn::NetworkSpec& spec, nn::Weights& weights,
                                  const Sample& sample) {
  const nn::Trace trace = nn::forward_trace(spec, weights, sample.inputs);
  const Tensor& probs = trace.output();
  const Tensor target = models::one_hot(sample.label, probs.size());
  const double loss = ops::categorical_cross_entropy(probs, target);
  nn::backward(spec, weights, trace, ops::categorical_cross_entropy_backward(probs, target));
  return loss;
}

std::vector<double> train_epoch(const nn::NetworkSpec& spec, nn::Weights& weights,
                                AdamState& state, const Dataset& data,
                                std::span<const std::size_t> indices, std::size_t batch_size,
                                SeededRng& rng) {
  require(!indices.empty(), ErrorCode::Empty, "train_epoch: no training samples");
  require(batch_size >= 1, ErrorCode::InvalidArgument, "batch size must be >= 1");
  std::vector<std::size_t> order(indices.begin(), indices.end());
  rng.shuffle(order);

  std::vector<double> losses;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t end = std::min(order.size(), start + batch_size);
    weights.zero_grad();
    double loss = 0.0;
    for (std::size_t i = start; i < end; ++i)
      loss += accumulate_sample_gradient(spec, weights, data.get(order[i]));
    const auto n = static_cast<double>(end - start);
    const float inv = static_cast<float>(1.0 / n);
    for (auto& nt : weights.tensors())
      for (float& g : nt.value.grad()) g *= inv;
    adam_step(weights, state);
    losses.push_back(loss / n);
  }
  weights.drop_grad();
  return losses;
}

Evaluation evaluate(const nn::NetworkSpec& spec, const nn::Weights& weights, const Dataset& data,
                    std::span<const std::size_t> indices, std::size_t classes) {
  Evaluation ev{ConfusionMatrix(classes), 0.0};
  for (auto i : indices) {
    const Sample s = data.get(i);
    const Tensor probs = nn::forward(spec, weights, s.inputs);
    ev.confusion.add(s.label, models::argmax(probs));
    ev.mean_loss += ops::categorical_cross_entropy(probs, models::one_hot(s.label, probs.size()));
  }
  if (!indices.empty()) ev.mean_loss /= static_cast<double>(indices.size());
  return ev;
}

HoldoutResult train_with_validation(const nn::NetworkSpec& spec, const Dataset& data,
                                    std::span<const std::size_t> train_idx,
                                    std::span<const std::size_t> val_idx,
                                    const TrainOptions& options, SeededRng rng,
                                    const LogFn& log) {
  require(!val_idx.empty(), ErrorCode::Empty, "validation set is empty");
  SeededRng init_rng = rng.derive(0);
  nn::Weights weights = nn::init_weights(spec, init_rng);
  AdamState state = make_adam_state(weights, options.adam);

  HoldoutResult best;
  best.metrics.train_count = train_idx.size();
  best.metrics.validation_count = val_idx.size();
  double best_acc = -1.0;
  for (std::size_t epoch = 1; epoch <= options.epochs; ++epoch) {
    SeededRng order_rng = rng.derive(epoch);
    const auto losses =
        train_epoch(spec, weights, state, data, train_idx, options.batch_size, order_rng);
    double mean_loss = 0.0;
    for (double l : losses) mean_loss += l;
    mean_loss /= static_cast<double>(losses.size());
    const Evaluation ev = evaluate(spec, weights, data, val_idx, models::kNumClasses);
    const double acc = accuracy(ev.confusion);
    best.metrics.epoch_accuracy.push_back(acc);
    best.metrics.epoch_loss.push_back(mean_loss);
    if (log)
      log("epoch " + std::to_string(epoch) + ": train loss " + std::to_string(mean_loss) +
          ", validation accuracy " + std::to_string(acc));
    if (acc > best_acc) {
      best_acc = acc;
      best.metrics.best_epoch = epoch;
      best.metrics.accuracy = acc;
      best.metrics.mean_sensitivity = mean_sensitivity(ev.confusion);
      best.metrics.confusion = ev.confusion;
      best.weights = weights;
    }
  }
  if (options.epochs == 0) {
    const Evaluation ev = evaluate(spec, weights, data, val_idx, models::kNumClasses);
    best.metrics.accuracy = accuracy(ev.confusion);
    best.metrics.mean_sensitivity = mean_sensitivity(ev.confusion);
    best.metrics.confusion = ev.confusion;
    best.weights = weights;
  }
  best.weights.drop_grad();
  return best;
}

CrossValidationResult cross_validate(const nn::NetworkSpec& spec, const Dataset& data,
                                     const FoldPlan& plan, const TrainOptions& options,
                                     const LogFn& log) {
  require(plan.assignment.size() == data.size(), ErrorCode::Shape,
          "fold plan covers " + std::to_string(plan.assignment.size()) +
              " samples but the dataset has " + std::to_string(data.size()));
  require(plan.k >= 2, ErrorCode::InvalidArgument, "fold plan needs k >= 2");

  CrossValidationResult result;
  result.report.folds = plan.k;
  result.report.seed = options.seed;
  result.report.epochs = options.epochs;
  result.report.model = spec.name();
  const SeededRng root(options.seed);
  double best_acc = -1.0;
  for (std::size_t fold = 0; fold < plan.k; ++fold) {
    const auto train_idx = plan.training_indices(fold);
    const auto val_idx = plan.validation_indices(fold);
    if (log) log("fold " + std::to_string(fold + 1) + "/" + std::to_string(plan.k));
    HoldoutResult r =
        train_with_validation(spec, data, train_idx, val_idx, options, root.derive(fold), log);
    r.metrics.fold = fold;
    if (r.metrics.accuracy > best_acc) {
      best_acc = r.metrics.accuracy;
      result.best_fold = fold;
      result.best_weights = std::move(r.weights);
    }
    result.report.fold_metrics.push_back(std::move(r.metrics));
  }
  finalize(result.report);
  return result;
}

}  // namespace slc::train
