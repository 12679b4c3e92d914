#include <cmath>
#include <set>

#include "doctest.h"
#include "error.hpp"
#include "gradcheck.hpp"
#include "models.hpp"
#include "synth.hpp"
#include "training.hpp"

using namespace slc;
using namespace slc::train;

namespace {

template <typename F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::Internal;
}

// Textbook Adam on one scalar; the moments are kept as f32 between steps
// like the tensors they live in.
struct ScalarAdam {
  float m = 0, v = 0;
  int t = 0;
  double step(double p, double g, const AdamConfig& c) {
    ++t;
    const double mi = c.beta1 * m + (1 - c.beta1) * g;
    const double vi = c.beta2 * v + (1 - c.beta2) * g * g;
    m = static_cast<float>(mi);
    v = static_cast<float>(vi);
    const double mh = mi / (1 - std::pow(c.beta1, t));
    const double vh = vi / (1 - std::pow(c.beta2, t));
    return p - c.lr * mh / (std::sqrt(vh) + c.eps);
  }
};

}  // namespace

TEST_CASE("adam matches the scalar recurrence") {
  AdamConfig cfg;
  cfg.lr = 0.05;
  nn::Weights w({{"p", Tensor::from({1.0f, -2.0f, 0.5f})}});
  AdamState st = make_adam_state(w, cfg);
  ScalarAdam ref[3];
  double p[3] = {1.0, -2.0, 0.5};
  for (int step = 0; step < 20; ++step) {
    w.zero_grad();
    auto g = w[0].grad();
    for (int i = 0; i < 3; ++i) {
      const double gi = 2.0 * w[0][i] - 0.3 * i;  // gradient of x^2 - 0.3 i x
      g[i] = static_cast<float>(gi);
      p[i] = ref[i].step(w[0][i], static_cast<float>(gi), cfg);
    }
    adam_step(w, st);
    for (int i = 0; i < 3; ++i) CHECK(w[0][i] == static_cast<float>(p[i]));
  }
  CHECK(st.t == 20);
}

TEST_CASE("first adam step moves each weight by about lr") {
  nn::Weights w({{"p", Tensor::from({0.0f, 0.0f})}});
  AdamState st = make_adam_state(w, {});
  w[0].grad()[0] = 5.0f;
  w[0].grad()[1] = -0.01f;
  adam_step(w, st);
  CHECK(w[0][0] == doctest::Approx(-1e-3).epsilon(1e-4));
  CHECK(w[0][1] == doctest::Approx(1e-3).epsilon(1e-3));
}

TEST_CASE("adam with lr 0 is a no-op and steps oppose the gradient") {
  AdamConfig zero;
  zero.lr = 0.0;
  nn::Weights w({{"p", Tensor::from({0.3f, -0.7f})}});
  const nn::Weights before = w;
  AdamState st = make_adam_state(w, zero);
  w[0].grad()[0] = 2.0f;
  w[0].grad()[1] = -2.0f;
  adam_step(w, st);
  CHECK(w.bit_identical(before));

  AdamState st2 = make_adam_state(w, {});
  adam_step(w, st2);
  CHECK(w[0][0] < 0.3f);
  CHECK(w[0][1] > -0.7f);
}

TEST_CASE("confusion metrics") {
  ConfusionMatrix two(2, {8, 2, 4, 6});
  CHECK(accuracy(two) == doctest::Approx(0.7));
  CHECK(mean_sensitivity(two) == doctest::Approx(0.7));
  ConfusionMatrix diag(3, {4, 0, 0, 0, 2, 0, 0, 0, 9});
  CHECK(accuracy(diag) == 1.0);
  CHECK(mean_sensitivity(diag) == 1.0);
  ConfusionMatrix off(2, {0, 3, 5, 0});
  CHECK(accuracy(off) == 0.0);
  CHECK(mean_sensitivity(off) == 0.0);

  ConfusionMatrix cm(3);
  cm.add(0, 0, 8);
  cm.add(0, 1, 2);
  cm.add(1, 1, 5);
  cm.add(2, 0, 1);
  cm.add(2, 2, 4);
  CHECK(accuracy(cm) == doctest::Approx(17.0 / 20));
  CHECK(mean_sensitivity(cm) == doctest::Approx((0.8 + 1.0 + 0.8) / 3));
  ConfusionMatrix sparse(3);
  sparse.add(0, 0, 3);
  sparse.add(2, 0, 1);
  CHECK(mean_sensitivity(sparse) == doctest::Approx(0.5));  // class 1 absent
  CHECK(code_of([] { accuracy(ConfusionMatrix(3)); }) == ErrorCode::Empty);
  CHECK(code_of([&] { cm.add(3, 0); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("mean of folds versus pooled accuracy") {
  auto fold = [](std::uint64_t right, std::uint64_t wrong) {
    FoldMetrics f;
    f.confusion = ConfusionMatrix(2);
    f.confusion.add(0, 0, right);
    f.confusion.add(0, 1, wrong);
    f.accuracy = accuracy(f.confusion);
    f.mean_sensitivity = mean_sensitivity(f.confusion);
    return f;
  };
  MetricsReport equal;
  equal.fold_metrics = {fold(7, 3), fold(9, 1), fold(4, 6), fold(10, 0)};
  finalize(equal);
  CHECK(equal.mean_accuracy == equal.pooled_accuracy);
  CHECK(equal.pooled_accuracy == 30.0 / 40.0);

  MetricsReport unequal;
  unequal.fold_metrics = {fold(1, 0), fold(1, 9)};
  finalize(unequal);
  CHECK(unequal.mean_accuracy == doctest::Approx(0.55));
  CHECK(unequal.pooled_accuracy == doctest::Approx(2.0 / 11));

  const auto j = to_json(equal);
  const MetricsReport back = report_from_json(j);
  CHECK(to_json(back) == j);
  CHECK(to_text_table(equal).find("mean") != std::string::npos);
}

TEST_CASE("stratified folds") {
  std::vector<std::size_t> labels;
  for (std::size_t c = 0; c < 8; ++c)
    for (std::size_t i = 0; i < 10 + 3 * c; ++i) labels.push_back(c);
  const FoldPlan plan = make_stratified_folds(labels, 10, SeededRng(1));
  const FoldAudit audit = audit_folds(plan, labels);
  CHECK(audit.ok());
  CHECK(audit.problems.empty());

  std::vector<int> seen(labels.size(), 0);
  for (std::size_t f = 0; f < 10; ++f) {
    const auto val = plan.validation_indices(f);
    const auto tr = plan.training_indices(f);
    CHECK(val.size() + tr.size() == labels.size());
    for (auto i : val) ++seen[i];
    std::set<std::size_t> vs(val.begin(), val.end());
    for (auto i : tr) CHECK(vs.count(i) == 0);
  }
  for (int s : seen) CHECK(s == 1);

  for (std::size_t c = 0; c < 8; ++c) {
    std::size_t lo = SIZE_MAX, hi = 0;
    for (std::size_t f = 0; f < 10; ++f) {
      lo = std::min(lo, plan.counts[f][c]);
      hi = std::max(hi, plan.counts[f][c]);
    }
    CHECK(hi - lo <= 1);
  }

  const FoldPlan same = make_stratified_folds(labels, 10, SeededRng(1));
  CHECK(same.assignment == plan.assignment);
  CHECK(make_stratified_folds(labels, 10, SeededRng(2)).assignment != plan.assignment);

  CHECK(code_of([&] { make_stratified_folds(labels, 1, SeededRng(1)); }) ==
        ErrorCode::InvalidArgument);
  CHECK(code_of([&] { make_stratified_folds(labels, 11, SeededRng(1)); }) ==
        ErrorCode::InvalidArgument);
}

TEST_CASE("groups never straddle folds") {
  // 30 sources, each with 0-3 augmented copies sharing its group.
  std::vector<std::size_t> labels, groups;
  SeededRng rng(3);
  for (std::size_t g = 0; g < 30; ++g) {
    const std::size_t copies = 1 + rng.below(4);
    for (std::size_t i = 0; i < copies; ++i) {
      labels.push_back(g % 3);
      groups.push_back(g);
    }
  }
  const FoldPlan plan = make_stratified_folds(labels, 5, SeededRng(4), groups);
  const FoldAudit audit = audit_folds(plan, labels, groups);
  CHECK(audit.ok());
  std::map<std::size_t, std::size_t> fold_of;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto [it, fresh] = fold_of.emplace(groups[i], plan.assignment[i]);
    CHECK(it->second == plan.assignment[i]);
  }

  // A tampered plan fails the audit.
  FoldPlan bad = plan;
  bad.assignment[0] = (bad.assignment[0] + 1) % 5;
  if (groups[0] == groups[1]) CHECK_FALSE(audit_folds(bad, labels, groups).groups_intact);
  bad.assignment[0] = 7;
  CHECK_FALSE(audit_folds(bad, labels, groups).partition);

  std::vector<std::size_t> mixed_groups(labels.size(), 0);
  CHECK(code_of([&] { make_stratified_folds(labels, 5, SeededRng(4), mixed_groups); }) ==
        ErrorCode::Validation);
}

namespace {

InMemoryDataset lesion_data(std::size_t per_class, std::size_t size, std::uint64_t seed,
                            bool dual) {
  synth::LesionOptions opt;
  opt.size = size;
  InMemoryDataset data;
  for (const auto& s : synth::lesion_set(per_class, opt, SeededRng(seed))) {
    Sample smp;
    smp.label = s.label;
    if (dual) {
      smp.inputs = {imaging::to_tensor(s.image), imaging::mask_to_tensor(s.mask, 3)};
    } else {
      smp.inputs = {imaging::to_tensor(s.image)};
    }
    data.add(std::move(smp));
  }
  return data;
}

}  // namespace

TEST_CASE("training reduces loss and is reproducible") {
  const auto data = lesion_data(3, 12, 5, false);
  const auto net = models::build_model2_onepath(12);
  std::vector<std::size_t> idx(data.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;

  auto run = [&] {
    SeededRng rng(6);
    nn::Weights w = nn::init_weights(net, rng);
    AdamState st = make_adam_state(w, {});
    std::vector<double> first, last;
    for (int e = 0; e < 15; ++e) {
      SeededRng er = rng.derive(e);
      auto losses = train_epoch(net, w, st, data, idx, 8, er);
      if (e == 0) first = losses;
      last = losses;
    }
    return std::pair{w, evaluate(net, w, data, idx)};
  };
  const auto [w1, ev1] = run();
  const auto [w2, ev2] = run();
  CHECK(w1.bit_identical(w2));
  CHECK(ev1.mean_loss == ev2.mean_loss);
  CHECK(accuracy(ev1.confusion) > 0.5);
  for (std::size_t i = 0; i < w1.size(); ++i) CHECK_FALSE(w1[i].has_grad());
}

TEST_CASE("batch gradient is the mean of sample gradients") {
  const auto data = lesion_data(1, 10, 7, false);
  const auto net = models::build_model2_onepath(10);
  SeededRng rng(8);
  const nn::Weights w0 = nn::init_weights(net, rng);

  // Mean gradient by hand.
  nn::Weights acc = w0;
  acc.zero_grad();
  for (std::size_t i = 0; i < 3; ++i) accumulate_sample_gradient(net, acc, data.at(i));
  nn::Weights manual = w0;
  AdamState sm = make_adam_state(manual, {});
  manual.zero_grad();
  for (std::size_t p = 0; p < manual.size(); ++p) {
    auto g = manual[p].grad();
    const auto a = acc[p].grad();
    for (std::size_t j = 0; j < g.size(); ++j) g[j] = static_cast<float>(double(a[j]) / 3.0);
  }
  adam_step(manual, sm);

  // One batch of the same three samples; order within the batch does not
  // matter up to float summation order, so compare loosely.
  nn::Weights w = w0;
  AdamState st = make_adam_state(w, {});
  const std::vector<std::size_t> idx = {0, 1, 2};
  SeededRng er(9);
  train_epoch(net, w, st, data, idx, 3, er);
  double worst = 0.0;
  for (std::size_t p = 0; p < w.size(); ++p)
    for (std::size_t j = 0; j < w[p].size(); ++j)
      worst = std::max(worst, double(std::abs(w[p][j] - manual[p][j])));
  CHECK(worst < 1e-6);
}

TEST_CASE("cross validation is deterministic and reports every fold") {
  const auto data = lesion_data(3, 10, 10, true);
  const auto net = models::build_model2_dualpath(10);
  const FoldPlan plan = make_stratified_folds(labels_of(data), 3, SeededRng(11));
  TrainOptions o;
  o.epochs = 2;
  o.batch_size = 8;
  o.seed = 12;
  const auto a = cross_validate(net, data, plan, o);
  const auto b = cross_validate(net, data, plan, o);
  CHECK(a.report.fold_metrics.size() == 3);
  CHECK(to_json(a.report) == to_json(b.report));
  CHECK(a.best_weights.bit_identical(b.best_weights));
  std::size_t validated = 0;
  for (const auto& f : a.report.fold_metrics) {
    validated += f.validation_count;
    CHECK(f.epoch_accuracy.size() == 2);
    CHECK(f.best_epoch >= 1);
    CHECK(f.best_epoch <= 2);
    CHECK(f.accuracy == f.epoch_accuracy[f.best_epoch - 1]);
  }
  CHECK(validated == data.size());
}

TEST_CASE("two adam steps on w^2 from 1") {
  Tensor w = Tensor::from({1.0f});
  nn::Weights params({{"w", w}});
  AdamState st = make_adam_state(params, {.lr = 0.1});
  float prev = params[0][0];
  for (int s = 0; s < 2; ++s) {
    const Tensor g = Tensor::from({2.0f * params[0][0]});
    adam_step(std::span<Tensor>(&params[0], 1), std::span<const Tensor>(&g, 1), st);
    CHECK(params[0][0] < prev);
    prev = params[0][0];
  }
}

TEST_CASE("loss on one repeated sample does not increase") {
  const auto net = models::build_model2_onepath(8);
  SeededRng rng(21);
  nn::Weights w = nn::init_weights(net, rng);
  InMemoryDataset data;
  data.add({{random_tensor({3, 8, 8}, rng, 0, 1)}, 2});
  AdamState st = make_adam_state(w, {.lr = 1e-3});
  const std::vector<std::size_t> idx = {0};
  double last = evaluate(net, w, data, idx).mean_loss;
  for (int s = 0; s < 10; ++s) {
    train_epoch(net, w, st, data, idx, 75, rng);
    const double now = evaluate(net, w, data, idx).mean_loss;
    CHECK(now <= last);
    last = now;
  }
}

TEST_CASE("fold arithmetic") {
  MetricsReport r;
  for (double a : {0.8, 0.9}) {
    FoldMetrics f;
    f.accuracy = a;
    f.confusion = ConfusionMatrix(2);
    r.fold_metrics.push_back(f);
  }
  finalize(r);
  CHECK(r.mean_accuracy == doctest::Approx(0.85).epsilon(1e-12));

  std::vector<std::size_t> big, small;
  for (std::size_t c = 0; c < 8; ++c) {
    big.insert(big.end(), 2000, c);
    small.insert(small.end(), 10, c);
  }
  const FoldPlan pb = make_stratified_folds(big, 10, SeededRng(5));
  for (std::size_t f = 0; f < 10; ++f) {
    CHECK(pb.validation_indices(f).size() == 1600);
    for (std::size_t c = 0; c < 8; ++c) CHECK(pb.counts[f][c] == 200);
  }
  const FoldPlan ps = make_stratified_folds(small, 10, SeededRng(6));
  for (std::size_t f = 0; f < 10; ++f) {
    CHECK(ps.validation_indices(f).size() == 8);
    for (std::size_t c = 0; c < 8; ++c) CHECK(ps.counts[f][c] == 1);
  }
}
