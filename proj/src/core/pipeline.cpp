#include "pipeline.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>

#include "augment.hpp"
#include "csv.hpp"
#include "dataset.hpp"
#include "error.hpp"
#include "image_io.hpp"
#include "models.hpp"
#include "segmentation.hpp"
#include "weights_io.hpp"

namespace slc::pipeline {

namespace fs = std::filesystem;
using imaging::Image;
using imaging::Mask;

namespace {

// Streams derived from the run seed, one per consumer.
enum : std::uint64_t {
  kSegmentStream = 1,
  kAugmentStream = 2,
  kSplitStream = 3,
  kFoldStream = 4,
  kTrainStream = 5,
};

constexpr Stage kStages[] = {Stage::Ingest,  Stage::Preprocess, Stage::Segment, Stage::Augment,
                             Stage::Train,   Stage::Crossval,   Stage::Evaluate};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  require(f.good(), ErrorCode::Io, "cannot write " + path.string());
  f << text;
  require(f.good(), ErrorCode::Io, "write failed for " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  require(f.good(), ErrorCode::Io, "cannot read " + path.string());
  std::string s((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return s;
}

void require_upstream(const fs::path& file, Stage producer) {
  require(fs::is_regular_file(file), ErrorCode::Io,
          "missing " + file.string() + "; run the `" + stage_name(producer) + "` stage first");
}

void reset_dir(const fs::path& dir) {
  fs::remove_all(dir);
  fs::create_directories(dir);
}

std::string json_text(const train::MetricsReport& r) { return to_json(r).dump(2) + "\n"; }

/// Dataset manifest -> per-class id lists, keeping manifest order.
std::map<std::size_t, std::vector<std::string>> ids_by_class(const data::DatasetManifest& m) {
  std::map<std::size_t, std::vector<std::string>> out;
  for (const auto& e : m.entries) out[e.label].push_back(e.id);
  return out;
}

}  // namespace

Stage parse_stage(std::string_view s) {
  for (Stage st : kStages)
    if (s == stage_name(st)) return st;
  fail(ErrorCode::InvalidArgument,
       "unknown stage '" + std::string(s) +
           "' (expected ingest, preprocess, segment, augment, train, crossval or evaluate)");
}

const char* stage_name(Stage s) {
  switch (s) {
    case Stage::Ingest: return "ingest";
    case Stage::Preprocess: return "preprocess";
    case Stage::Segment: return "segment";
    case Stage::Augment: return "augment";
    case Stage::Train: return "train";
    case Stage::Crossval: return "crossval";
    case Stage::Evaluate: return "evaluate";
  }
  return "?";
}

fs::path run_dir_for(const config::RunConfig& cfg, const fs::path& root) {
  return root / config::run_name(cfg);
}

RunLock::RunLock(const fs::path& dir) {
  const fs::path p = dir / ".lock";
  fd_ = ::open(p.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
  require(fd_ >= 0, ErrorCode::Io, "cannot open lock file " + p.string() + ": " + std::strerror(errno));
  if (::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
    ::close(fd_);
    fd_ = -1;
    fail(ErrorCode::Io, "run directory " + dir.string() + " is in use by another process");
  }
}

RunLock::~RunLock() {
  if (fd_ >= 0) {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
}

// --- per-image helpers -----------------------------------------------------

Image preprocess_image(const Image& img, const config::RunConfig& cfg, imaging::Rect* rect) {
  imaging::validate(img);
  imaging::Rect r{0, 0, img.width, img.height};
  if (cfg.crop_border) {
    try {
      r = imaging::lesion_crop_rect(img, cfg.crop_threshold);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::Empty) throw;
      // All dark: nothing to crop against, keep the whole frame.
    }
  }
  Image out = imaging::crop(img, r);
  if (cfg.color_constancy && out.channels == 3) {
    try {
      out = imaging::shades_of_gray(out, cfg.minkowski_p);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::Validation) throw;
      // A channel with no signal has no defined gain; leave colours alone.
    }
  }
  const std::size_t s = cfg.resolved_image_size();
  if (rect) *rect = r;
  return imaging::resize(out, s, s);
}

std::vector<Tensor> model_inputs(const Image& img, const Mask& mask,
                                 const config::RunConfig& cfg) {
  const std::size_t s = cfg.resolved_image_size();
  const Image sized = img.height == s && img.width == s ? img : imaging::resize(img, s, s);
  const Mask msized = mask.height == s && mask.width == s ? mask : imaging::resize(mask, s, s);
  switch (cfg.model) {
    case models::ModelKind::Model1: {
      const Image src = cfg.use_mask ? imaging::apply_mask(sized, msized) : sized;
      return {imaging::to_tensor(imaging::to_grayscale(src))};
    }
    case models::ModelKind::OnePath: {
      require(sized.channels == 3, ErrorCode::Shape, "m2 models need colour images");
      return {imaging::to_tensor(imaging::apply_mask(sized, msized))};
    }
    case models::ModelKind::DualPath: {
      require(sized.channels == 3, ErrorCode::Shape, "m2 models need colour images");
      return {imaging::to_tensor(sized), imaging::mask_to_tensor(msized, 3)};
    }
  }
  fail(ErrorCode::Internal, "unhandled model kind");
}

train::Sample ManifestDataset::get(std::size_t i) const {
  const Row& r = rows_.at(i);
  const Image img = imaging::load_image(r.image);
  const Mask mask = imaging::load_mask(r.mask);
  return {model_inputs(img, mask, cfg_), r.label};
}

std::vector<std::size_t> ManifestDataset::groups() const {
  std::vector<std::size_t> g(rows_.size());
  for (std::size_t i = 0; i < rows_.size(); ++i) g[i] = rows_[i].group;
  return g;
}

// --- stage logging ---------------------------------------------------------

class Pipeline::StageLog {
 public:
  StageLog(const Pipeline& p, Stage s) : p_(p), dir_(p.stage_dir(s)), name_(stage_name(s)) {}

  ~StageLog() {
    // Keep whatever was logged even when the stage throws.
    try {
      if (fs::is_directory(dir_)) write_text(dir_ / "log.txt", text_);
    } catch (...) {
    }
  }

  void operator()(const std::string& line) {
    text_ += line + "\n";
    if (p_.log_) p_.log_("[" + name_ + "] " + line);
  }

  train::LogFn fn() {
    return [this](const std::string& l) { (*this)(l); };
  }

 private:
  const Pipeline& p_;
  fs::path dir_;
  std::string name_;
  std::string text_;
};

// --- pipeline --------------------------------------------------------------

Pipeline::Pipeline(config::RunConfig cfg, const fs::path& run_dir, train::LogFn log)
    : cfg_(std::move(cfg)), dir_(fs::absolute(run_dir)), log_(std::move(log)) {
  config::validate(cfg_);
  fs::create_directories(dir_);
  lock_.emplace(dir_);
  const fs::path cfg_path = dir_ / "config.txt";
  const std::string text = config::serialize(cfg_);
  if (fs::exists(cfg_path)) {
    require(read_text(cfg_path) == text, ErrorCode::Validation,
            "run directory " + dir_.string() +
                " was created with a different config; use a fresh --run-dir");
  } else {
    write_text(cfg_path, text);
  }
}

void Pipeline::run(Stage s) {
  switch (s) {
    case Stage::Ingest: ingest(); break;
    case Stage::Preprocess: preprocess(); break;
    case Stage::Segment: segment(); break;
    case Stage::Augment: augment(); break;
    case Stage::Train: train(); break;
    case Stage::Crossval: crossval(); break;
    case Stage::Evaluate: evaluate(); break;
  }
}

void Pipeline::ingest() {
  require(!cfg_.labels_csv.empty() && !cfg_.image_dir.empty(), ErrorCode::InvalidArgument,
          "ingest needs a labels CSV and an image directory (--labels, --images)");
  const fs::path out = stage_dir(Stage::Ingest);
  reset_dir(out);
  StageLog log(*this, Stage::Ingest);
  const auto manifest = data::ingest(cfg_.labels_csv, cfg_.image_dir);
  data::write_manifest(manifest, out / "manifest.csv");
  const std::string counts = manifest.counts_report();
  write_text(out / "counts.txt", counts);
  std::size_t start = 0;
  while (start < counts.size()) {
    const auto nl = counts.find('\n', start);
    log(counts.substr(start, nl - start));
    start = nl + 1;
  }
}

void Pipeline::preprocess() {
  const fs::path in = stage_dir(Stage::Ingest) / "manifest.csv";
  require_upstream(in, Stage::Ingest);
  const auto src = data::read_manifest(in);
  const fs::path out = stage_dir(Stage::Preprocess);
  reset_dir(out);
  fs::create_directories(out / "images");
  StageLog log(*this, Stage::Preprocess);
  const std::size_t s = cfg_.resolved_image_size();
  log("target size " + std::to_string(s) + "x" + std::to_string(s));

  data::DatasetManifest m;
  for (const auto& e : src.entries) {
    Image img;
    try {
      img = imaging::load_image(e.image);
    } catch (const Error& err) {
      fail(ErrorCode::Io, "cannot read image '" + e.id + "': " + err.what());
    }
    imaging::Rect rect;
    const Image pre = preprocess_image(img, cfg_, &rect);
    data::DatasetEntry d{e.id, out / "images" / (e.id + ".png"), e.label, std::nullopt};
    imaging::save_png(pre, d.image);
    if (e.mask) {
      // Supplied ground truth follows the same crop and resize.
      Mask gt = imaging::load_mask(*e.mask);
      if (gt.height == img.height && gt.width == img.width) {
        d.mask = out / "images" / (e.id + "_mask.png");
        imaging::save_mask_png(imaging::resize(imaging::crop(gt, rect), s, s), *d.mask);
      } else {
        log(e.id + ": supplied mask size differs from the image, ignored");
      }
    }
    m.entries.push_back(std::move(d));
  }
  data::write_manifest(m, out / "manifest.csv");
  log("wrote " + std::to_string(m.entries.size()) + " images");
}

namespace {

struct UNetModel {
  seg::UNetConfig cfg;
  nn::NetworkSpec spec;
  nn::Weights weights;
};

seg::UNetConfig unet_config(const config::RunConfig& c) {
  return {c.unet_depth, c.unet_base, c.unet_size, 3};
}

Mask segment_with(const Image& img, const config::RunConfig& cfg, const UNetModel* unet,
                  bool* fallback) {
  *fallback = false;
  if (unet) {
    const std::size_t u = unet->cfg.input_size;
    Image small = imaging::resize(img, u, u);
    if (small.channels == 1) {
      Image rgb(u, u, 3);
      for (std::size_t i = 0; i < u * u; ++i)
        for (std::size_t c = 0; c < 3; ++c) rgb.pixels[i * 3 + c] = small.pixels[i];
      small = std::move(rgb);
    }
    return imaging::resize(seg::predict_mask(unet->spec, unet->weights, small), img.height,
                           img.width);
  }
  try {
    return seg::threshold_segment(img, cfg.piecewise, cfg.segment_threshold, cfg.segment_invert);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::Empty) throw;
    *fallback = true;
    return Mask(img.height, img.width, 1);
  }
}

}  // namespace

void Pipeline::segment() {
  const fs::path in = stage_dir(Stage::Preprocess) / "manifest.csv";
  require_upstream(in, Stage::Preprocess);
  const auto src = data::read_manifest(in);
  const fs::path out = stage_dir(Stage::Segment);
  reset_dir(out);
  fs::create_directories(out / "masks");
  StageLog log(*this, Stage::Segment);
  log(std::string("method ") + config::segment_method_name(cfg_.segment_method));

  std::optional<UNetModel> unet;
  if (cfg_.segment_method == config::SegmentMethod::UNet) {
    const seg::UNetConfig ucfg = unet_config(cfg_);
    const std::size_t u = ucfg.input_size;
    std::vector<seg::SegSample> supplied;
    for (const auto& e : src.entries) {
      if (!e.mask) continue;
      const Image img = imaging::resize(imaging::load_image(e.image), u, u);
      if (img.channels != 3) continue;
      supplied.push_back({img, imaging::resize(imaging::load_mask(*e.mask), u, u)});
    }
    const SeededRng rng = SeededRng(cfg_.seed).derive(kSegmentStream);
    std::vector<seg::SegSample> train_set, holdout;
    if (supplied.size() >= 2) {
      log("training U-Net on " + std::to_string(supplied.size()) + " supplied masks");
      const std::size_t n_hold = std::max<std::size_t>(1, supplied.size() / 10);
      holdout.assign(supplied.end() - static_cast<std::ptrdiff_t>(n_hold), supplied.end());
      supplied.resize(supplied.size() - n_hold);
      train_set = std::move(supplied);
    } else {
      log("no supplied masks; training U-Net on " + std::to_string(cfg_.unet_samples) +
          " synthetic discs");
      seg::DiscOptions d;
      d.size = u;
      train_set = seg::synthetic_discs(cfg_.unet_samples, d, rng.derive(0));
      holdout = seg::synthetic_discs(std::max<std::size_t>(1, cfg_.unet_samples / 5), d,
                                     rng.derive(1));
    }
    UNetModel model{ucfg, seg::build_unet(ucfg), {}};
    seg::UNetTrainOptions opt;
    opt.epochs = cfg_.unet_epochs;
    opt.seed = rng.derive(2).seed();
    model.weights = seg::train_unet(model.spec, ucfg, train_set, holdout, opt, log.fn()).weights;
    io::save_weights(model.weights, out / "unet.slcw");
    unet = std::move(model);
  }

  data::DatasetManifest m;
  std::size_t fallbacks = 0;
  for (const auto& e : src.entries) {
    const Image img = imaging::load_image(e.image);
    bool fallback = false;
    const Mask mask = segment_with(img, cfg_, unet ? &*unet : nullptr, &fallback);
    if (fallback) {
      ++fallbacks;
      log(e.id + ": no lesion found, using the whole image");
    }
    data::DatasetEntry d{e.id, e.image, e.label, out / "masks" / (e.id + "_mask.png")};
    imaging::save_mask_png(mask, *d.mask);
    m.entries.push_back(std::move(d));
  }
  data::write_manifest(m, out / "manifest.csv");
  log("segmented " + std::to_string(m.entries.size()) + " images, " + std::to_string(fallbacks) +
      " without a detectable lesion");
}

void Pipeline::augment() {
  const fs::path in = stage_dir(Stage::Segment) / "manifest.csv";
  require_upstream(in, Stage::Segment);
  const auto src = data::read_manifest(in);
  const fs::path out = stage_dir(Stage::Augment);
  reset_dir(out);
  StageLog log(*this, Stage::Augment);

  std::map<std::string, augment::SourceRecord> sources;
  for (const auto& e : src.entries) sources[e.id] = {e.image, e.mask};

  std::vector<augment::ManifestRow> rows;
  if (cfg_.balance) {
    const std::size_t s = cfg_.resolved_image_size();
    const auto plan = augment::plan_balance(ids_by_class(src), cfg_.balance_target,
                                            SeededRng(cfg_.seed).derive(kAugmentStream),
                                            cfg_.ranges, s, s);
    for (const auto& cp : plan.classes)
      log(std::string(models::kClassNames.at(cp.class_index)) + ": " +
          std::to_string(cp.source_count) + " sources, synthesize " +
          std::to_string(cp.synthesize) + ", keep " + std::to_string(cp.items.size()));
    rows = augment::execute_plan(plan, sources, out / "images");
  } else {
    log("balancing disabled; using every original");
    for (const auto& e : src.entries)
      rows.push_back({e.image.string(), e.id, std::string(models::kClassNames.at(e.label)), "", 0});
  }
  augment::write_manifest(rows, out / "manifest.csv");
  log("manifest rows " + std::to_string(rows.size()));
}

ManifestDataset Pipeline::training_set() const {
  const fs::path seg_manifest = stage_dir(Stage::Segment) / "manifest.csv";
  const fs::path aug_manifest = stage_dir(Stage::Augment) / "manifest.csv";
  require_upstream(seg_manifest, Stage::Segment);
  require_upstream(aug_manifest, Stage::Augment);
  const auto seg_m = data::read_manifest(seg_manifest);
  std::map<std::string, std::pair<fs::path, std::size_t>> masks;  // id -> (mask, group)
  for (std::size_t i = 0; i < seg_m.entries.size(); ++i)
    masks[seg_m.entries[i].id] = {seg_m.entries[i].mask.value_or(fs::path()), i};

  std::vector<ManifestDataset::Row> rows;
  for (const auto& r : augment::read_manifest(aug_manifest)) {
    auto it = masks.find(r.src_id);
    require(it != masks.end(), ErrorCode::Validation,
            "augment manifest names '" + r.src_id + "', which the segment stage never saw");
    const fs::path mask = r.op_chain.empty() ? it->second.first
                                             : augment::companion_mask_path(r.out_path);
    rows.push_back({r.out_path, mask, models::class_index(r.class_name), it->second.second});
  }
  require(!rows.empty(), ErrorCode::Empty, "augment manifest has no rows");
  return ManifestDataset(std::move(rows), cfg_);
}

train::MetricsReport Pipeline::train() {
  const ManifestDataset data = training_set();
  const fs::path out = stage_dir(Stage::Train);
  reset_dir(out);
  StageLog log(*this, Stage::Train);
  const auto spec = models::build_model(cfg_.model, cfg_.resolved_image_size());
  const auto labels = train::labels_of(data);
  const auto groups = data.groups();
  // A 90/10 split is one fold of a stratified 10-fold plan.
  const auto k = static_cast<std::size_t>(std::max(2.0, std::round(1.0 / cfg_.validation_fraction)));
  const auto plan = train::make_stratified_folds(labels, k, SeededRng(cfg_.seed).derive(kSplitStream),
                                                 groups);
  const auto train_idx = plan.training_indices(0);
  const auto val_idx = plan.validation_indices(0);
  log(std::string("model ") + models::model_kind_name(cfg_.model) + ", " +
      std::to_string(train_idx.size()) + " training / " + std::to_string(val_idx.size()) +
      " validation samples, " + std::to_string(cfg_.resolved_epochs()) + " epochs");
  const auto opts = cfg_.train_options();
  auto r = train::train_with_validation(spec, data, train_idx, val_idx, opts,
                                        SeededRng(cfg_.seed).derive(kTrainStream), log.fn());
  io::save_weights(r.weights, out / "weights.slcw");
  train::MetricsReport report;
  report.model = models::model_kind_name(cfg_.model);
  report.folds = 1;
  report.seed = cfg_.seed;
  report.epochs = opts.epochs;
  report.fold_metrics.push_back(std::move(r.metrics));
  train::finalize(report);
  write_text(out / "metrics.json", json_text(report));
  write_text(out / "metrics.txt", train::to_text_table(report));
  log("validation accuracy " + std::to_string(report.mean_accuracy));
  return report;
}

train::MetricsReport Pipeline::crossval() {
  const ManifestDataset data = training_set();
  const fs::path out = stage_dir(Stage::Crossval);
  reset_dir(out);
  StageLog log(*this, Stage::Crossval);
  const auto spec = models::build_model(cfg_.model, cfg_.resolved_image_size());
  const auto labels = train::labels_of(data);
  const auto groups = data.groups();
  const auto plan = train::make_stratified_folds(labels, cfg_.folds,
                                                 SeededRng(cfg_.seed).derive(kFoldStream), groups);
  const auto audit = train::audit_folds(plan, labels, groups);
  for (const auto& p : audit.problems) log("fold audit: " + p);
  require(audit.ok(), ErrorCode::Internal, "fold plan failed its audit");

  std::vector<csv::Row> fold_rows{{"out_path", "fold"}};
  for (std::size_t i = 0; i < data.size(); ++i)
    fold_rows.push_back({data.row(i).image.string(), std::to_string(plan.assignment[i])});
  csv::write(out / "folds.csv", fold_rows);

  auto opts = cfg_.train_options();
  opts.seed = SeededRng(cfg_.seed).derive(kTrainStream).seed();
  log(std::string("model ") + models::model_kind_name(cfg_.model) + ", " +
      std::to_string(cfg_.folds) + " folds, " + std::to_string(opts.epochs) + " epochs");
  auto result = train::cross_validate(spec, data, plan, opts, log.fn());
  result.report.model = models::model_kind_name(cfg_.model);
  result.report.seed = cfg_.seed;
  io::save_weights(result.best_weights, out / "best.slcw");
  write_text(out / "metrics.json", json_text(result.report));
  write_text(out / "metrics.txt", train::to_text_table(result.report));
  log("mean accuracy " + std::to_string(result.report.mean_accuracy) + ", best fold " +
      std::to_string(result.best_fold + 1));
  return result.report;
}

fs::path Pipeline::default_weights() const { return stage_dir(Stage::Crossval) / "best.slcw"; }

namespace {

nn::Weights load_checked(const nn::NetworkSpec& spec, const fs::path& path,
                         bool is_default) {
  if (is_default) require_upstream(path, Stage::Crossval);
  nn::Weights w = io::load_weights(path);
  try {
    nn::check_weights(spec, w);
  } catch (const Error& e) {
    fail(ErrorCode::Validation,
         path.string() + " does not fit the configured model: " + e.what());
  }
  return w;
}

}  // namespace

train::MetricsReport Pipeline::evaluate(const std::optional<fs::path>& weights) {
  const fs::path in = stage_dir(Stage::Segment) / "manifest.csv";
  require_upstream(in, Stage::Segment);
  const auto src = data::read_manifest(in);
  const auto spec = models::build_model(cfg_.model, cfg_.resolved_image_size());
  const fs::path wpath = weights.value_or(default_weights());
  const nn::Weights w = load_checked(spec, wpath, !weights.has_value());
  const fs::path out = stage_dir(Stage::Evaluate);
  reset_dir(out);
  StageLog log(*this, Stage::Evaluate);
  log("weights " + wpath.string());

  std::vector<ManifestDataset::Row> rows;
  for (std::size_t i = 0; i < src.entries.size(); ++i) {
    const auto& e = src.entries[i];
    rows.push_back({e.image, e.mask.value_or(fs::path()), e.label, i});
  }
  const ManifestDataset data(std::move(rows), cfg_);
  std::vector<std::size_t> all(data.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  const auto ev = train::evaluate(spec, w, data, all, models::kNumClasses);

  train::FoldMetrics fm;
  fm.validation_count = all.size();
  fm.accuracy = train::accuracy(ev.confusion);
  fm.mean_sensitivity = train::mean_sensitivity(ev.confusion);
  fm.confusion = ev.confusion;
  train::MetricsReport report;
  report.model = models::model_kind_name(cfg_.model);
  report.folds = 1;
  report.seed = cfg_.seed;
  report.fold_metrics.push_back(std::move(fm));
  train::finalize(report);
  write_text(out / "metrics.json", json_text(report));
  write_text(out / "metrics.txt", train::to_text_table(report));
  log("accuracy " + std::to_string(report.mean_accuracy) + " on " + std::to_string(all.size()) +
      " images");
  return report;
}

std::string Pipeline::predict(const fs::path& image, const std::optional<fs::path>& weights) {
  const auto spec = models::build_model(cfg_.model, cfg_.resolved_image_size());
  const nn::Weights w = load_checked(spec, weights.value_or(default_weights()), !weights.has_value());

  std::optional<UNetModel> unet;
  if (cfg_.segment_method == config::SegmentMethod::UNet) {
    const fs::path upath = stage_dir(Stage::Segment) / "unet.slcw";
    require_upstream(upath, Stage::Segment);
    const auto ucfg = unet_config(cfg_);
    unet = UNetModel{ucfg, seg::build_unet(ucfg), io::load_weights(upath)};
    nn::check_weights(unet->spec, unet->weights);
  }

  const Image pre = preprocess_image(imaging::load_image(image), cfg_);
  bool fallback = false;
  const Mask mask = segment_with(pre, cfg_, unet ? &*unet : nullptr, &fallback);
  const auto inputs = model_inputs(pre, mask, cfg_);
  const Tensor probs = nn::forward(spec, w, inputs);
  std::string line(models::kClassNames.at(models::argmax(probs)));
  for (float p : probs.data()) {
    char buf[32];
    std::snprintf(buf, sizeof buf, ",%.6f", static_cast<double>(p));
    line += buf;
  }
  return line;
}

}  // namespace slc::pipeline
