#include "config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>

#include "error.hpp"

namespace slc::config {

const char* segment_method_name(SegmentMethod m) {
  return m == SegmentMethod::UNet ? "unet" : "threshold";
}

std::size_t RunConfig::resolved_image_size() const {
  return image_size ? image_size : models::default_input_size(model);
}

std::size_t RunConfig::resolved_epochs() const {
  if (epochs) return epochs;
  return model == models::ModelKind::Model1 ? 20 : 2;
}

train::TrainOptions RunConfig::train_options() const {
  train::TrainOptions o;
  o.adam = adam;
  o.batch_size = batch_size;
  o.epochs = resolved_epochs();
  o.seed = seed;
  return o;
}

namespace {

std::string fmt_double(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value,
                            const char* expected) {
  fail(ErrorCode::InvalidArgument,
       "config key '" + key + "': cannot parse '" + value + "' as " + expected);
}

double parse_double(const std::string& key, const std::string& v) {
  double d = 0.0;
  auto r = std::from_chars(v.data(), v.data() + v.size(), d);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size()) bad_value(key, v, "a number");
  return d;
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  std::uint64_t u = 0;
  auto r = std::from_chars(v.data(), v.data() + v.size(), u);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size())
    bad_value(key, v, "a non-negative integer");
  return u;
}

std::uint8_t parse_u8(const std::string& key, const std::string& v) {
  const std::uint64_t u = parse_u64(key, v);
  if (u > 255) bad_value(key, v, "an intensity 0..255");
  return static_cast<std::uint8_t>(u);
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  bad_value(key, v, "true/false");
}

struct Field {
  const char* key;
  const char* doc;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

#define SLC_SIZE(KEY, MEMBER, DOC)                                                   \
  Field{KEY, DOC, [](const RunConfig& c) { return std::to_string(c.MEMBER); },      \
        [](RunConfig& c, const std::string& v) {                                    \
          c.MEMBER = static_cast<decltype(c.MEMBER)>(parse_u64(KEY, v));             \
        }}
#define SLC_U8(KEY, MEMBER, DOC)                                                     \
  Field{KEY, DOC, [](const RunConfig& c) { return std::to_string(unsigned{c.MEMBER}); }, \
        [](RunConfig& c, const std::string& v) { c.MEMBER = parse_u8(KEY, v); }}
#define SLC_DOUBLE(KEY, MEMBER, DOC)                                                 \
  Field{KEY, DOC, [](const RunConfig& c) { return fmt_double(c.MEMBER); },          \
        [](RunConfig& c, const std::string& v) { c.MEMBER = parse_double(KEY, v); }}
#define SLC_BOOL(KEY, MEMBER, DOC)                                                   \
  Field{KEY, DOC, [](const RunConfig& c) { return std::string(c.MEMBER ? "true" : "false"); }, \
        [](RunConfig& c, const std::string& v) { c.MEMBER = parse_bool(KEY, v); }}
#define SLC_STRING(KEY, MEMBER, DOC)                                                 \
  Field{KEY, DOC, [](const RunConfig& c) { return c.MEMBER; },                      \
        [](RunConfig& c, const std::string& v) { c.MEMBER = v; }}

const std::vector<Field>& fields() {
  static const std::vector<Field> f = {
      SLC_SIZE("seed", seed, "root seed for every random draw"),
      SLC_STRING("data.labels", labels_csv, "ISIC-layout ground-truth CSV"),
      SLC_STRING("data.images", image_dir, "directory holding <image>.jpg/.png"),
      SLC_BOOL("preprocess.crop", crop_border, "crop the black dermoscope border"),
      SLC_U8("preprocess.crop_threshold", crop_threshold, "gray level separating border from image"),
      SLC_BOOL("preprocess.color_constancy", color_constancy, "shades-of-gray colour correction"),
      SLC_DOUBLE("preprocess.minkowski_p", minkowski_p, "Minkowski norm for the illuminant estimate"),
      SLC_U8("preprocess.piecewise.r1", piecewise.r1, "first breakpoint input level"),
      SLC_U8("preprocess.piecewise.s1", piecewise.s1, "first breakpoint output level"),
      SLC_U8("preprocess.piecewise.r2", piecewise.r2, "second breakpoint input level"),
      SLC_U8("preprocess.piecewise.s2", piecewise.s2, "second breakpoint output level"),
      SLC_SIZE("preprocess.image_size", image_size, "square model input size, 0 = model default"),
      Field{"segment.method", "threshold or unet",
            [](const RunConfig& c) { return std::string(segment_method_name(c.segment_method)); },
            [](RunConfig& c, const std::string& v) {
              if (v == "threshold") c.segment_method = SegmentMethod::Threshold;
              else if (v == "unet") c.segment_method = SegmentMethod::UNet;
              else bad_value("segment.method", v, "threshold or unet");
            }},
      SLC_U8("segment.threshold", segment_threshold, "gray level after brightening"),
      SLC_BOOL("segment.invert", segment_invert, "lesion is darker than the threshold"),
      SLC_SIZE("segment.unet_depth", unet_depth, "U-Net encoder levels"),
      SLC_SIZE("segment.unet_base", unet_base, "U-Net first-level filters"),
      SLC_SIZE("segment.unet_size", unet_size, "U-Net input size"),
      SLC_SIZE("segment.unet_epochs", unet_epochs, "U-Net training epochs"),
      SLC_SIZE("segment.unet_samples", unet_samples, "synthetic discs when no masks are given"),
      SLC_BOOL("augment.balance", balance, "balance classes to augment.target"),
      SLC_SIZE("augment.target", balance_target, "images per class after balancing"),
      SLC_DOUBLE("augment.rotate_degrees", ranges.rotate_degrees, "rotation range +-"),
      SLC_DOUBLE("augment.scale_min", ranges.scale_min, "smallest scale factor"),
      SLC_DOUBLE("augment.scale_max", ranges.scale_max, "largest scale factor"),
      SLC_DOUBLE("augment.shear", ranges.shear, "shear range +-"),
      SLC_DOUBLE("augment.contrast_min", ranges.contrast_min, "smallest contrast gain"),
      SLC_DOUBLE("augment.contrast_max", ranges.contrast_max, "largest contrast gain"),
      SLC_DOUBLE("augment.brightness", ranges.brightness, "brightness delta range +-"),
      SLC_DOUBLE("augment.crop_min", ranges.crop_min, "smallest kept side fraction"),
      SLC_DOUBLE("augment.crop_max", ranges.crop_max, "largest kept side fraction"),
      SLC_DOUBLE("augment.cutout_min", ranges.cutout_min, "smallest hole side fraction"),
      SLC_DOUBLE("augment.cutout_max", ranges.cutout_max, "largest hole side fraction"),
      SLC_SIZE("augment.max_chain", ranges.max_chain, "most ops per synthesized image"),
      Field{"model", "m1, m2-one or m2-dual",
            [](const RunConfig& c) { return std::string(models::model_kind_name(c.model)); },
            [](RunConfig& c, const std::string& v) { c.model = models::parse_model_kind(v); }},
      SLC_BOOL("train.use_mask", use_mask, "m1 only: multiply images by their masks"),
      SLC_SIZE("train.folds", folds, "cross-validation folds"),
      SLC_SIZE("train.epochs", epochs, "0 = 20 for m1, 2 otherwise"),
      SLC_SIZE("train.batch_size", batch_size, "samples per Adam step"),
      SLC_DOUBLE("train.lr", adam.lr, "Adam learning rate"),
      SLC_DOUBLE("train.beta1", adam.beta1, "Adam first-moment decay"),
      SLC_DOUBLE("train.beta2", adam.beta2, "Adam second-moment decay"),
      SLC_DOUBLE("train.eps", adam.eps, "Adam denominator guard"),
      SLC_DOUBLE("train.validation_fraction", validation_fraction,
                 "held-out share for the train command"),
  };
  return f;
}

#undef SLC_SIZE
#undef SLC_U8
#undef SLC_DOUBLE
#undef SLC_BOOL
#undef SLC_STRING

const Field& field(const std::string& key) {
  for (const auto& f : fields())
    if (key == f.key) return f;
  fail(ErrorCode::InvalidArgument, "unknown config key '" + key + "'");
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

void validate(const RunConfig& c) {
  imaging::validate(c.piecewise);
  require(c.minkowski_p >= 1.0, ErrorCode::InvalidArgument, "preprocess.minkowski_p must be >= 1");
  require(c.image_size == 0 || c.image_size >= 16, ErrorCode::InvalidArgument,
          "preprocess.image_size must be 0 or >= 16");
  require(c.folds >= 2, ErrorCode::InvalidArgument, "train.folds must be >= 2");
  require(c.batch_size >= 1, ErrorCode::InvalidArgument, "train.batch_size must be >= 1");
  require(c.adam.lr >= 0.0, ErrorCode::InvalidArgument, "train.lr must be >= 0");
  require(c.adam.beta1 >= 0.0 && c.adam.beta1 < 1.0 && c.adam.beta2 >= 0.0 && c.adam.beta2 < 1.0,
          ErrorCode::InvalidArgument, "Adam betas must lie in [0, 1)");
  require(c.adam.eps > 0.0, ErrorCode::InvalidArgument, "train.eps must be > 0");
  require(c.validation_fraction > 0.0 && c.validation_fraction < 1.0, ErrorCode::InvalidArgument,
          "train.validation_fraction must lie in (0, 1)");
  require(c.balance_target >= 1, ErrorCode::InvalidArgument, "augment.target must be >= 1");
  require(c.ranges.scale_min > 0.0 && c.ranges.scale_min <= c.ranges.scale_max,
          ErrorCode::InvalidArgument, "augment scale range must satisfy 0 < min <= max");
  require(c.ranges.contrast_min > 0.0 && c.ranges.contrast_min <= c.ranges.contrast_max,
          ErrorCode::InvalidArgument, "augment contrast range must satisfy 0 < min <= max");
  require(c.ranges.crop_min > 0.0 && c.ranges.crop_min <= c.ranges.crop_max &&
              c.ranges.crop_max <= 1.0,
          ErrorCode::InvalidArgument, "augment crop range must satisfy 0 < min <= max <= 1");
  require(c.ranges.cutout_min > 0.0 && c.ranges.cutout_min <= c.ranges.cutout_max &&
              c.ranges.cutout_max <= 1.0,
          ErrorCode::InvalidArgument, "augment cutout range must satisfy 0 < min <= max <= 1");
  require(c.ranges.max_chain >= 1, ErrorCode::InvalidArgument, "augment.max_chain must be >= 1");
  require(c.unet_depth >= 1 && c.unet_base >= 1, ErrorCode::InvalidArgument,
          "U-Net depth and base must be >= 1");
  require(c.unet_size % (std::size_t{1} << c.unet_depth) == 0 && c.unet_size > 0,
          ErrorCode::InvalidArgument, "segment.unet_size must be a multiple of 2^unet_depth");
}

void set(RunConfig& cfg, const std::string& key, const std::string& value) {
  field(key).set(cfg, value);
}

std::string get(const RunConfig& cfg, const std::string& key) { return field(key).get(cfg); }

std::vector<std::string> keys() {
  std::vector<std::string> out;
  for (const auto& f : fields()) out.emplace_back(f.key);
  return out;
}

std::string describe() {
  const RunConfig d;
  std::string out;
  for (const auto& f : fields()) {
    std::string line = std::string(f.key) + " = " + f.get(d);
    if (line.size() < 44) line.resize(44, ' ');
    out += line + "  # " + f.doc + "\n";
  }
  return out;
}

std::string serialize(const RunConfig& cfg) {
  std::string out;
  for (const auto& f : fields()) out += std::string(f.key) + " = " + f.get(cfg) + "\n";
  return out;
}

RunConfig parse(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash_pos = line.find('#');
    if (hash_pos != std::string::npos) line.resize(hash_pos);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    require(eq != std::string::npos, ErrorCode::Format,
            "config line " + std::to_string(lineno) + ": expected key = value");
    set(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  validate(cfg);
  return cfg;
}

RunConfig load(const std::filesystem::path& path) {
  std::ifstream f(path);
  require(f.good(), ErrorCode::Io, "cannot read config file " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  try {
    return parse(ss.str());
  } catch (const Error& e) {
    fail(e.code(), path.string() + ": " + e.what());
  }
}

void save(const RunConfig& cfg, const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::trunc);
  require(f.good(), ErrorCode::Io, "cannot write config file " + path.string());
  f << serialize(cfg);
  require(f.good(), ErrorCode::Io, "write failed for " + path.string());
}

std::uint64_t hash(const RunConfig& cfg) {
  RunConfig c = cfg;
  c.seed = 0;
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : serialize(c)) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

std::string run_name(const RunConfig& cfg) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash(cfg)));
  return std::string(buf) + "-s" + std::to_string(cfg.seed);
}

}  // namespace slc::config
