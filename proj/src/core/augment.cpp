#include "augment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>

#include "csv.hpp"
#include "error.hpp"
#include "image_io.hpp"
#include "models.hpp"

namespace slc::augment {

namespace fs = std::filesystem;

const char* augment_kind_name(AugmentKind kind) {
  switch (kind) {
    case AugmentKind::Rotate: return "rotate";
    case AugmentKind::Scale: return "scale";
    case AugmentKind::FlipH: return "flip_h";
    case AugmentKind::FlipV: return "flip_v";
    case AugmentKind::Shear: return "shear";
    case AugmentKind::Contrast: return "contrast";
    case AugmentKind::Brightness: return "brightness";
    case AugmentKind::Crop: return "crop";
    case AugmentKind::Cutout: return "cutout";
  }
  return "?";
}

namespace {

bool rect_inside(const Rect& r, std::size_t h, std::size_t w) {
  return r.width > 0 && r.height > 0 && r.x + r.width <= w && r.y + r.height <= h;
}

struct Point {
  double x, y;
};

// Inverse map from output pixel to source coordinate for geometric ops.
Point source_of(const AugmentOp& op, double x, double y, std::size_t h, std::size_t w) {
  const double cx = (static_cast<double>(w) - 1.0) / 2.0;
  const double cy = (static_cast<double>(h) - 1.0) / 2.0;
  const double dx = x - cx, dy = y - cy;
  switch (op.kind) {
    case AugmentKind::Rotate: {
      const double t = op.value * std::numbers::pi / 180.0;
      const double c = std::cos(t), s = std::sin(t);
      return {c * dx + s * dy + cx, -s * dx + c * dy + cy};
    }
    case AugmentKind::Scale: return {dx / op.value + cx, dy / op.value + cy};
    case AugmentKind::Shear: return {x - op.value * dy, y};
    default: return {x, y};
  }
}

constexpr double kEdgeSlack = 1e-6;

// Bilinear sample; positions outside the image read as black.
double sample(const Image& img, double sx, double sy, std::size_t c) {
  const double maxx = static_cast<double>(img.width - 1);
  const double maxy = static_cast<double>(img.height - 1);
  if (sx < -kEdgeSlack || sy < -kEdgeSlack || sx > maxx + kEdgeSlack || sy > maxy + kEdgeSlack)
    return 0.0;
  sx = std::clamp(sx, 0.0, maxx);
  sy = std::clamp(sy, 0.0, maxy);
  const auto x0 = static_cast<std::size_t>(sx), y0 = static_cast<std::size_t>(sy);
  const std::size_t x1 = std::min(x0 + 1, img.width - 1), y1 = std::min(y0 + 1, img.height - 1);
  const double fx = sx - static_cast<double>(x0), fy = sy - static_cast<double>(y0);
  const double a = img.at(y0, x0, c), b = img.at(y0, x1, c);
  const double d = img.at(y1, x0, c), e = img.at(y1, x1, c);
  const double top = a + (b - a) * fx;
  const double bottom = d + (e - d) * fx;
  return top + (bottom - top) * fy;
}

Image warp(const Image& img, const AugmentOp& op) {
  Image out(img.height, img.width, img.channels);
  for (std::size_t y = 0; y < img.height; ++y)
    for (std::size_t x = 0; x < img.width; ++x) {
      const Point s = source_of(op, static_cast<double>(x), static_cast<double>(y), img.height,
                                img.width);
      for (std::size_t c = 0; c < img.channels; ++c)
        out.at(y, x, c) = imaging::to_u8(sample(img, s.x, s.y, c));
    }
  return out;
}

Mask warp(const Mask& mask, const AugmentOp& op) {
  Mask out(mask.height, mask.width);
  for (std::size_t y = 0; y < mask.height; ++y)
    for (std::size_t x = 0; x < mask.width; ++x) {
      const Point s = source_of(op, static_cast<double>(x), static_cast<double>(y), mask.height,
                                mask.width);
      const double rx = std::nearbyint(s.x), ry = std::nearbyint(s.y);
      if (rx < 0 || ry < 0 || rx >= static_cast<double>(mask.width) ||
          ry >= static_cast<double>(mask.height))
        continue;
      out.at(y, x) = mask.at(static_cast<std::size_t>(ry), static_cast<std::size_t>(rx));
    }
  return out;
}

std::string format_number(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

double parse_number(const std::string& s, const std::string& context) {
  double v = 0.0;
  auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size())
    fail(ErrorCode::Format, "bad number '" + s + "' in op chain '" + context + "'");
  return v;
}

double quantize(double v) { return std::nearbyint(v * 1000.0) / 1000.0; }

}  // namespace

void validate(const AugmentOp& op, std::size_t height, std::size_t width) {
  const std::string name = augment_kind_name(op.kind);
  require(std::isfinite(op.value), ErrorCode::InvalidArgument, name + ": parameter is not finite");
  switch (op.kind) {
    case AugmentKind::Scale:
      require(op.value > 0.0, ErrorCode::InvalidArgument, "scale factor must be > 0");
      break;
    case AugmentKind::Contrast:
      require(op.value > 0.0, ErrorCode::InvalidArgument, "contrast gain must be > 0");
      break;
    case AugmentKind::Crop:
    case AugmentKind::Cutout:
      require(rect_inside(op.rect, height, width), ErrorCode::InvalidArgument,
              name + " rectangle lies outside the " + std::to_string(height) + "x" +
                  std::to_string(width) + " image");
      break;
    default: break;
  }
}

Image apply_augment(const Image& img, const AugmentOp& op) {
  imaging::validate(img);
  validate(op, img.height, img.width);
  switch (op.kind) {
    case AugmentKind::Rotate:
    case AugmentKind::Scale:
    case AugmentKind::Shear: return warp(img, op);
    case AugmentKind::FlipH: {
      Image out = img;
      for (std::size_t y = 0; y < img.height; ++y)
        for (std::size_t x = 0; x < img.width; ++x)
          for (std::size_t c = 0; c < img.channels; ++c)
            out.at(y, x, c) = img.at(y, img.width - 1 - x, c);
      return out;
    }
    case AugmentKind::FlipV: {
      Image out = img;
      const std::size_t stride = img.width * img.channels;
      for (std::size_t y = 0; y < img.height; ++y)
        std::copy_n(&img.pixels[(img.height - 1 - y) * stride], stride, &out.pixels[y * stride]);
      return out;
    }
    case AugmentKind::Contrast: {
      double mean = 0.0;
      for (auto p : img.pixels) mean += p;
      mean /= static_cast<double>(img.pixels.size());
      Image out = img;
      for (auto& p : out.pixels) p = imaging::to_u8((p - mean) * op.value + mean);
      return out;
    }
    case AugmentKind::Brightness: {
      Image out = img;
      for (auto& p : out.pixels) p = imaging::to_u8(p + op.value);
      return out;
    }
    case AugmentKind::Crop:
      return imaging::resize(imaging::crop(img, op.rect), img.height, img.width);
    case AugmentKind::Cutout: {
      Image out = img;
      for (std::size_t y = op.rect.y; y < op.rect.y + op.rect.height; ++y)
        for (std::size_t x = op.rect.x; x < op.rect.x + op.rect.width; ++x)
          for (std::size_t c = 0; c < img.channels; ++c) out.at(y, x, c) = 0;
      return out;
    }
  }
  fail(ErrorCode::InvalidArgument, "unknown augmentation");
}

Mask apply_augment(const Mask& mask, const AugmentOp& op) {
  validate(op, mask.height, mask.width);
  switch (op.kind) {
    case AugmentKind::Rotate:
    case AugmentKind::Scale:
    case AugmentKind::Shear: return warp(mask, op);
    case AugmentKind::FlipH: {
      Mask out = mask;
      for (std::size_t y = 0; y < mask.height; ++y)
        for (std::size_t x = 0; x < mask.width; ++x) out.at(y, x) = mask.at(y, mask.width - 1 - x);
      return out;
    }
    case AugmentKind::FlipV: {
      Mask out = mask;
      for (std::size_t y = 0; y < mask.height; ++y)
        std::copy_n(&mask.bits[(mask.height - 1 - y) * mask.width], mask.width,
                    &out.bits[y * mask.width]);
      return out;
    }
    case AugmentKind::Crop:
      return imaging::resize(imaging::crop(mask, op.rect), mask.height, mask.width);
    case AugmentKind::Contrast:
    case AugmentKind::Brightness:
    case AugmentKind::Cutout: return mask;
  }
  fail(ErrorCode::InvalidArgument, "unknown augmentation");
}

Image apply_chain(const Image& img, const OpChain& chain) {
  Image out = img;
  for (const auto& op : chain) out = apply_augment(out, op);
  return out;
}

Mask apply_chain(const Mask& mask, const OpChain& chain) {
  Mask out = mask;
  for (const auto& op : chain) out = apply_augment(out, op);
  return out;
}

std::string serialize_chain(const OpChain& chain) {
  std::string out;
  for (const auto& op : chain) {
    if (!out.empty()) out += '|';
    out += augment_kind_name(op.kind);
    switch (op.kind) {
      case AugmentKind::FlipH:
      case AugmentKind::FlipV: break;
      case AugmentKind::Crop:
      case AugmentKind::Cutout:
        out += ':' + std::to_string(op.rect.x) + ',' + std::to_string(op.rect.y) + ',' +
               std::to_string(op.rect.width) + ',' + std::to_string(op.rect.height);
        break;
      default: out += ':' + format_number(op.value); break;
    }
  }
  return out;
}

OpChain parse_chain(const std::string& text) {
  OpChain chain;
  if (text.empty()) return chain;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t bar = std::min(text.find('|', start), text.size());
    const std::string token = text.substr(start, bar - start);
    const std::size_t colon = token.find(':');
    const std::string name = token.substr(0, colon);
    const std::string param = colon == std::string::npos ? "" : token.substr(colon + 1);

    AugmentOp op;
    bool known = false;
    for (auto k : {AugmentKind::Rotate, AugmentKind::Scale, AugmentKind::FlipH, AugmentKind::FlipV,
                   AugmentKind::Shear, AugmentKind::Contrast, AugmentKind::Brightness,
                   AugmentKind::Crop, AugmentKind::Cutout})
      if (name == augment_kind_name(k)) {
        op.kind = k;
        known = true;
      }
    require(known, ErrorCode::Format, "unknown op '" + name + "' in chain '" + text + "'");

    if (op.kind == AugmentKind::Crop || op.kind == AugmentKind::Cutout) {
      std::size_t v[4];
      std::size_t pos = 0;
      for (int i = 0; i < 4; ++i) {
        const std::size_t comma = i < 3 ? param.find(',', pos) : param.size();
        require(comma != std::string::npos, ErrorCode::Format,
                "rectangle needs x,y,w,h in chain '" + text + "'");
        v[i] = static_cast<std::size_t>(parse_number(param.substr(pos, comma - pos), text));
        pos = comma + 1;
      }
      op.rect = {v[0], v[1], v[2], v[3]};
    } else if (op.kind != AugmentKind::FlipH && op.kind != AugmentKind::FlipV) {
      op.value = parse_number(param, text);
    }
    chain.push_back(op);
    start = bar + 1;
  }
  return chain;
}

AugmentOp draw_op(AugmentKind kind, const AugmentRanges& r, SeededRng& rng, std::size_t height,
                  std::size_t width) {
  auto side = [&](std::size_t n, double lo, double hi) {
    const double f = rng.uniform(lo, hi);
    return std::clamp<std::size_t>(static_cast<std::size_t>(std::nearbyint(f * n)), 1, n);
  };
  switch (kind) {
    case AugmentKind::Rotate:
      return AugmentOp::rotate(quantize(rng.uniform(-r.rotate_degrees, r.rotate_degrees)));
    case AugmentKind::Scale: return AugmentOp::scale(quantize(rng.uniform(r.scale_min, r.scale_max)));
    case AugmentKind::FlipH: return AugmentOp::flip_h();
    case AugmentKind::FlipV: return AugmentOp::flip_v();
    case AugmentKind::Shear: return AugmentOp::shear(quantize(rng.uniform(-r.shear, r.shear)));
    case AugmentKind::Contrast:
      return AugmentOp::contrast(quantize(rng.uniform(r.contrast_min, r.contrast_max)));
    case AugmentKind::Brightness:
      return AugmentOp::brightness(quantize(rng.uniform(-r.brightness, r.brightness)));
    case AugmentKind::Crop:
    case AugmentKind::Cutout: {
      const bool crop = kind == AugmentKind::Crop;
      const std::size_t w = side(width, crop ? r.crop_min : r.cutout_min,
                                 crop ? r.crop_max : r.cutout_max);
      const std::size_t h = side(height, crop ? r.crop_min : r.cutout_min,
                                 crop ? r.crop_max : r.cutout_max);
      const auto x = static_cast<std::size_t>(rng.below(width - w + 1));
      const auto y = static_cast<std::size_t>(rng.below(height - h + 1));
      return crop ? AugmentOp::crop({x, y, w, h}) : AugmentOp::cutout({x, y, w, h});
    }
  }
  fail(ErrorCode::InvalidArgument, "unknown augmentation");
}

OpChain draw_chain(const AugmentRanges& ranges, SeededRng& rng, std::size_t height,
                   std::size_t width) {
  static constexpr AugmentKind kBalancing[] = {
      AugmentKind::Rotate, AugmentKind::Crop,  AugmentKind::Scale,   AugmentKind::FlipH,
      AugmentKind::FlipV,  AugmentKind::Shear, AugmentKind::Contrast};
  require(ranges.max_chain >= 1, ErrorCode::InvalidArgument, "max_chain must be >= 1");
  const auto n = static_cast<std::size_t>(rng.range(1, static_cast<std::int64_t>(ranges.max_chain)));
  OpChain chain;
  for (std::size_t i = 0; i < n; ++i)
    chain.push_back(draw_op(kBalancing[rng.below(std::size(kBalancing))], ranges, rng, height, width));
  return chain;
}

// --- class balancing -------------------------------------------------------

std::size_t BalancePlan::total() const {
  std::size_t n = 0;
  for (const auto& c : classes) n += c.items.size();
  return n;
}

BalancePlan plan_balance(const std::map<std::size_t, std::vector<std::string>>& ids_by_class,
                         std::size_t target, SeededRng rng, const AugmentRanges& ranges,
                         std::size_t height, std::size_t width) {
  require(target >= 1, ErrorCode::InvalidArgument, "balance target must be >= 1");
  require(!ids_by_class.empty(), ErrorCode::Empty, "no classes to balance");
  BalancePlan plan;
  plan.target = target;
  plan.seed = rng.seed();
  plan.height = height;
  plan.width = width;

  std::map<std::string, std::size_t> owner;
  for (const auto& [cls, ids] : ids_by_class) {
    const std::string cname =
        cls < models::kNumClasses ? std::string(models::kClassNames[cls]) : std::to_string(cls);
    require(!ids.empty(), ErrorCode::Empty, "class " + cname + " has no images");
    for (const auto& id : ids) {
      auto [it, fresh] = owner.emplace(id, cls);
      require(fresh, ErrorCode::Validation, "image id '" + id + "' appears more than once");
    }

    SeededRng crng = rng.derive(cls);
    ClassPlan cp;
    cp.class_index = cls;
    cp.source_count = ids.size();
    cp.target = target;

    std::vector<std::size_t> order(ids.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    crng.shuffle(order);

    if (ids.size() >= target) {
      order.resize(target);
      std::sort(order.begin(), order.end());
      for (auto i : order) cp.items.push_back({ids[i], {}, 0});
    } else {
      for (const auto& id : ids) cp.items.push_back({id, {}, 0});
      cp.synthesize = target - ids.size();
      for (std::size_t j = 0; j < cp.synthesize; ++j) {
        const std::uint64_t seed = crng.derive(j).seed();
        SeededRng irng(seed);
        cp.items.push_back({ids[order[j % order.size()]], draw_chain(ranges, irng, height, width),
                            seed});
      }
    }
    plan.classes.push_back(std::move(cp));
  }
  return plan;
}

BalancePlan plan_balance(const std::map<std::size_t, std::size_t>& class_counts,
                         std::size_t target, SeededRng rng, const AugmentRanges& ranges,
                         std::size_t height, std::size_t width) {
  std::map<std::size_t, std::vector<std::string>> ids;
  for (const auto& [cls, count] : class_counts) {
    const std::string cname =
        cls < models::kNumClasses ? std::string(models::kClassNames[cls]) : std::to_string(cls);
    require(count >= 1, ErrorCode::Empty, "class " + cname + " has no images");
    auto& v = ids[cls];
    v.reserve(count);
    for (std::size_t i = 0; i < count; ++i) v.push_back(cname + "_" + std::to_string(i));
  }
  return plan_balance(ids, target, rng, ranges, height, width);
}

fs::path augmented_path(const fs::path& out_dir, std::string_view class_name,
                        const std::string& src_id, std::size_t n) {
  return out_dir / std::string(class_name) / (src_id + "_aug" + std::to_string(n) + ".png");
}

fs::path companion_mask_path(const fs::path& image_path) {
  fs::path p = image_path;
  p.replace_filename(image_path.stem().string() + "_mask.png");
  return p;
}

namespace {

std::string class_label(std::size_t cls) {
  return cls < models::kNumClasses ? std::string(models::kClassNames[cls]) : std::to_string(cls);
}

template <typename OnSynth>
std::vector<ManifestRow> walk_plan(const BalancePlan& plan,
                                   const std::map<std::string, SourceRecord>& sources,
                                   const fs::path& out_dir, OnSynth&& on_synth) {
  std::vector<ManifestRow> rows;
  rows.reserve(plan.total());
  for (const auto& cp : plan.classes) {
    const std::string cname = class_label(cp.class_index);
    std::map<std::string, std::size_t> uses;
    for (const auto& item : cp.items) {
      ManifestRow row;
      row.src_id = item.src_id;
      row.class_name = cname;
      row.seed = item.seed;
      if (item.chain.empty()) {
        auto it = sources.find(item.src_id);
        row.out_path = it != sources.end() ? it->second.image.string() : item.src_id;
      } else {
        const fs::path out = augmented_path(out_dir, cname, item.src_id, uses[item.src_id]++);
        row.out_path = out.string();
        row.op_chain = serialize_chain(item.chain);
        on_synth(item, out);
      }
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

}  // namespace

std::vector<ManifestRow> plan_manifest(const BalancePlan& plan,
                                       const std::map<std::string, SourceRecord>& sources,
                                       const fs::path& out_dir) {
  return walk_plan(plan, sources, out_dir, [](const PlannedItem&, const fs::path&) {});
}

std::vector<ManifestRow> execute_plan(const BalancePlan& plan,
                                      const std::map<std::string, SourceRecord>& sources,
                                      const fs::path& out_dir) {
  for (const auto& cp : plan.classes)
    for (const auto& item : cp.items)
      require(sources.count(item.src_id) > 0, ErrorCode::Io,
              "source image '" + item.src_id + "' is not in the dataset");

  return walk_plan(plan, sources, out_dir, [&](const PlannedItem& item, const fs::path& out) {
    const SourceRecord& src = sources.at(item.src_id);
    Image img;
    try {
      img = imaging::load_image(src.image);
    } catch (const Error& e) {
      fail(ErrorCode::Io, "cannot read source image '" + item.src_id + "': " + e.what());
    }
    fs::create_directories(out.parent_path());
    imaging::save_png(apply_chain(img, item.chain), out);
    if (src.mask) {
      Mask m;
      try {
        m = imaging::load_mask(*src.mask);
      } catch (const Error& e) {
        fail(ErrorCode::Io, "cannot read mask of '" + item.src_id + "': " + e.what());
      }
      imaging::save_mask_png(apply_chain(m, item.chain), companion_mask_path(out));
    }
  });
}

void write_manifest(const std::vector<ManifestRow>& rows, const fs::path& path) {
  std::vector<csv::Row> out;
  out.reserve(rows.size() + 1);
  out.push_back({"out_path", "src_id", "class", "op_chain", "seed"});
  for (const auto& r : rows)
    out.push_back({r.out_path, r.src_id, r.class_name, r.op_chain, std::to_string(r.seed)});
  csv::write(path, out);
}

std::vector<ManifestRow> read_manifest(const fs::path& path) {
  auto rows = csv::read(path);
  require(!rows.empty() && rows[0] == csv::Row{"out_path", "src_id", "class", "op_chain", "seed"},
          ErrorCode::Format, "augmentation manifest " + path.string() + " has a bad header");
  std::vector<ManifestRow> out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& r = rows[i];
    require(r.size() == 5, ErrorCode::Format,
            path.string() + " row " + std::to_string(i + 1) + ": expected 5 fields");
    out.push_back({r[0], r[1], r[2], r[3], std::stoull(r[4])});
  }
  return out;
}

}  // namespace slc::augment
