#include "segmentation.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "error.hpp"
#include "ops.hpp"

namespace slc::seg {

using nn::LayerKind;

Mask largest_component(const Mask& mask) {
  const std::size_t h = mask.height, w = mask.width;
  std::vector<std::uint32_t> label(h * w, 0);
  std::vector<std::size_t> stack;
  std::uint32_t best_label = 0, next = 0;
  std::size_t best_size = 0;
  for (std::size_t start = 0; start < h * w; ++start) {
    if (!mask.bits[start] || label[start]) continue;
    ++next;
    std::size_t size = 0;
    stack.push_back(start);
    label[start] = next;
    while (!stack.empty()) {
      const std::size_t i = stack.back();
      stack.pop_back();
      ++size;
      const std::size_t y = i / w, x = i % w;
      auto visit = [&](std::size_t j) {
        if (mask.bits[j] && !label[j]) {
          label[j] = next;
          stack.push_back(j);
        }
      };
      if (x > 0) visit(i - 1);
      if (x + 1 < w) visit(i + 1);
      if (y > 0) visit(i - w);
      if (y + 1 < h) visit(i + w);
    }
    if (size > best_size) {
      best_size = size;
      best_label = next;
    }
  }
  Mask out(h, w);
  if (best_label == 0) return out;
  for (std::size_t i = 0; i < h * w; ++i) out.bits[i] = label[i] == best_label;
  return out;
}

Mask threshold_segment(const Image& img, const imaging::PiecewiseParams& params,
                       std::uint8_t threshold, bool invert) {
  imaging::validate(params);
  const Image gray = imaging::to_grayscale(imaging::piecewise_linear(img, params));
  Mask m = imaging::threshold_mask(gray, threshold);
  if (invert)
    for (auto& b : m.bits) b = !b;
  require(m.count() > 0, ErrorCode::Empty,
          "threshold segmentation found no lesion pixels at threshold " +
              std::to_string(threshold));
  return largest_component(m);
}

double dice(const Mask& a, const Mask& b) {
  require(a.height == b.height && a.width == b.width, ErrorCode::Shape,
          "dice: masks differ in size");
  std::size_t inter = 0, sa = 0, sb = 0;
  for (std::size_t i = 0; i < a.bits.size(); ++i) {
    inter += a.bits[i] && b.bits[i];
    sa += a.bits[i] != 0;
    sb += b.bits[i] != 0;
  }
  if (sa + sb == 0) return 1.0;
  return 2.0 * static_cast<double>(inter) / static_cast<double>(sa + sb);
}

void validate(const UNetConfig& cfg) {
  require(cfg.depth >= 1, ErrorCode::InvalidArgument, "U-Net depth must be >= 1");
  require(cfg.base_channels >= 1, ErrorCode::InvalidArgument,
          "U-Net base_channels must be >= 1");
  require(cfg.in_channels == 1 || cfg.in_channels == 3, ErrorCode::InvalidArgument,
          "U-Net in_channels must be 1 or 3");
  const std::size_t unit = std::size_t{1} << cfg.depth;
  require(cfg.input_size >= unit && cfg.input_size % unit == 0, ErrorCode::InvalidArgument,
          "U-Net input_size " + std::to_string(cfg.input_size) +
              " is not a positive multiple of 2^depth = " + std::to_string(unit));
}

namespace {

std::size_t conv_block(nn::NetworkSpec& net, const std::string& prefix, std::size_t in,
                       std::size_t channels) {
  std::size_t x = in;
  for (int k = 1; k <= 2; ++k) {
    const std::string n = prefix + ".conv" + std::to_string(k);
    x = net.add(LayerKind::Pad1, n + ".pad", x);
    x = net.add(LayerKind::Conv3x3, n, x, channels);
    x = net.add(LayerKind::Relu, n + ".relu", x);
  }
  return x;
}

}  // namespace

nn::NetworkSpec build_unet(const UNetConfig& cfg) {
  validate(cfg);
  nn::NetworkSpec net("unet");
  std::size_t x = net.add_input("image", {cfg.in_channels, cfg.input_size, cfg.input_size});
  std::vector<std::size_t> skips;
  for (std::size_t l = 0; l < cfg.depth; ++l) {
    const std::string p = "enc" + std::to_string(l + 1);
    x = conv_block(net, p, x, cfg.base_channels << l);
    skips.push_back(x);
    x = net.add(LayerKind::MaxPool2, p + ".pool", x);
  }
  x = conv_block(net, "bottleneck", x, cfg.base_channels << cfg.depth);
  for (std::size_t l = cfg.depth; l-- > 0;) {
    const std::string p = "dec" + std::to_string(l + 1);
    const std::size_t up = net.add(LayerKind::Upsample2, p + ".up", x);
    const std::size_t cat = net.add(LayerKind::ConcatChannels, p + ".concat", {skips[l], up});
    x = conv_block(net, p, cat, cfg.base_channels << l);
  }
  x = net.add(LayerKind::Conv1x1, "head", x, 1);
  net.add(LayerKind::Sigmoid, "head.sigmoid", x);
  return net;
}

namespace {

Tensor image_input(const nn::NetworkSpec& spec, const Image& img) {
  const Shape& in = spec.layer(spec.inputs().at(0)).output_shape;
  require(img.height == in[1] && img.width == in[2], ErrorCode::Shape,
          "segmentation input must be " + std::to_string(in[2]) + "x" + std::to_string(in[1]) +
              ", got " + std::to_string(img.width) + "x" + std::to_string(img.height));
  if (in[0] == 1 && img.channels == 3) return imaging::to_tensor(imaging::to_grayscale(img));
  require(img.channels == in[0], ErrorCode::Shape,
          "segmentation input needs " + std::to_string(in[0]) + " channels, got " +
              std::to_string(img.channels));
  return imaging::to_tensor(img);
}

}  // namespace

Tensor predict_probabilities(const nn::NetworkSpec& spec, const nn::Weights& weights,
                             const Image& img) {
  const Tensor x = image_input(spec, img);
  return nn::forward(spec, weights, std::span<const Tensor>(&x, 1));
}

Mask predict_mask(const nn::NetworkSpec& spec, const nn::Weights& weights, const Image& img) {
  const Tensor p = predict_probabilities(spec, weights, img);
  Mask m(img.height, img.width);
  for (std::size_t i = 0; i < m.bits.size(); ++i) m.bits[i] = p[i] >= 0.5f;
  return m;
}

double mean_dice(const nn::NetworkSpec& spec, const nn::Weights& weights,
                 const std::vector<SegSample>& samples) {
  require(!samples.empty(), ErrorCode::Empty, "mean_dice: no samples");
  double s = 0.0;
  for (const auto& smp : samples) s += dice(predict_mask(spec, weights, smp.image), smp.mask);
  return s / static_cast<double>(samples.size());
}

UNetTrainResult train_unet(const nn::NetworkSpec& spec, const UNetConfig& cfg,
                           const std::vector<SegSample>& train_set,
                           const std::vector<SegSample>& holdout,
                           const UNetTrainOptions& options, const train::LogFn& log) {
  validate(cfg);
  require(!train_set.empty(), ErrorCode::Empty, "U-Net training set is empty");
  require(!holdout.empty(), ErrorCode::Empty, "U-Net held-out set is empty");
  require(options.batch_size >= 1, ErrorCode::InvalidArgument, "batch size must be >= 1");
  for (const auto& s : train_set)
    require(s.image.height == s.mask.height && s.image.width == s.mask.width, ErrorCode::Shape,
            "U-Net training mask does not match its image");

  std::vector<Tensor> inputs, targets;
  for (const auto& s : train_set) {
    inputs.push_back(image_input(spec, s.image));
    targets.push_back(imaging::mask_to_tensor(s.mask, 1));
  }

  const SeededRng root(options.seed);
  SeededRng init_rng = root.derive(0);
  UNetTrainResult r;
  r.weights = nn::init_weights(spec, init_rng);
  train::AdamState state = train::make_adam_state(r.weights, options.adam);
  r.dice_history.push_back(mean_dice(spec, r.weights, holdout));

  std::vector<std::size_t> order(train_set.size());
  for (std::size_t epoch = 1; epoch <= options.epochs; ++epoch) {
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    SeededRng erng = root.derive(epoch);
    erng.shuffle(order);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += options.batch_size) {
      const std::size_t end = std::min(order.size(), start + options.batch_size);
      r.weights.zero_grad();
      for (std::size_t b = start; b < end; ++b) {
        const Tensor& x = inputs[order[b]];
        const Tensor& t = targets[order[b]];
        const nn::Trace trace = nn::forward_trace(spec, r.weights, std::span<const Tensor>(&x, 1));
        const Tensor& p = trace.output();
        epoch_loss += ops::dice_loss(p, t) + ops::binary_cross_entropy(p, t);
        Tensor g = ops::dice_loss_backward(p, t);
        const Tensor gb = ops::binary_cross_entropy_backward(p, t);
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += gb[i];
        nn::backward(spec, r.weights, trace, g);
      }
      const float inv = static_cast<float>(1.0 / static_cast<double>(end - start));
      for (auto& nt : r.weights.tensors())
        for (float& v : nt.value.grad()) v *= inv;
      train::adam_step(r.weights, state);
    }
    r.weights.drop_grad();
    r.loss_history.push_back(epoch_loss / static_cast<double>(order.size()));
    r.dice_history.push_back(mean_dice(spec, r.weights, holdout));
    if (log)
      log("epoch " + std::to_string(epoch) + ": loss " + std::to_string(r.loss_history.back()) +
          ", held-out dice " + std::to_string(r.dice_history.back()));
  }
  return r;
}

// --- synthetic data --------------------------------------------------------

SegSample synthetic_disc(const DiscOptions& opt, SeededRng& rng) {
  require(opt.size >= 8, ErrorCode::InvalidArgument, "synthetic disc size must be >= 8");
  require(opt.channels == 1 || opt.channels == 3, ErrorCode::InvalidArgument,
          "synthetic disc channels must be 1 or 3");
  const double s = static_cast<double>(opt.size);
  const double r = s * rng.uniform(opt.min_radius, opt.max_radius);
  const double aspect = 1.0 + rng.uniform(-opt.ellipticity, opt.ellipticity);
  const double rx = r * std::sqrt(aspect), ry = r / std::sqrt(aspect);
  const double angle = rng.uniform(0.0, std::numbers::pi);
  const double reach = std::max(rx, ry);
  const double cx = rng.uniform(reach * 0.6, s - reach * 0.6);
  const double cy = rng.uniform(reach * 0.6, s - reach * 0.6);

  // Background and lesion colours, lesion always well separated in luma.
  std::array<double, 3> bg, fg;
  for (std::size_t c = 0; c < 3; ++c) {
    if (opt.bright_lesion) {
      bg[c] = rng.uniform(10.0, 50.0);
      fg[c] = rng.uniform(170.0, 240.0);
    } else {
      bg[c] = rng.uniform(170.0, 230.0) - 20.0 * static_cast<double>(c);
      fg[c] = rng.uniform(40.0, 100.0) - 10.0 * static_cast<double>(c);
    }
  }

  SegSample out{Image(opt.size, opt.size, opt.channels), Mask(opt.size, opt.size)};
  const double ca = std::cos(angle), sa = std::sin(angle);
  for (std::size_t y = 0; y < opt.size; ++y) {
    for (std::size_t x = 0; x < opt.size; ++x) {
      const double dx = x + 0.5 - cx, dy = y + 0.5 - cy;
      const double u = (dx * ca + dy * sa) / rx, v = (-dx * sa + dy * ca) / ry;
      const bool inside = u * u + v * v <= 1.0;
      out.mask.at(y, x) = inside;
      const auto& col = inside ? fg : bg;
      if (opt.channels == 1) {
        const double g = 0.299 * col[0] + 0.587 * col[1] + 0.114 * col[2];
        out.image.at(y, x) = imaging::to_u8(g + opt.noise * rng.normal());
      } else {
        for (std::size_t c = 0; c < 3; ++c)
          out.image.at(y, x, c) = imaging::to_u8(col[c] + opt.noise * rng.normal());
      }
    }
  }
  return out;
}

std::vector<SegSample> synthetic_discs(std::size_t count, const DiscOptions& opt,
                                       SeededRng rng) {
  std::vector<SegSample> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    SeededRng r = rng.derive(i);
    out.push_back(synthetic_disc(opt, r));
  }
  return out;
}

}  // namespace slc::seg
