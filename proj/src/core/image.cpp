#include "image.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "error.hpp"

namespace slc::imaging {

Image::Image(std::size_t h, std::size_t w, std::size_t c, std::uint8_t fill)
    : height(h), width(w), channels(c), pixels(h * w * c, fill) {}

Mask::Mask(std::size_t h, std::size_t w, std::uint8_t fill)
    : height(h), width(w), bits(h * w, fill) {}

std::size_t Mask::count() const {
  return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
}

std::uint8_t to_u8(double v) {
  const double r = std::nearbyint(v);  // default rounding mode: half to even
  return static_cast<std::uint8_t>(std::clamp(r, 0.0, 255.0));
}

void validate(const Image& img) {
  require(img.channels == 1 || img.channels == 3, ErrorCode::Validation,
          "image must have 1 or 3 channels, got " + std::to_string(img.channels));
  require(img.height > 0 && img.width > 0, ErrorCode::Validation, "image has zero size");
  require(img.pixels.size() == img.height * img.width * img.channels, ErrorCode::Validation,
          "image pixel buffer does not match its dimensions");
}

void validate(const Mask& mask) {
  require(mask.bits.size() == mask.height * mask.width, ErrorCode::Validation,
          "mask buffer does not match its dimensions");
  for (auto b : mask.bits)
    require(b <= 1, ErrorCode::Validation, "mask values must be 0 or 1");
}

void validate(const PiecewiseParams& p) {
  require(p.r1 > 0 && p.r1 <= p.r2 && p.r2 < 255, ErrorCode::InvalidArgument,
          "piecewise params need 0 < r1 <= r2 < 255, got r1=" + std::to_string(p.r1) +
              " r2=" + std::to_string(p.r2));
  require(p.s1 <= p.s2, ErrorCode::InvalidArgument,
          "piecewise params need s1 <= s2, got s1=" + std::to_string(p.s1) +
              " s2=" + std::to_string(p.s2));
}

namespace {

struct Tap {
  std::size_t i0, i1;
  double frac;
};

std::vector<Tap> bilinear_taps(std::size_t in, std::size_t out) {
  std::vector<Tap> taps(out);
  const double scale = static_cast<double>(in) / static_cast<double>(out);
  for (std::size_t o = 0; o < out; ++o) {
    double src = (static_cast<double>(o) + 0.5) * scale - 0.5;
    src = std::clamp(src, 0.0, static_cast<double>(in - 1));
    const auto i0 = static_cast<std::size_t>(std::floor(src));
    const std::size_t i1 = std::min(i0 + 1, in - 1);
    taps[o] = {i0, i1, src - static_cast<double>(i0)};
  }
  return taps;
}

}  // namespace

Image resize(const Image& img, std::size_t out_h, std::size_t out_w) {
  validate(img);
  require(out_h >= 1 && out_w >= 1, ErrorCode::InvalidArgument,
          "resize target must be at least 1x1");
  if (out_h == img.height && out_w == img.width) return img;
  const auto ty = bilinear_taps(img.height, out_h);
  const auto tx = bilinear_taps(img.width, out_w);
  Image out(out_h, out_w, img.channels);
  for (std::size_t y = 0; y < out_h; ++y) {
    for (std::size_t x = 0; x < out_w; ++x) {
      for (std::size_t c = 0; c < img.channels; ++c) {
        const double a = img.at(ty[y].i0, tx[x].i0, c), b = img.at(ty[y].i0, tx[x].i1, c);
        const double d = img.at(ty[y].i1, tx[x].i0, c), e = img.at(ty[y].i1, tx[x].i1, c);
        const double top = a + (b - a) * tx[x].frac;
        const double bottom = d + (e - d) * tx[x].frac;
        out.at(y, x, c) = to_u8(top + (bottom - top) * ty[y].frac);
      }
    }
  }
  return out;
}

Mask resize(const Mask& mask, std::size_t out_h, std::size_t out_w) {
  require(out_h >= 1 && out_w >= 1, ErrorCode::InvalidArgument,
          "resize target must be at least 1x1");
  Mask out(out_h, out_w);
  for (std::size_t y = 0; y < out_h; ++y) {
    const std::size_t sy = std::min(mask.height - 1, (2 * y + 1) * mask.height / (2 * out_h));
    for (std::size_t x = 0; x < out_w; ++x) {
      const std::size_t sx = std::min(mask.width - 1, (2 * x + 1) * mask.width / (2 * out_w));
      out.at(y, x) = mask.at(sy, sx);
    }
  }
  return out;
}

Image to_grayscale(const Image& img) {
  validate(img);
  if (img.channels == 1) return img;
  Image out(img.height, img.width, 1);
  for (std::size_t i = 0; i < img.height * img.width; ++i) {
    const std::uint8_t* p = &img.pixels[i * 3];
    out.pixels[i] = to_u8(0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2]);
  }
  return out;
}

double piecewise_value(double pix, const PiecewiseParams& p) {
  const double r1 = p.r1, s1 = p.s1, r2 = p.r2, s2 = p.s2;
  if (0 <= pix && pix <= r1) return (s1 / r1) * pix;
  if (r1 < pix && pix <= r2) return ((s2 - s1) / (r2 - r1)) * (pix - r1) + s1;
  return ((255 - s2) / (255 - r2)) * (pix - r2) + s2;
}

Image piecewise_linear(const Image& img, const PiecewiseParams& p) {
  validate(img);
  validate(p);
  std::array<std::uint8_t, 256> lut{};
  for (int v = 0; v < 256; ++v) lut[v] = to_u8(piecewise_value(v, p));
  Image out = img;
  for (auto& px : out.pixels) px = lut[px];
  return out;
}

double minkowski_distance(std::span<const double> x, std::span<const double> y, double p) {
  require(x.size() == y.size(), ErrorCode::Shape,
          "minkowski_distance: lengths differ (" + std::to_string(x.size()) + " vs " +
              std::to_string(y.size()) + ")");
  require(p >= 1.0, ErrorCode::InvalidArgument, "minkowski_distance: p must be >= 1");
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += std::pow(std::abs(x[i] - y[i]), p);
  return std::pow(s, 1.0 / p);
}

std::array<double, 3> minkowski_estimates(const Image& img, double p) {
  validate(img);
  require(img.channels == 3, ErrorCode::Validation, "Minkowski estimates need a 3-channel image");
  require(p >= 1.0, ErrorCode::InvalidArgument, "Minkowski p must be >= 1");
  std::array<double, 256> powers{};
  for (int v = 0; v < 256; ++v) powers[v] = std::pow(v / 255.0, p);
  std::array<double, 3> sums{};
  const std::size_t n = img.height * img.width;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < 3; ++c) sums[c] += powers[img.pixels[i * 3 + c]];
  std::array<double, 3> e{};
  for (std::size_t c = 0; c < 3; ++c) e[c] = std::pow(sums[c] / static_cast<double>(n), 1.0 / p);
  return e;
}

std::array<double, 3> shades_of_gray_gains(const Image& img, double p) {
  const auto e = minkowski_estimates(img, p);
  for (std::size_t c = 0; c < 3; ++c)
    require(e[c] > 0.0, ErrorCode::Validation,
            "shades_of_gray: channel " + std::to_string(c) + " is identically zero");
  const double mean = (e[0] + e[1] + e[2]) / 3.0;
  return {mean / e[0], mean / e[1], mean / e[2]};
}

std::vector<double> shades_of_gray_unclamped(const Image& img, double p) {
  const auto g = shades_of_gray_gains(img, p);
  std::vector<double> out(img.pixels.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = img.pixels[i] * g[i % 3];
  return out;
}

Image shades_of_gray(const Image& img, double p) {
  const auto corrected = shades_of_gray_unclamped(img, p);
  Image out(img.height, img.width, 3);
  for (std::size_t i = 0; i < corrected.size(); ++i) out.pixels[i] = to_u8(corrected[i]);
  return out;
}

Rect lesion_crop_rect(const Image& img, std::uint8_t threshold) {
  const Image gray = to_grayscale(img);
  std::size_t min_x = gray.width, max_x = 0, min_y = gray.height, max_y = 0, n = 0;
  double sum_x = 0.0, sum_y = 0.0;
  for (std::size_t y = 0; y < gray.height; ++y) {
    for (std::size_t x = 0; x < gray.width; ++x) {
      if (gray.at(y, x) < threshold) continue;
      min_x = std::min(min_x, x);
      max_x = std::max(max_x, x);
      min_y = std::min(min_y, y);
      max_y = std::max(max_y, y);
      sum_x += static_cast<double>(x);
      sum_y += static_cast<double>(y);
      ++n;
    }
  }
  require(n > 0, ErrorCode::Empty,
          "crop_black_border: no pixel reaches threshold " + std::to_string(threshold));

  // Horizontal and vertical spans between extreme points; the longer is the
  // major axis and keeps its orientation.
  const std::size_t span_x = max_x - min_x + 1;
  const std::size_t span_y = max_y - min_y + 1;
  const double cx = sum_x / static_cast<double>(n);
  const double cy = sum_y / static_cast<double>(n);

  auto place = [](double centre, std::size_t span, std::size_t limit) {
    const double start = std::nearbyint(centre - (static_cast<double>(span) - 1.0) / 2.0);
    const double lo = std::max(0.0, start);
    const double hi = std::min(static_cast<double>(limit), start + static_cast<double>(span));
    return std::pair<std::size_t, std::size_t>{static_cast<std::size_t>(lo),
                                               static_cast<std::size_t>(hi - lo)};
  };
  const auto [x0, w] = place(cx, span_x, gray.width);
  const auto [y0, h] = place(cy, span_y, gray.height);
  return {x0, y0, w, h};
}

Image crop(const Image& img, const Rect& r) {
  validate(img);
  require(r.width > 0 && r.height > 0 && r.x + r.width <= img.width &&
              r.y + r.height <= img.height,
          ErrorCode::InvalidArgument, "crop rectangle outside image bounds");
  Image out(r.height, r.width, img.channels);
  for (std::size_t y = 0; y < r.height; ++y)
    std::copy_n(&img.pixels[((r.y + y) * img.width + r.x) * img.channels],
                r.width * img.channels, &out.pixels[y * r.width * img.channels]);
  return out;
}

Mask crop(const Mask& mask, const Rect& r) {
  require(r.width > 0 && r.height > 0 && r.x + r.width <= mask.width &&
              r.y + r.height <= mask.height,
          ErrorCode::InvalidArgument, "crop rectangle outside mask bounds");
  Mask out(r.height, r.width);
  for (std::size_t y = 0; y < r.height; ++y)
    std::copy_n(&mask.bits[(r.y + y) * mask.width + r.x], r.width, &out.bits[y * r.width]);
  return out;
}

Image crop_black_border(const Image& img, std::uint8_t threshold) {
  return crop(img, lesion_crop_rect(img, threshold));
}

Image apply_mask(const Image& img, const Mask& mask) {
  validate(img);
  require(img.height == mask.height && img.width == mask.width, ErrorCode::Shape,
          "apply_mask: image is " + std::to_string(img.height) + "x" + std::to_string(img.width) +
              " but mask is " + std::to_string(mask.height) + "x" + std::to_string(mask.width));
  Image out = img;
  for (std::size_t i = 0; i < mask.bits.size(); ++i)
    if (mask.bits[i] == 0)
      for (std::size_t c = 0; c < img.channels; ++c) out.pixels[i * img.channels + c] = 0;
  return out;
}

Tensor to_tensor(const Image& img) {
  validate(img);
  Tensor t({img.channels, img.height, img.width});
  for (std::size_t c = 0; c < img.channels; ++c)
    for (std::size_t y = 0; y < img.height; ++y)
      for (std::size_t x = 0; x < img.width; ++x)
        t.at(c, y, x) = static_cast<float>(img.at(y, x, c) / 255.0);
  return t;
}

Tensor mask_to_tensor(const Mask& mask, std::size_t channels) {
  Tensor t({channels, mask.height, mask.width});
  const std::size_t hw = mask.height * mask.width;
  for (std::size_t c = 0; c < channels; ++c)
    for (std::size_t i = 0; i < hw; ++i) t[c * hw + i] = mask.bits[i] ? 1.0f : 0.0f;
  return t;
}

Mask threshold_mask(const Image& gray, std::uint8_t threshold) {
  require(gray.channels == 1, ErrorCode::Validation, "threshold_mask needs a 1-channel image");
  Mask m(gray.height, gray.width);
  for (std::size_t i = 0; i < m.bits.size(); ++i) m.bits[i] = gray.pixels[i] >= threshold;
  return m;
}

Image mask_to_image(const Mask& mask) {
  Image img(mask.height, mask.width, 1);
  for (std::size_t i = 0; i < mask.bits.size(); ++i) img.pixels[i] = mask.bits[i] ? 255 : 0;
  return img;
}

}  // namespace slc::imaging
