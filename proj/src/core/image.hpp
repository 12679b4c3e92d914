#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "tensor.hpp"

namespace slc::imaging {

/// 8-bit raster, row-major with interleaved channels (1 = gray, 3 = RGB).
struct Image {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 0;
  std::vector<std::uint8_t> pixels;

  Image() = default;
  Image(std::size_t h, std::size_t w, std::size_t c, std::uint8_t fill = 0);

  std::uint8_t& at(std::size_t y, std::size_t x, std::size_t c = 0) {
    return pixels[(y * width + x) * channels + c];
  }
  std::uint8_t at(std::size_t y, std::size_t x, std::size_t c = 0) const {
    return pixels[(y * width + x) * channels + c];
  }
  bool empty() const noexcept { return pixels.empty(); }

  friend bool operator==(const Image&, const Image&) = default;
};

/// Binary H x W mask; every value is 0 or 1.
struct Mask {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> bits;

  Mask() = default;
  Mask(std::size_t h, std::size_t w, std::uint8_t fill = 0);

  std::uint8_t& at(std::size_t y, std::size_t x) { return bits[y * width + x]; }
  std::uint8_t at(std::size_t y, std::size_t x) const { return bits[y * width + x]; }
  std::size_t count() const;

  friend bool operator==(const Mask&, const Mask&) = default;
};

/// Breakpoints of the three-segment intensity stretch.
struct PiecewiseParams {
  std::uint8_t r1 = 70;
  std::uint8_t s1 = 0;
  std::uint8_t r2 = 140;
  std::uint8_t s2 = 255;

  friend bool operator==(const PiecewiseParams&, const PiecewiseParams&) = default;
};

/// Half-open pixel rectangle.
struct Rect {
  std::size_t x = 0;
  std::size_t y = 0;
  std::size_t width = 0;
  std::size_t height = 0;

  friend bool operator==(const Rect&, const Rect&) = default;
};

/// Round half to even and clamp to 0..255.
std::uint8_t to_u8(double v);

void validate(const Image& img);
void validate(const Mask& mask);
void validate(const PiecewiseParams& p);

/// Bilinear resampling with half-pixel centres.
Image resize(const Image& img, std::size_t out_h, std::size_t out_w);
Mask resize(const Mask& mask, std::size_t out_h, std::size_t out_w);

/// round(0.299 R + 0.587 G + 0.114 B); 1-channel input passes through.
Image to_grayscale(const Image& img);

/// Applies the stretch per pixel and channel.
Image piecewise_linear(const Image& img, const PiecewiseParams& p);
/// Unrounded value of the stretch at one intensity.
double piecewise_value(double pix, const PiecewiseParams& p);

double minkowski_distance(std::span<const double> x, std::span<const double> y, double p);

/// Per-channel (mean (I_c/255)^p)^(1/p).
std::array<double, 3> minkowski_estimates(const Image& img, double p);
/// Per-channel gains mean(e) / e_c.
std::array<double, 3> shades_of_gray_gains(const Image& img, double p);
/// Corrected intensities before rounding/clamping, interleaved like pixels.
std::vector<double> shades_of_gray_unclamped(const Image& img, double p);
/// Colour constancy with the Minkowski p-norm illuminant estimate.
Image shades_of_gray(const Image& img, double p = 6.0);

/// Rectangle spanned by the thresholded foreground's extreme points,
/// centred on the foreground centroid and clipped to the image.
Rect lesion_crop_rect(const Image& img, std::uint8_t threshold);
Image crop(const Image& img, const Rect& r);
Mask crop(const Mask& mask, const Rect& r);
Image crop_black_border(const Image& img, std::uint8_t threshold = 10);

/// Pixels outside the mask become 0 in every channel.
Image apply_mask(const Image& img, const Mask& mask);

/// [C,H,W] float tensor with values v / 255.
Tensor to_tensor(const Image& img);
/// [channels,H,W] tensor of 0/1, the mask replicated per channel.
Tensor mask_to_tensor(const Mask& mask, std::size_t channels = 1);

Mask threshold_mask(const Image& gray, std::uint8_t threshold);
Image mask_to_image(const Mask& mask);

}  // namespace slc::imaging
