#pragma once

#include <filesystem>

#include "image.hpp"

namespace slc::imaging {

/// Decodes an 8-bit PNG or baseline JPEG, chosen by file signature. Gray
/// sources stay 1-channel; colour sources (with alpha dropped) become RGB.
Image load_image(const std::filesystem::path& path);

void save_png(const Image& img, const std::filesystem::path& path);
void save_jpeg(const Image& img, const std::filesystem::path& path, int quality = 95);

/// Writes a 1-bit grayscale PNG.
void save_mask_png(const Mask& mask, const std::filesystem::path& path);
/// Any PNG/JPEG; nonzero gray level means foreground.
Mask load_mask(const std::filesystem::path& path);

}  // namespace slc::imaging
