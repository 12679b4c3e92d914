#include "image_io.hpp"

#include <png.h>
#include <stdio.h>

// jpeglib.h relies on FILE and size_t being declared first.
#include <jpeglib.h>

#include <array>
#include <csetjmp>
#include <fstream>
#include <memory>
#include <string>

#include "error.hpp"

namespace slc::imaging {

namespace {

using FilePtr = std::unique_ptr<FILE, int (*)(FILE*)>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FILE* f = std::fopen(path.c_str(), mode);
  if (f == nullptr) fail(ErrorCode::Io, "cannot open " + path.string());
  return {f, &std::fclose};
}

bool has_png_signature(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open " + path.string());
  std::array<char, 8> sig{};
  in.read(sig.data(), sig.size());
  return in.gcount() == 8 && png_sig_cmp(reinterpret_cast<png_const_bytep>(sig.data()), 0, 8) == 0;
}

Image load_png(const std::filesystem::path& path) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&png, path.c_str()))
    fail(ErrorCode::Format, "cannot decode PNG " + path.string() + ": " + png.message);
  const bool color = (png.format & PNG_FORMAT_FLAG_COLOR) != 0;
  png.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  Image img(png.height, png.width, color ? 3 : 1);
  // Alpha is composited onto black.
  png_color black{0, 0, 0};
  if (!png_image_finish_read(&png, &black, img.pixels.data(), 0, nullptr)) {
    png_image_free(&png);
    fail(ErrorCode::Format, "cannot decode PNG " + path.string() + ": " + png.message);
  }
  return img;
}

struct JpegErrorManager {
  jpeg_error_mgr base;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->jump, 1);
}

Image load_jpeg(const std::filesystem::path& path) {
  FilePtr file = open_file(path, "rb");
  jpeg_decompress_struct cinfo{};
  JpegErrorManager err{};
  cinfo.err = jpeg_std_error(&err.base);
  err.base.error_exit = jpeg_error_exit;
  Image img;
  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&cinfo);
    fail(ErrorCode::Format, "cannot decode JPEG " + path.string() + ": " + err.message);
  }
  jpeg_create_decompress(&cinfo);
  jpeg_stdio_src(&cinfo, file.get());
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = cinfo.num_components == 1 ? JCS_GRAYSCALE : JCS_RGB;
  jpeg_start_decompress(&cinfo);
  img = Image(cinfo.output_height, cinfo.output_width, cinfo.output_components);
  const std::size_t stride = img.width * img.channels;
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = img.pixels.data() + cinfo.output_scanline * stride;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return img;
}

}  // namespace

Image load_image(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) fail(ErrorCode::Io, "image not found: " + path.string());
  Image img = has_png_signature(path) ? load_png(path) : load_jpeg(path);
  validate(img);
  return img;
}

void save_png(const Image& img, const std::filesystem::path& path) {
  validate(img);
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(img.width);
  png.height = static_cast<png_uint_32>(img.height);
  png.format = img.channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&png, path.c_str(), 0, img.pixels.data(), 0, nullptr))
    fail(ErrorCode::Io, "cannot write PNG " + path.string() + ": " + png.message);
}

void save_jpeg(const Image& img, const std::filesystem::path& path, int quality) {
  validate(img);
  FilePtr file = open_file(path, "wb");
  jpeg_compress_struct cinfo{};
  JpegErrorManager err{};
  cinfo.err = jpeg_std_error(&err.base);
  err.base.error_exit = jpeg_error_exit;
  if (setjmp(err.jump)) {
    jpeg_destroy_compress(&cinfo);
    fail(ErrorCode::Io, "cannot write JPEG " + path.string() + ": " + err.message);
  }
  jpeg_create_compress(&cinfo);
  jpeg_stdio_dest(&cinfo, file.get());
  cinfo.image_width = static_cast<JDIMENSION>(img.width);
  cinfo.image_height = static_cast<JDIMENSION>(img.height);
  cinfo.input_components = static_cast<int>(img.channels);
  cinfo.in_color_space = img.channels == 3 ? JCS_RGB : JCS_GRAYSCALE;
  jpeg_set_defaults(&cinfo);
  jpeg_set_quality(&cinfo, quality, TRUE);
  jpeg_start_compress(&cinfo, TRUE);
  const std::size_t stride = img.width * img.channels;
  while (cinfo.next_scanline < cinfo.image_height) {
    auto row = const_cast<JSAMPROW>(img.pixels.data() + cinfo.next_scanline * stride);
    jpeg_write_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_compress(&cinfo);
  jpeg_destroy_compress(&cinfo);
}

void save_mask_png(const Mask& mask, const std::filesystem::path& path) {
  validate(mask);
  FilePtr file = open_file(path, "wb");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (png == nullptr || info == nullptr) {
    png_destroy_write_struct(&png, nullptr);
    fail(ErrorCode::Internal, "libpng initialisation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    fail(ErrorCode::Io, "cannot write mask PNG " + path.string());
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(mask.width),
               static_cast<png_uint_32>(mask.height), 1, PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<png_byte> row((mask.width + 7) / 8);
  for (std::size_t y = 0; y < mask.height; ++y) {
    std::fill(row.begin(), row.end(), 0);
    for (std::size_t x = 0; x < mask.width; ++x)
      if (mask.at(y, x)) row[x / 8] |= static_cast<png_byte>(0x80 >> (x % 8));
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

Mask load_mask(const std::filesystem::path& path) {
  const Image img = to_grayscale(load_image(path));
  Mask m(img.height, img.width);
  for (std::size_t i = 0; i < m.bits.size(); ++i) m.bits[i] = img.pixels[i] != 0;
  return m;
}

}  // namespace slc::imaging
