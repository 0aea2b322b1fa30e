#include "supernerf/core/png_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <memory>

#include "supernerf/core/error.hpp"

namespace supernerf {
namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] void png_error_fn(png_structp png, png_const_charp msg) {
  auto* what = static_cast<std::string*>(png_get_error_ptr(png));
  if (what) *what = msg;
  png_longjmp(png, 1);
}

void png_warning_fn(png_structp, png_const_charp) {}

void write_rows(const std::filesystem::path& path, int width, int height, int bit_depth,
                const std::vector<std::uint8_t>& raw) {
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw IoError("cannot open for writing: " + path.string());
  std::string err;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &err, png_error_fn, png_warning_fn);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw IoError("libpng initialisation failed");
  }
  const std::size_t stride = static_cast<std::size_t>(width) * 3 * (bit_depth / 8);
  std::vector<png_bytep> rows(height);
  for (int y = 0; y < height; ++y) rows[y] = const_cast<png_bytep>(raw.data() + y * stride);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("png write failed for " + path.string() + ": " + err);
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, width, height, bit_depth, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace

void write_png(const std::filesystem::path& path, const ImageBuffer& img, int bit_depth) {
  img.check_shape();
  if (bit_depth != 8 && bit_depth != 16) throw ConfigError("png bit depth must be 8 or 16");
  const std::size_t n = img.pixels.size();
  std::vector<std::uint8_t> raw(n * (bit_depth / 8));
  for (std::size_t i = 0; i < n; ++i) {
    const float v = std::clamp(img.pixels[i], 0.0f, 1.0f);
    if (bit_depth == 8) {
      raw[i] = static_cast<std::uint8_t>(std::lround(v * 255.0f));
    } else {
      const auto q = static_cast<std::uint16_t>(std::lround(static_cast<double>(v) * 65535.0));
      raw[2 * i] = static_cast<std::uint8_t>(q >> 8);  // PNG is big-endian
      raw[2 * i + 1] = static_cast<std::uint8_t>(q & 0xff);
    }
  }
  write_rows(path, img.width, img.height, bit_depth, raw);
}

void write_png_rgb8(const std::filesystem::path& path, int width, int height,
                    const std::vector<std::uint8_t>& rgb) {
  if (rgb.size() != static_cast<std::size_t>(width) * height * 3) throw ShapeError("rgb8 buffer size mismatch");
  write_rows(path, width, height, 8, rgb);
}

ImageBuffer read_png(const std::filesystem::path& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw IoError("missing image file: " + path.string());
  png_byte sig[8];
  if (std::fread(sig, 1, 8, fp.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw IoError("not a png file: " + path.string());
  }
  std::string err;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &err, png_error_fn, png_warning_fn);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("libpng initialisation failed");
  }
  ImageBuffer img;
  std::vector<png_byte> raw;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("corrupt png " + path.string() + ": " + err);
  }
  png_init_io(png, fp.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  const int width = static_cast<int>(png_get_image_width(png, info));
  const int height = static_cast<int>(png_get_image_height(png, info));
  const int color = png_get_color_type(png, info);
  int depth = png_get_bit_depth(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_gray_to_rgb(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  if (depth < 8) {
    png_set_expand(png);
    depth = 8;
  }
  if (depth == 16) png_set_swap(png);  // host little-endian u16
  png_read_update_info(png, info);
  const std::size_t stride = png_get_rowbytes(png, info);
  raw.resize(stride * height);
  rows.resize(height);
  for (int y = 0; y < height; ++y) rows[y] = raw.data() + y * stride;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  img = ImageBuffer(height, width);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width * 3; ++x) {
      float v;
      if (depth == 16) {
        std::uint16_t q;
        std::memcpy(&q, rows[y] + 2 * x, 2);
        v = static_cast<float>(q / 65535.0);
      } else {
        v = rows[y][x] / 255.0f;
      }
      img.pixels[static_cast<std::size_t>(y) * width * 3 + x] = v;
    }
  }
  return img;
}

}  // namespace supernerf
