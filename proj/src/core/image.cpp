#include "supernerf/core/image.hpp"

#include <string>

#include "supernerf/core/error.hpp"

namespace supernerf {

ImageBuffer::ImageBuffer(int h, int w, float fill)
    : height(h), width(w), pixels(static_cast<std::size_t>(h) * w * 3, fill) {
  if (h < 0 || w < 0) throw ShapeError("negative image dimensions");
}

void ImageBuffer::check_shape() const {
  if (height < 0 || width < 0 || pixels.size() != pixel_count() * 3) {
    throw ShapeError("image buffer holds " + std::to_string(pixels.size()) + " values, expected " +
                     std::to_string(pixel_count() * 3));
  }
}

ImageBuffer box_downsample(const ImageBuffer& img, int s) {
  img.check_shape();
  if (s < 1) throw ShapeError("scale factor must be positive");
  if (img.height % s != 0 || img.width % s != 0) {
    throw ShapeError("image " + std::to_string(img.height) + "x" + std::to_string(img.width) +
                     " is not divisible by scale " + std::to_string(s));
  }
  ImageBuffer out(img.height / s, img.width / s);
  const double count = static_cast<double>(s) * s;
  for (int y = 0; y < out.height; ++y) {
    for (int x = 0; x < out.width; ++x) {
      double acc[3] = {0.0, 0.0, 0.0};
      for (int dy = 0; dy < s; ++dy) {
        for (int dx = 0; dx < s; ++dx) {
          for (int c = 0; c < 3; ++c) acc[c] += img.at(y * s + dy, x * s + dx, c);
        }
      }
      for (int c = 0; c < 3; ++c) out.at(y, x, c) = static_cast<float>(acc[c] / count);
    }
  }
  return out;
}

ImageBuffer replicate_upsample(const ImageBuffer& img, int s) {
  img.check_shape();
  if (s < 1) throw ShapeError("scale factor must be positive");
  ImageBuffer out(img.height * s, img.width * s);
  for (int y = 0; y < out.height; ++y) {
    for (int x = 0; x < out.width; ++x) {
      for (int c = 0; c < 3; ++c) out.at(y, x, c) = img.at(y / s, x / s, c);
    }
  }
  return out;
}

void require_same_shape(const ImageBuffer& a, const ImageBuffer& b, const char* what) {
  a.check_shape();
  b.check_shape();
  if (a.height != b.height || a.width != b.width) {
    throw ShapeError(std::string(what) + ": shape mismatch " + std::to_string(a.height) + "x" +
                     std::to_string(a.width) + " vs " + std::to_string(b.height) + "x" +
                     std::to_string(b.width));
  }
}

}  // namespace supernerf
