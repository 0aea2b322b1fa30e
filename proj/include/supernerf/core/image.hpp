#pragma once

#include <cstddef>
#include <vector>

namespace supernerf {

/// Row-major H x W x 3 float image. Values are nominally in [0, 1].
struct ImageBuffer {
  int height = 0;
  int width = 0;
  std::vector<float> pixels;

  ImageBuffer() = default;
  ImageBuffer(int h, int w, float fill = 0.0f);

  [[nodiscard]] std::size_t pixel_count() const { return static_cast<std::size_t>(height) * width; }
  [[nodiscard]] std::size_t size() const { return pixels.size(); }

  float& at(int y, int x, int c) { return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
  [[nodiscard]] float at(int y, int x, int c) const {
    return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c];
  }

  /// Throws ShapeError unless pixels.size() == height * width * 3.
  void check_shape() const;

  friend bool operator==(const ImageBuffer&, const ImageBuffer&) = default;
};

/// Mean of each s x s block. Throws ShapeError when the size is not divisible by s.
ImageBuffer box_downsample(const ImageBuffer& img, int s);

/// Repeats each pixel into an s x s block.
ImageBuffer replicate_upsample(const ImageBuffer& img, int s);

void require_same_shape(const ImageBuffer& a, const ImageBuffer& b, const char* what);

}  // namespace supernerf
