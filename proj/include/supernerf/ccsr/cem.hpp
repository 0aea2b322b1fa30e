#pragma once

#include <string>

#include "supernerf/ccsr/backbone.hpp"
#include "supernerf/core/error.hpp"
#include "supernerf/core/image.hpp"

namespace supernerf::ccsr {

enum class KernelKind { Box };

/// Degradation operator H. Only s x s box averaging is implemented; its
/// pseudo-inverse is pixel replication.
struct BlurKernel {
  int scale = 4;
  KernelKind kind = KernelKind::Box;

  void validate() const;
  [[nodiscard]] ImageBuffer apply(const ImageBuffer& hr) const { return box_downsample(hr, scale); }
  [[nodiscard]] ImageBuffer pseudo_inverse(const ImageBuffer& lr) const { return replicate_upsample(lr, scale); }
};

/// C_HR = (I - H+ H) candidate + H+ lr, so that H C_HR = lr exactly.
ImageBuffer cem_project(const ImageBuffer& hr_candidate, const ImageBuffer& lr, const BlurKernel& kernel);

/// Gradient of cem_project with respect to the candidate: (I - H+ H) d_out.
ImageBuffer cem_project_backward(const ImageBuffer& d_out, const BlurKernel& kernel);

/// In-place (I - H+ H) on channel-major planes: subtracts each s x s block mean.
template <typename Scalar>
void remove_block_means(Planes<Scalar>& x, int s) {
  if (x.height % s != 0 || x.width % s != 0) throw ShapeError("planes not divisible by the kernel scale");
  const int lw = x.width / s;
  for (int by = 0; by < x.height / s; ++by) {
    for (int bx = 0; bx < lw; ++bx) {
      Eigen::Matrix<Scalar, Eigen::Dynamic, 1> mean = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Zero(x.channels());
      for (int dy = 0; dy < s; ++dy)
        for (int dx = 0; dx < s; ++dx) mean += x.data.col(static_cast<Eigen::Index>(by * s + dy) * x.width + bx * s + dx);
      mean /= static_cast<Scalar>(s * s);
      for (int dy = 0; dy < s; ++dy)
        for (int dx = 0; dx < s; ++dx) x.data.col(static_cast<Eigen::Index>(by * s + dy) * x.width + bx * s + dx) -= mean;
    }
  }
}

/// Planar form of cem_project.
template <typename Scalar>
Planes<Scalar> cem_project(const Planes<Scalar>& candidate, const Planes<Scalar>& lr, int s) {
  if (candidate.height != lr.height * s || candidate.width != lr.width * s || candidate.channels() != lr.channels()) {
    throw ShapeError("cem_project: candidate and LR sizes disagree with the kernel scale");
  }
  Planes<Scalar> out = candidate;
  remove_block_means(out, s);
  for (int y = 0; y < out.height; ++y)
    for (int x = 0; x < out.width; ++x)
      out.data.col(static_cast<Eigen::Index>(y) * out.width + x) += lr.data.col(static_cast<Eigen::Index>(y / s) * lr.width + x / s);
  return out;
}

}  // namespace supernerf::ccsr
