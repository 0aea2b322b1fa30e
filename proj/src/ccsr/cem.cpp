#include "supernerf/ccsr/cem.hpp"

namespace supernerf::ccsr {

void BlurKernel::validate() const {
  if (scale < 1) throw ConfigError("blur kernel scale must be positive");
}

ImageBuffer cem_project(const ImageBuffer& hr_candidate, const ImageBuffer& lr, const BlurKernel& kernel) {
  kernel.validate();
  hr_candidate.check_shape();
  lr.check_shape();
  const int s = kernel.scale;
  if (hr_candidate.height != lr.height * s || hr_candidate.width != lr.width * s) {
    throw ShapeError("cem_project: candidate is " + std::to_string(hr_candidate.height) + "x" +
                     std::to_string(hr_candidate.width) + ", LR is " + std::to_string(lr.height) + "x" +
                     std::to_string(lr.width) + ", scale " + std::to_string(s));
  }
  const ImageBuffer low = kernel.apply(hr_candidate);
  ImageBuffer out(hr_candidate.height, hr_candidate.width);
  for (int y = 0; y < out.height; ++y)
    for (int x = 0; x < out.width; ++x)
      for (int c = 0; c < 3; ++c)
        out.at(y, x, c) = hr_candidate.at(y, x, c) - low.at(y / s, x / s, c) + lr.at(y / s, x / s, c);
  return out;
}

ImageBuffer cem_project_backward(const ImageBuffer& d_out, const BlurKernel& kernel) {
  kernel.validate();
  const int s = kernel.scale;
  const ImageBuffer low = kernel.apply(d_out);
  ImageBuffer out(d_out.height, d_out.width);
  for (int y = 0; y < out.height; ++y)
    for (int x = 0; x < out.width; ++x)
      for (int c = 0; c < 3; ++c) out.at(y, x, c) = d_out.at(y, x, c) - low.at(y / s, x / s, c);
  return out;
}

}  // namespace supernerf::ccsr
