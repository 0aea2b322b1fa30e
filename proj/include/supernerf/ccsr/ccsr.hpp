#pragma once

#include "supernerf/ccsr/backbone.hpp"
#include "supernerf/ccsr/cem.hpp"
#include "supernerf/ccsr/latent.hpp"

namespace supernerf::ccsr {

struct CcsrOutput {
  ImageBuffer candidate;  // generator output before projection
  ImageBuffer projected;  // LR-consistent result
};

/// Generator followed by the consistency projection.
CcsrOutput ccsr_forward_full(const SrBackbone& backbone, const ImageBuffer& lr, const LatentCode& code,
                             const BlurKernel& kernel);

inline ImageBuffer ccsr_forward(const SrBackbone& backbone, const ImageBuffer& lr, const LatentCode& code,
                                const BlurKernel& kernel) {
  return ccsr_forward_full(backbone, lr, code, kernel).projected;
}

}  // namespace supernerf::ccsr
