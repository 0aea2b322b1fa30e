#include "supernerf/ccsr/ccsr.hpp"

namespace supernerf::ccsr {

CcsrOutput ccsr_forward_full(const SrBackbone& backbone, const ImageBuffer& lr, const LatentCode& code,
                             const BlurKernel& kernel) {
  if (backbone.config().scale != kernel.scale) throw ShapeError("backbone and kernel scales differ");
  CcsrOutput out;
  out.candidate = sr_generate(backbone, lr, code.expand());
  out.projected = cem_project(out.candidate, lr, kernel);
  return out;
}

}  // namespace supernerf::ccsr
