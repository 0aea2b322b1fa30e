#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "supernerf/ccsr/backbone.hpp"
#include "supernerf/core/image.hpp"

namespace supernerf::ccsr {

/// Procedural HR training images: shaded striped disks, checkered boxes and
/// ground patches, stripe bands and gradients, mostly over black.
std::vector<ImageBuffer> make_texture_corpus(int count, int size, std::uint64_t seed);

struct SrPretrainConfig {
  int steps = 1500;
  int batch = 4;
  int patch = 32;               // HR crop size, divisible by the scale
  float learning_rate = 1e-3f;
  double code_sigma = 0.1;      // codes are drawn like init_latent
  double diversity_margin = 0.04;
  double diversity_weight = 1.0;
  double range_weight = 0.1;

  void validate() const;
};

struct SrPretrainStep {
  int step = 0;
  double reconstruction = 0.0;
  double diversity = 0.0;  // mean |P(G(z1)) - P(G(z2))|
  double total = 0.0;
};

/// Trains a fresh backbone on (box-downsampled crop, random code) -> crop with
/// L1 reconstruction after projection, a hinge keeping outputs for two codes
/// at least `diversity_margin` apart, and a range penalty. Deterministic in seed.
/// Throws ConfigError on an empty corpus.
SrBackbone pretrain_sr_backbone(const std::vector<ImageBuffer>& corpus, const SrConfig& cfg,
                                const SrPretrainConfig& train, std::uint64_t seed,
                                const std::function<void(const SrPretrainStep&)>& on_step = {});

}  // namespace supernerf::ccsr
