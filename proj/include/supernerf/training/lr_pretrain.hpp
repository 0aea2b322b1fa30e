#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>

#include "supernerf/nerf/field.hpp"
#include "supernerf/scene/dataset.hpp"

namespace supernerf::training {

struct LrPretrainConfig {
  int iterations = 2500;
  int rays_per_step = 1024;
  float learning_rate = 2e-3f;
  std::uint64_t seed = 0;
  int checkpoint_every = 500;
  std::filesystem::path checkpoint_path;  // empty disables last-good checkpoints

  void validate() const;
};

struct LrPretrainStep {
  int step = 0;
  double mse = 0.0;
};

/// Fits a field to the LR images of every view (HR views are box-downsampled)
/// with a photometric MSE. Throws NumericalError on a non-finite loss; the
/// last good checkpoint stays on disk when checkpointing is enabled.
nerf::RadianceField pretrain_lr_nerf(const scene::MultiViewDataset& dataset, const nerf::FieldConfig& field_cfg,
                                     const LrPretrainConfig& cfg,
                                     const std::function<void(const LrPretrainStep&)>& on_step = {});

/// Mean PSNR of the field rendered at LR resolution against every view's LR image.
double mean_lr_psnr(const nerf::RadianceField& field, const scene::MultiViewDataset& dataset);

}  // namespace supernerf::training
