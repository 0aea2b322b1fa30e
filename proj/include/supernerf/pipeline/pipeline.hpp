#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "supernerf/ccsr/backbone.hpp"
#include "supernerf/ccsr/pretrain.hpp"
#include "supernerf/core/kv_config.hpp"
#include "supernerf/eval/report.hpp"
#include "supernerf/scene/scene.hpp"
#include "supernerf/training/lr_pretrain.hpp"
#include "supernerf/training/super_nerf.hpp"

namespace supernerf::pipeline {

/// Every knob of the end-to-end run. Loaded from a flat key-value file; keys
/// are listed in README.md. Unknown keys are rejected.
struct PipelineConfig {
  std::string scene = "reference";  // reference | one_sphere | two_spheres
  int views = 8;
  int heldout_views = 4;
  std::uint64_t seed = 0;
  int scale = 4;

  nerf::FieldConfig lr_field = nerf::FieldConfig::lr_default();
  training::LrPretrainConfig lr;

  ccsr::SrConfig sr;
  ccsr::SrPretrainConfig sr_pretrain;
  int corpus_size = 256;
  int corpus_image = 64;

  training::TrainConfig train;
  double hybrid_hr_fraction = 0.0;

  int eval_max_gap = 7;  // view pairs (i, j) with 0 < j - i <= eval_max_gap

  static PipelineConfig from_kv(const KeyValueConfig& kv);
  [[nodiscard]] KeyValueConfig to_kv() const;
  void validate() const;
  /// Applies `seed` and `scale` to every stage.
  void propagate();
  [[nodiscard]] scene::SceneSpec scene_spec() const;
};

struct SceneData {
  scene::MultiViewDataset truth;    // all training views at HR
  scene::MultiViewDataset heldout;  // held-out HR ground truth
};

SceneData generate_scene_data(const PipelineConfig& cfg);
void save_scene_data(const SceneData& data, const std::filesystem::path& dir);
SceneData load_scene_data(const std::filesystem::path& dir);

/// Training set for a hybrid fraction: round(fraction * n) views keep their HR
/// image, the rest are box-downsampled.
scene::MultiViewDataset training_set(const scene::MultiViewDataset& truth, double hybrid_hr_fraction);

ccsr::SrBackbone pretrain_sr(const PipelineConfig& cfg,
                             const std::function<void(const ccsr::SrPretrainStep&)>& on_step = {});

/// Independent SR of each LR-tagged view with its untrained random code; HR
/// views keep their ground truth.
std::vector<ImageBuffer> independent_sr(const scene::MultiViewDataset& train, const ccsr::SrBackbone& backbone,
                                        const training::TrainConfig& cfg);

/// CCSR outputs with the trained codes (ground truth for HR views).
std::vector<ImageBuffer> trained_sr(const scene::MultiViewDataset& train, const ccsr::SrBackbone& backbone,
                                    const training::TrainState& state, int scale);

/// Evaluates a trained run: held-out PSNR, LR residual of the trained CCSR
/// outputs, and warped consistency of HR-field renders against the
/// independent-SR baseline on training-view pairs. Both image sets are
/// compared through the same warps, built from the HR field's depth.
eval::MetricReport evaluate(const PipelineConfig& cfg, const SceneData& data, const scene::MultiViewDataset& train,
                            const ccsr::SrBackbone& backbone, const training::CheckpointBundle& bundle,
                            const std::string& run_id);

}  // namespace supernerf::pipeline
