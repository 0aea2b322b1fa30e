#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "supernerf/ccsr/ccsr.hpp"
#include "supernerf/core/adam.hpp"
#include "supernerf/nerf/field.hpp"
#include "supernerf/scene/dataset.hpp"
#include "supernerf/training/losses.hpp"

namespace supernerf::training {

struct TrainConfig {
  int iterations = 2000;
  int rays_per_step = 512;
  float field_learning_rate = 2e-3f;
  float latent_learning_rate = 1e-2f;
  double alpha_tau = 0.0;  // 0 selects iterations / 5
  double alpha_floor = 0.0;
  std::uint64_t seed = 0;
  int scale = 4;
  int checkpoint_every = 500;
  bool use_lr_nerf = true;        // false: alpha is 0 throughout
  int latent_downsample = 1;      // entry-count reduction of the codes: 1, 4 or 16
  bool range_on_candidate = true; // range penalty on the generator output (true) or the projection
  nerf::FieldConfig hr_field = nerf::FieldConfig::hr_default();

  void validate() const;
  [[nodiscard]] AlphaSchedule schedule() const;
  [[nodiscard]] std::string canonical_text() const;
  [[nodiscard]] std::string hash() const;
};

/// Everything that changes during mutual learning.
struct TrainState {
  nerf::RadianceField hr_field;
  ccsr::LatentCodeStore latents;
  Adam field_opt;
  std::map<int, Adam> latent_opt;
  std::int64_t t = 0;

  friend bool operator==(const TrainState&, const TrainState&) = default;
};

struct CheckpointBundle {
  TrainState state;
  std::string config_hash;

  void save(const std::filesystem::path& path) const;
  static CheckpointBundle load(const std::filesystem::path& path);
};

/// Mutual learning of the HR field and the per-view latent codes against the
/// frozen LR field and SR backbone.
///
/// Each step renders `rays_per_step` random pixels of one view with the HR
/// field; C_LN is read from renders of the LR field precomputed at HR size;
/// C_HR comes from the CCSR module on the full view (or the ground truth for
/// HR-tagged views).
class SuperNerfTrainer {
 public:
  /// lr_field may be null only when cfg.use_lr_nerf is false.
  SuperNerfTrainer(const scene::MultiViewDataset& dataset, const nerf::RadianceField* lr_field,
                   const ccsr::SrBackbone& backbone, TrainConfig cfg);

  [[nodiscard]] TrainState initial_state() const;

  /// Position in dataset.views sampled for step t.
  [[nodiscard]] int pick_view(std::int64_t t) const;

  /// One mutual-learning step on views[position] at state.t; advances state.t.
  LossReport step(TrainState& state, int position) const;

  /// Current LR-consistent SR image for a view (ground truth for HR views).
  [[nodiscard]] ImageBuffer sr_target(const TrainState& state, int position) const;

  /// Generator output before projection for an LR view.
  [[nodiscard]] ImageBuffer sr_candidate(const TrainState& state, int position) const;

  [[nodiscard]] const TrainConfig& config() const { return cfg_; }
  [[nodiscard]] const std::vector<ImageBuffer>& lr_images() const { return lr_images_; }
  [[nodiscard]] const std::vector<ImageBuffer>& lr_field_renders() const { return c_ln_; }

 private:
  const scene::MultiViewDataset& dataset_;
  const ccsr::SrBackbone& backbone_;
  TrainConfig cfg_;
  AlphaSchedule schedule_;
  int hr_h_ = 0;
  int hr_w_ = 0;
  std::vector<ImageBuffer> lr_images_;
  std::vector<ImageBuffer> c_ln_;
};

struct TrainOptions {
  std::filesystem::path checkpoint_dir;  // empty disables checkpoints
  std::filesystem::path log_path;        // empty disables the loss log
  std::int64_t stop_after = -1;          // stop once t reaches this value (simulated interruption)
  std::function<void(const LossReport&)> on_report;
};

/// Runs mutual learning from scratch or from `resume` up to cfg.iterations.
/// Throws ConfigError when the checkpoint belongs to a different config.
CheckpointBundle train_super_nerf(const scene::MultiViewDataset& dataset, const nerf::RadianceField* lr_field,
                                  const ccsr::SrBackbone& backbone, const TrainConfig& cfg,
                                  const TrainOptions& options = {}, const CheckpointBundle* resume = nullptr);

}  // namespace supernerf::training
