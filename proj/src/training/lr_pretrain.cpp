#include "supernerf/training/lr_pretrain.hpp"

#include <cmath>

#include "supernerf/core/adam.hpp"
#include "supernerf/core/error.hpp"
#include "supernerf/core/random.hpp"
#include "supernerf/nerf/render.hpp"

namespace supernerf::training {

void LrPretrainConfig::validate() const {
  if (iterations < 0) throw ConfigError("LR pretraining iterations must be >= 0");
  if (rays_per_step < 1) throw ConfigError("LR pretraining rays_per_step must be >= 1");
  if (!(learning_rate > 0.0f)) throw ConfigError("LR pretraining learning rate must be positive");
  if (checkpoint_every < 1) throw ConfigError("LR pretraining checkpoint_every must be >= 1");
}

nerf::RadianceField pretrain_lr_nerf(const scene::MultiViewDataset& dataset, const nerf::FieldConfig& field_cfg,
                                     const LrPretrainConfig& cfg,
                                     const std::function<void(const LrPretrainStep&)>& on_step) {
  cfg.validate();
  dataset.validate();
  if (dataset.views.size() < 2) throw ConfigError("LR pretraining needs at least 2 views");
  const auto [lh, lw] = dataset.lr_size();
  std::vector<ImageBuffer> targets;
  for (const auto& v : dataset.views) targets.push_back(scene::lr_image(v, dataset.scale));

  nerf::RadianceField field(field_cfg, cfg.seed);
  Adam opt(field.parameter_count(), {cfg.learning_rate});
  std::vector<float> grad(field.parameter_count());
  const int n_pixels = lh * lw;
  std::vector<int> pixels(static_cast<std::size_t>(cfg.rays_per_step));

  for (int step = 0; step < cfg.iterations; ++step) {
    auto rng = make_rng(cfg.seed, 0x12F7, static_cast<std::uint64_t>(step));
    const auto pos = static_cast<std::size_t>(uniform01(rng) * dataset.views.size()) % dataset.views.size();
    const auto& view = dataset.views[pos];
    for (auto& p : pixels) p = static_cast<int>(rng() % static_cast<std::uint64_t>(n_pixels));
    const auto rays = scene::generate_rays_for_pixels(view.pose, lh, lw, pixels, view.index);
    const nerf::SamplingOptions opts{true, cfg.seed * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(step)};
    auto tape = nerf::render_forward(field, rays, opts);

    Eigen::MatrixX3d d(rays.size(), 3);
    double mse = 0.0;
    const double scale = 1.0 / (3.0 * static_cast<double>(rays.size()));
    for (Eigen::Index i = 0; i < rays.size(); ++i) {
      for (int c = 0; c < 3; ++c) {
        const double diff = tape.result.colors(i, c) - targets[pos].pixels[static_cast<std::size_t>(pixels[i]) * 3 + c];
        mse += diff * diff * scale;
        d(i, c) = 2.0 * diff * scale;
      }
    }
    if (!std::isfinite(mse)) throw NumericalError("LR pretraining loss is not finite at step " + std::to_string(step));
    std::fill(grad.begin(), grad.end(), 0.0f);
    nerf::render_backward(field, tape, d, std::span<float>(grad));
    opt.step(field.parameters(), grad);
    field.check_finite();
    if (on_step) on_step({step, mse});
    if (!cfg.checkpoint_path.empty() && (step + 1) % cfg.checkpoint_every == 0) nerf::save_field(field, cfg.checkpoint_path);
  }
  return field;
}

double mean_lr_psnr(const nerf::RadianceField& field, const scene::MultiViewDataset& dataset) {
  const auto [lh, lw] = dataset.lr_size();
  double acc = 0.0;
  for (const auto& v : dataset.views) {
    const auto img = nerf::render_image(field, v.pose, lh, lw);
    const auto target = scene::lr_image(v, dataset.scale);
    double mse = 0.0;
    for (std::size_t i = 0; i < img.size(); ++i) {
      const double d = double(img.pixels[i]) - target.pixels[i];
      mse += d * d;
    }
    mse /= static_cast<double>(img.size());
    acc += mse > 0.0 ? -10.0 * std::log10(mse) : 100.0;
  }
  return acc / static_cast<double>(dataset.views.size());
}

}  // namespace supernerf::training
