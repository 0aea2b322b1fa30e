#include "supernerf/pipeline/pipeline.hpp"

#include <sstream>

#include "supernerf/ccsr/ccsr.hpp"
#include "supernerf/core/error.hpp"
#include "supernerf/nerf/render.hpp"

namespace supernerf::pipeline {
namespace {

std::string fmt(double v) {
  std::ostringstream o;
  o.precision(17);
  o << v;
  return o.str();
}

void read_field(const KeyValueConfig& kv, const std::string& p, nerf::FieldConfig& f) {
  f.n_frequencies = kv.get_int(p + ".frequencies", f.n_frequencies);
  f.hidden_width = kv.get_int(p + ".width", f.hidden_width);
  f.n_layers = kv.get_int(p + ".layers", f.n_layers);
  f.n_samples_per_ray = kv.get_int(p + ".samples", f.n_samples_per_ray);
  f.position_scale = kv.get_double(p + ".position_scale", f.position_scale);
}

void write_field(KeyValueConfig& kv, const std::string& p, const nerf::FieldConfig& f) {
  kv.set(p + ".frequencies", std::to_string(f.n_frequencies));
  kv.set(p + ".width", std::to_string(f.hidden_width));
  kv.set(p + ".layers", std::to_string(f.n_layers));
  kv.set(p + ".samples", std::to_string(f.n_samples_per_ray));
  kv.set(p + ".position_scale", fmt(f.position_scale));
}

}  // namespace

PipelineConfig PipelineConfig::from_kv(const KeyValueConfig& kv) {
  kv.require_known({"scene", "views", "heldout_views", "seed", "scale",
                    "lr_field.frequencies", "lr_field.width", "lr_field.layers", "lr_field.samples",
                    "lr_field.position_scale", "lr.iterations", "lr.rays_per_step", "lr.learning_rate",
                    "lr.checkpoint_every", "sr.channels", "sr.blocks", "sr.tail_init", "sr.steps", "sr.batch",
                    "sr.patch", "sr.learning_rate", "sr.code_sigma", "sr.diversity_margin", "sr.diversity_weight",
                    "sr.range_weight", "sr.corpus_size", "sr.corpus_image", "hr_field.frequencies", "hr_field.width",
                    "hr_field.layers", "hr_field.samples", "hr_field.position_scale", "train.iterations",
                    "train.rays_per_step", "train.field_learning_rate", "train.latent_learning_rate",
                    "train.alpha_tau", "train.alpha_floor", "train.checkpoint_every", "train.use_lr_nerf",
                    "train.latent_downsample", "train.range_on_candidate", "train.hybrid_hr_fraction",
                    "eval.max_gap"});
  PipelineConfig c;
  c.scene = kv.get_string("scene", c.scene);
  c.views = kv.get_int("views", c.views);
  c.heldout_views = kv.get_int("heldout_views", c.heldout_views);
  if (auto s = kv.get("seed")) {
    try {
      c.seed = std::stoull(*s);
    } catch (const std::exception&) {
      throw ConfigError("seed: not an unsigned integer: " + *s);
    }
  }
  c.scale = kv.get_int("scale", c.scale);
  read_field(kv, "lr_field", c.lr_field);
  c.lr.iterations = kv.get_int("lr.iterations", c.lr.iterations);
  c.lr.rays_per_step = kv.get_int("lr.rays_per_step", c.lr.rays_per_step);
  c.lr.learning_rate = static_cast<float>(kv.get_double("lr.learning_rate", c.lr.learning_rate));
  c.lr.checkpoint_every = kv.get_int("lr.checkpoint_every", c.lr.checkpoint_every);
  c.sr.channels = kv.get_int("sr.channels", c.sr.channels);
  c.sr.blocks = kv.get_int("sr.blocks", c.sr.blocks);
  c.sr.tail_init = kv.get_double("sr.tail_init", c.sr.tail_init);
  c.sr_pretrain.steps = kv.get_int("sr.steps", c.sr_pretrain.steps);
  c.sr_pretrain.batch = kv.get_int("sr.batch", c.sr_pretrain.batch);
  c.sr_pretrain.patch = kv.get_int("sr.patch", c.sr_pretrain.patch);
  c.sr_pretrain.learning_rate = static_cast<float>(kv.get_double("sr.learning_rate", c.sr_pretrain.learning_rate));
  c.sr_pretrain.code_sigma = kv.get_double("sr.code_sigma", c.sr_pretrain.code_sigma);
  c.sr_pretrain.diversity_margin = kv.get_double("sr.diversity_margin", c.sr_pretrain.diversity_margin);
  c.sr_pretrain.diversity_weight = kv.get_double("sr.diversity_weight", c.sr_pretrain.diversity_weight);
  c.sr_pretrain.range_weight = kv.get_double("sr.range_weight", c.sr_pretrain.range_weight);
  c.corpus_size = kv.get_int("sr.corpus_size", c.corpus_size);
  c.corpus_image = kv.get_int("sr.corpus_image", c.corpus_image);
  read_field(kv, "hr_field", c.train.hr_field);
  c.train.iterations = kv.get_int("train.iterations", c.train.iterations);
  c.train.rays_per_step = kv.get_int("train.rays_per_step", c.train.rays_per_step);
  c.train.field_learning_rate = static_cast<float>(kv.get_double("train.field_learning_rate", c.train.field_learning_rate));
  c.train.latent_learning_rate =
      static_cast<float>(kv.get_double("train.latent_learning_rate", c.train.latent_learning_rate));
  c.train.alpha_tau = kv.get_double("train.alpha_tau", c.train.alpha_tau);
  c.train.alpha_floor = kv.get_double("train.alpha_floor", c.train.alpha_floor);
  c.train.checkpoint_every = kv.get_int("train.checkpoint_every", c.train.checkpoint_every);
  c.train.use_lr_nerf = kv.get_bool("train.use_lr_nerf", c.train.use_lr_nerf);
  c.train.latent_downsample = kv.get_int("train.latent_downsample", c.train.latent_downsample);
  c.train.range_on_candidate = kv.get_bool("train.range_on_candidate", c.train.range_on_candidate);
  c.hybrid_hr_fraction = kv.get_double("train.hybrid_hr_fraction", c.hybrid_hr_fraction);
  c.eval_max_gap = kv.get_int("eval.max_gap", c.eval_max_gap);
  c.propagate();
  c.validate();
  return c;
}

KeyValueConfig PipelineConfig::to_kv() const {
  KeyValueConfig kv;
  kv.set("scene", scene);
  kv.set("views", std::to_string(views));
  kv.set("heldout_views", std::to_string(heldout_views));
  kv.set("seed", std::to_string(seed));
  kv.set("scale", std::to_string(scale));
  write_field(kv, "lr_field", lr_field);
  kv.set("lr.iterations", std::to_string(lr.iterations));
  kv.set("lr.rays_per_step", std::to_string(lr.rays_per_step));
  kv.set("lr.learning_rate", fmt(lr.learning_rate));
  kv.set("lr.checkpoint_every", std::to_string(lr.checkpoint_every));
  kv.set("sr.channels", std::to_string(sr.channels));
  kv.set("sr.blocks", std::to_string(sr.blocks));
  kv.set("sr.tail_init", fmt(sr.tail_init));
  kv.set("sr.steps", std::to_string(sr_pretrain.steps));
  kv.set("sr.batch", std::to_string(sr_pretrain.batch));
  kv.set("sr.patch", std::to_string(sr_pretrain.patch));
  kv.set("sr.learning_rate", fmt(sr_pretrain.learning_rate));
  kv.set("sr.code_sigma", fmt(sr_pretrain.code_sigma));
  kv.set("sr.diversity_margin", fmt(sr_pretrain.diversity_margin));
  kv.set("sr.diversity_weight", fmt(sr_pretrain.diversity_weight));
  kv.set("sr.range_weight", fmt(sr_pretrain.range_weight));
  kv.set("sr.corpus_size", std::to_string(corpus_size));
  kv.set("sr.corpus_image", std::to_string(corpus_image));
  write_field(kv, "hr_field", train.hr_field);
  kv.set("train.iterations", std::to_string(train.iterations));
  kv.set("train.rays_per_step", std::to_string(train.rays_per_step));
  kv.set("train.field_learning_rate", fmt(train.field_learning_rate));
  kv.set("train.latent_learning_rate", fmt(train.latent_learning_rate));
  kv.set("train.alpha_tau", fmt(train.alpha_tau));
  kv.set("train.alpha_floor", fmt(train.alpha_floor));
  kv.set("train.checkpoint_every", std::to_string(train.checkpoint_every));
  kv.set("train.use_lr_nerf", train.use_lr_nerf ? "true" : "false");
  kv.set("train.latent_downsample", std::to_string(train.latent_downsample));
  kv.set("train.range_on_candidate", train.range_on_candidate ? "true" : "false");
  kv.set("train.hybrid_hr_fraction", fmt(hybrid_hr_fraction));
  kv.set("eval.max_gap", std::to_string(eval_max_gap));
  return kv;
}

void PipelineConfig::propagate() {
  lr.seed = seed;
  train.seed = seed;
  train.scale = scale;
  sr.scale = scale;
  lr_field.role = nerf::FieldRole::LR;
  train.hr_field.role = nerf::FieldRole::HR;
}

void PipelineConfig::validate() const {
  if (views < 2) throw ConfigError("views must be >= 2");
  if (heldout_views < 1) throw ConfigError("heldout_views must be >= 1");
  if (!(hybrid_hr_fraction >= 0.0 && hybrid_hr_fraction <= 1.0)) throw ConfigError("hybrid_hr_fraction must be in [0, 1]");
  if (eval_max_gap < 1) throw ConfigError("eval.max_gap must be >= 1");
  if (corpus_size < 1 || corpus_image < 1) throw ConfigError("SR corpus must be nonempty");
  if (train.scale != scale || sr.scale != scale) throw ConfigError("stage scales differ; call propagate()");
  (void)scene_spec();
  lr_field.validate();
  lr.validate();
  sr.validate();
  sr_pretrain.validate();
  train.validate();
}

scene::SceneSpec PipelineConfig::scene_spec() const {
  scene::SceneSpec spec;
  if (scene == "reference") {
    spec = scene::SceneSpec::reference();
  } else if (scene == "one_sphere") {
    spec = scene::SceneSpec::one_sphere();
  } else if (scene == "two_spheres") {
    spec = scene::SceneSpec::two_spheres();
  } else {
    throw ConfigError("unknown scene '" + scene + "' (reference, one_sphere, two_spheres)");
  }
  spec.scale = scale;
  spec.validate();
  return spec;
}

SceneData generate_scene_data(const PipelineConfig& cfg) {
  const auto spec = cfg.scene_spec();
  SceneData d;
  d.truth = scene::generate_synthetic_scene(spec, cfg.views, cfg.seed);
  d.heldout = scene::render_views(spec, scene::held_out_poses(spec, cfg.views, cfg.heldout_views), cfg.views);
  d.heldout.scale = cfg.scale;
  return d;
}

void save_scene_data(const SceneData& data, const std::filesystem::path& dir) {
  scene::save_dataset(data.truth, dir / "truth");
  scene::save_dataset(data.heldout, dir / "heldout");
}

SceneData load_scene_data(const std::filesystem::path& dir) {
  return {scene::load_dataset(dir / "truth"), scene::load_dataset(dir / "heldout")};
}

scene::MultiViewDataset training_set(const scene::MultiViewDataset& truth, double hybrid_hr_fraction) {
  return scene::degrade(truth, scene::select_hr_views(static_cast<int>(truth.views.size()), hybrid_hr_fraction));
}

ccsr::SrBackbone pretrain_sr(const PipelineConfig& cfg, const std::function<void(const ccsr::SrPretrainStep&)>& on_step) {
  const auto corpus = ccsr::make_texture_corpus(cfg.corpus_size, cfg.corpus_image, cfg.seed);
  return ccsr::pretrain_sr_backbone(corpus, cfg.sr, cfg.sr_pretrain, cfg.seed, on_step);
}

std::vector<ImageBuffer> independent_sr(const scene::MultiViewDataset& train, const ccsr::SrBackbone& backbone,
                                        const training::TrainConfig& cfg) {
  const training::SuperNerfTrainer trainer(train, nullptr, backbone, [&] {
    auto c = cfg;
    c.use_lr_nerf = false;
    return c;
  }());
  const auto state = trainer.initial_state();
  std::vector<ImageBuffer> out;
  for (int p = 0; p < static_cast<int>(train.views.size()); ++p) out.push_back(trainer.sr_target(state, p));
  return out;
}

std::vector<ImageBuffer> trained_sr(const scene::MultiViewDataset& train, const ccsr::SrBackbone& backbone,
                                    const training::TrainState& state, int scale) {
  std::vector<ImageBuffer> out;
  for (const auto& v : train.views) {
    if (v.tag == scene::ResolutionTag::HR) {
      out.push_back(v.image);
    } else {
      out.push_back(ccsr::ccsr_forward(backbone, scene::lr_image(v, scale), state.latents.at(v.index),
                                       ccsr::BlurKernel{scale}));
    }
  }
  return out;
}

eval::MetricReport evaluate(const PipelineConfig& cfg, const SceneData& data, const scene::MultiViewDataset& train,
                            const ccsr::SrBackbone& backbone, const training::CheckpointBundle& bundle,
                            const std::string& run_id) {
  eval::MetricReport r;
  r.run_id = run_id;
  r.config_hash = bundle.config_hash;
  const auto& field = bundle.state.hr_field;
  const auto [h, w] = train.hr_size();

  for (const auto& v : data.heldout.views) {
    r.heldout_psnr.push_back(eval::psnr(nerf::render_image(field, v.pose, h, w), v.image));
  }

  const auto sr_trained = trained_sr(train, backbone, bundle.state, cfg.scale);
  for (std::size_t p = 0; p < train.views.size(); ++p) {
    const auto& v = train.views[p];
    if (v.tag == scene::ResolutionTag::LR) {
      r.lr_residual = std::max(r.lr_residual, eval::lr_consistency_residual(sr_trained[p], v.image, cfg.scale));
    }
  }

  const auto baseline = independent_sr(train, backbone, cfg.train);
  std::vector<ImageBuffer> renders;
  std::vector<eval::DepthView> depth;
  double train_psnr = 0.0;
  for (std::size_t p = 0; p < train.views.size(); ++p) {
    const auto& v = train.views[p];
    auto rv = nerf::render_view(field, v.pose, h, w);
    train_psnr += eval::psnr(box_downsample(rv.image, cfg.scale), scene::lr_image(v, cfg.scale)).db;
    depth.push_back({v.pose, h, w, std::move(rv.depth), std::move(rv.weight)});
    renders.push_back(std::move(rv.image));
  }
  const int n = static_cast<int>(train.views.size());
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n && j - i <= cfg.eval_max_gap; ++j) {
      const auto warp = eval::build_warp(depth[i], depth[j], train.views[i].index, train.views[j].index);
      eval::PairConsistency pc;
      pc.view_i = train.views[i].index;
      pc.view_j = train.views[j].index;
      pc.mean_displacement = warp.mean_displacement();
      pc.valid_fraction = warp.valid_fraction();
      pc.supernerf = eval::warped_consistency(renders[i], renders[j], warp);
      pc.baseline = eval::warped_consistency(baseline[i], baseline[j], warp);
      r.pairs.push_back(pc);
    }
  }
  r.extras.emplace_back("hr_field_lr_psnr_train", train_psnr / n);
  r.extras.emplace_back("iterations", static_cast<double>(bundle.state.t));
  r.extras.emplace_back("latent_codes", static_cast<double>(bundle.state.latents.size()));
  r.extras.emplace_back("hybrid_hr_fraction", cfg.hybrid_hr_fraction);
  return r;
}

}  // namespace supernerf::pipeline
