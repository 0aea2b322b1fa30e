#include "supernerf/training/super_nerf.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include "supernerf/core/error.hpp"
#include "supernerf/core/hash.hpp"
#include "supernerf/core/random.hpp"
#include "supernerf/nerf/render.hpp"

namespace supernerf::training {
namespace {

using PlanesF = ccsr::Planes<float>;

constexpr std::uint64_t kViewStream = 0x71E3;
constexpr std::uint64_t kStepStream = 0x57E9;

double sgn(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

}  // namespace

void TrainConfig::validate() const {
  if (iterations < 1) throw ConfigError("iterations must be > 0");
  if (rays_per_step < 1) throw ConfigError("rays_per_step must be > 0");
  if (!(field_learning_rate > 0.0f) || !(latent_learning_rate > 0.0f)) throw ConfigError("learning rates must be > 0");
  if (alpha_tau < 0.0) throw ConfigError("alpha_tau must be >= 0");
  if (scale < 1) throw ConfigError("scale must be positive");
  if (checkpoint_every < 1) throw ConfigError("checkpoint_every must be > 0");
  ccsr::latent_axis_factor(latent_downsample);
  hr_field.validate();
  schedule().validate();
}

AlphaSchedule TrainConfig::schedule() const {
  if (alpha_tau > 0.0) return {alpha_tau, alpha_floor};
  return AlphaSchedule::for_iterations(iterations, alpha_floor);
}

std::string TrainConfig::canonical_text() const {
  std::ostringstream o;
  o.precision(17);
  o << "iterations=" << iterations << "\nrays_per_step=" << rays_per_step
    << "\nfield_learning_rate=" << field_learning_rate << "\nlatent_learning_rate=" << latent_learning_rate
    << "\nalpha_tau=" << alpha_tau << "\nalpha_floor=" << alpha_floor << "\nseed=" << seed << "\nscale=" << scale
    << "\ncheckpoint_every=" << checkpoint_every << "\nuse_lr_nerf=" << use_lr_nerf
    << "\nlatent_downsample=" << latent_downsample << "\nrange_on_candidate=" << range_on_candidate
    << "\nhr_field=" << hr_field.n_frequencies << "," << hr_field.hidden_width << "," << hr_field.n_layers << ","
    << hr_field.n_samples_per_ray << "," << hr_field.position_scale << "\n";
  return o.str();
}

std::string TrainConfig::hash() const { return hex64(fnv1a64(canonical_text())); }

void CheckpointBundle::save(const std::filesystem::path& path) const {
  Container c;
  c.put_string("kind", "super_nerf_checkpoint");
  c.put_string("config_hash", config_hash);
  c.put_int("t", state.t);
  state.hr_field.save(c, "hr_field");
  state.latents.save(c, "latents");
  state.field_opt.save(c, "field_opt");
  std::vector<std::int64_t> keys;
  for (const auto& [k, opt] : state.latent_opt) {
    keys.push_back(k);
    opt.save(c, "latent_opt." + std::to_string(k));
  }
  c.put("latent_opt.views", std::span<const std::int64_t>(keys));
  c.write(path);
}

CheckpointBundle CheckpointBundle::load(const std::filesystem::path& path) {
  const auto c = Container::read(path);
  if (!c.has("kind") || c.get_string("kind") != "super_nerf_checkpoint") {
    throw IoError(path.string() + ": not a Super-NeRF checkpoint (field 'kind')");
  }
  CheckpointBundle b;
  b.config_hash = c.get_string("config_hash");
  b.state.t = c.get_int("t");
  b.state.hr_field = nerf::RadianceField::load(c, "hr_field");
  b.state.latents = ccsr::LatentCodeStore::load(c, "latents");
  b.state.field_opt.load(c, "field_opt");
  for (std::int64_t k : c.ints("latent_opt.views")) {
    Adam opt;
    opt.load(c, "latent_opt." + std::to_string(k));
    b.state.latent_opt.emplace(static_cast<int>(k), std::move(opt));
  }
  return b;
}

SuperNerfTrainer::SuperNerfTrainer(const scene::MultiViewDataset& dataset, const nerf::RadianceField* lr_field,
                                   const ccsr::SrBackbone& backbone, TrainConfig cfg)
    : dataset_(dataset), backbone_(backbone), cfg_(std::move(cfg)) {
  cfg_.validate();
  dataset_.validate();
  schedule_ = cfg_.schedule();
  if (dataset_.scale != cfg_.scale) throw ConfigError("dataset scale differs from the training scale");
  if (backbone_.config().scale != cfg_.scale) throw ConfigError("SR backbone scale differs from the training scale");
  if (cfg_.use_lr_nerf && !lr_field) throw ConfigError("mutual learning needs the pretrained LR field");
  backbone_.check_finite();
  std::tie(hr_h_, hr_w_) = dataset_.hr_size();
  for (const auto& v : dataset_.views) {
    lr_images_.push_back(scene::lr_image(v, cfg_.scale));
    if (cfg_.use_lr_nerf) {
      lr_field->check_finite();
      c_ln_.push_back(nerf::render_image(*lr_field, v.pose, hr_h_, hr_w_, {false, 0}, v.index));
    }
  }
}

TrainState SuperNerfTrainer::initial_state() const {
  TrainState s;
  s.hr_field = nerf::RadianceField(cfg_.hr_field, cfg_.seed ^ 0x4852ULL);
  s.field_opt = Adam(s.hr_field.parameter_count(), {cfg_.field_learning_rate});
  const auto [lh, lw] = dataset_.lr_size();
  const int factor = ccsr::latent_axis_factor(cfg_.latent_downsample);
  for (const auto& v : dataset_.views) {
    if (v.tag != scene::ResolutionTag::LR) continue;
    auto code = ccsr::init_latent(v.index, lh, lw, cfg_.scale, cfg_.seed, factor);
    s.latent_opt.emplace(v.index, Adam(code.values.size(), {cfg_.latent_learning_rate}));
    s.latents.add(std::move(code));
  }
  return s;
}

int SuperNerfTrainer::pick_view(std::int64_t t) const {
  auto rng = make_rng(cfg_.seed, kViewStream, static_cast<std::uint64_t>(t));
  const auto n = dataset_.views.size();
  return static_cast<int>(static_cast<std::size_t>(uniform01(rng) * n) % n);
}

ImageBuffer SuperNerfTrainer::sr_candidate(const TrainState& state, int position) const {
  const auto& v = dataset_.views.at(static_cast<std::size_t>(position));
  if (v.tag != scene::ResolutionTag::LR) throw ConfigError("HR views have no SR candidate");
  return ccsr::sr_generate(backbone_, lr_images_[position], state.latents.at(v.index).expand());
}

ImageBuffer SuperNerfTrainer::sr_target(const TrainState& state, int position) const {
  const auto& v = dataset_.views.at(static_cast<std::size_t>(position));
  if (v.tag == scene::ResolutionTag::HR) return v.image;
  return ccsr::cem_project(sr_candidate(state, position), lr_images_[position], {cfg_.scale});
}

LossReport SuperNerfTrainer::step(TrainState& st, int position) const {
  const auto start = std::chrono::steady_clock::now();
  const auto& view = dataset_.views.at(static_cast<std::size_t>(position));
  const int s = cfg_.scale;
  const int n_pixels = hr_h_ * hr_w_;
  auto rng = make_rng(cfg_.seed, kStepStream, static_cast<std::uint64_t>(st.t));
  const double a = cfg_.use_lr_nerf ? schedule_(st.t) : 0.0;
  const bool sr_view = view.tag == scene::ResolutionTag::LR;

  // C_HR for this view.
  ccsr::SrBackbone::Tape g_tape;
  PlanesF candidate, projected;
  ccsr::LatentCode* code = nullptr;
  if (sr_view) {
    code = &st.latents.at(view.index);
    const PlanesF lr = ccsr::to_planes<float>(lr_images_[position]);
    candidate = backbone_.forward(lr, ccsr::to_planes<float>(code->expand()), &g_tape);
    projected = ccsr::cem_project(candidate, lr, s);
  }
  const auto c_hr = [&](int pixel, int c) -> double {
    return sr_view ? projected.data(c, pixel) : view.image.pixels[static_cast<std::size_t>(pixel) * 3 + c];
  };

  // C_HN on a random pixel subset.
  std::vector<int> pixels(static_cast<std::size_t>(cfg_.rays_per_step));
  for (auto& p : pixels) p = static_cast<int>(rng() % static_cast<std::uint64_t>(n_pixels));
  const auto rays = scene::generate_rays_for_pixels(view.pose, hr_h_, hr_w_, pixels, view.index);
  const nerf::SamplingOptions opts{true, splitmix64(cfg_.seed) ^ static_cast<std::uint64_t>(st.t)};
  auto f_tape = nerf::render_forward(st.hr_field, rays, opts);
  const auto& c_hn = f_tape.result.colors;

  const double n = 3.0 * static_cast<double>(pixels.size());
  double sum_ln = 0.0, sum_hn = 0.0;
  Eigen::MatrixX3d d_hn(rays.size(), 3);
  PlanesF d_proj;
  if (sr_view && code->learnable) d_proj = PlanesF(3, hr_h_, hr_w_);
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    const int p = pixels[i];
    for (int c = 0; c < 3; ++c) {
      const double hr = c_hr(p, c);
      const double hn = c_hn(static_cast<Eigen::Index>(i), c);
      sum_hn += std::abs(hn - hr);
      d_hn(static_cast<Eigen::Index>(i), c) = (1.0 - a) * sgn(hn - hr) / n;
      double g = (1.0 - a) * sgn(hr - hn);
      if (cfg_.use_lr_nerf) {
        const double ln = c_ln_[position].pixels[static_cast<std::size_t>(p) * 3 + c];
        sum_ln += std::abs(ln - hr);
        g += a * sgn(hr - ln);
      }
      if (d_proj.pixels()) d_proj.data(c, p) += static_cast<float>(g / n);
    }
  }
  const double l_sr = a * (sum_ln / n) + (1.0 - a) * (sum_hn / n);

  // Range penalty and latent update.
  double l_range = 0.0;
  if (sr_view) {
    const PlanesF& x = cfg_.range_on_candidate ? candidate : projected;
    const Eigen::ArrayXXf over = x.data.array() - x.data.array().max(0.0f).min(1.0f);
    l_range = over.abs().cast<double>().sum() / static_cast<double>(n_pixels);
    if (d_proj.pixels()) {
      const Eigen::ArrayXXf g_range = over.sign() / static_cast<float>(n_pixels);
      if (!cfg_.range_on_candidate) d_proj.data.array() += g_range;
      ccsr::remove_block_means(d_proj, s);
      if (cfg_.range_on_candidate) d_proj.data.array() += g_range;
      PlanesF d_code;
      backbone_.backward(g_tape, d_proj, &d_code, {});
      const auto g_code = code->reduce(ccsr::to_image(d_code));
      st.latent_opt.at(view.index).step(code->values, g_code);
      for (float v : code->values) {
        if (!std::isfinite(v)) throw NumericalError("latent code of view " + std::to_string(view.index) + " is not finite");
      }
    }
  }

  const double total = l_sr + l_range;
  if (!std::isfinite(total)) throw NumericalError("mutual-learning loss is not finite at step " + std::to_string(st.t));

  std::vector<float> grad(st.hr_field.parameter_count(), 0.0f);
  nerf::render_backward(st.hr_field, f_tape, d_hn, std::span<float>(grad));
  st.field_opt.step(st.hr_field.parameters(), grad);
  st.hr_field.check_finite();

  LossReport r;
  r.t = st.t;
  r.view_index = view.index;
  r.alpha_t = a;
  r.loss_sr = l_sr;
  r.loss_range = l_range;
  r.loss_total = total;
  r.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  ++st.t;
  return r;
}

CheckpointBundle train_super_nerf(const scene::MultiViewDataset& dataset, const nerf::RadianceField* lr_field,
                                  const ccsr::SrBackbone& backbone, const TrainConfig& cfg,
                                  const TrainOptions& options, const CheckpointBundle* resume) {
  SuperNerfTrainer trainer(dataset, lr_field, backbone, cfg);
  CheckpointBundle bundle;
  bundle.config_hash = cfg.hash();
  if (resume) {
    if (resume->config_hash != bundle.config_hash) {
      throw ConfigError("checkpoint config hash " + resume->config_hash + " does not match " + bundle.config_hash);
    }
    bundle.state = resume->state;
  } else {
    bundle.state = trainer.initial_state();
  }

  std::ofstream log;
  if (!options.log_path.empty()) {
    // Keep only records before the resume point so the log matches an uninterrupted run.
    std::vector<std::string> kept;
    if (resume) {
      std::ifstream old(options.log_path);
      std::string line;
      while (std::getline(old, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (LossReport::parse_line(line).t < bundle.state.t) kept.push_back(line);
      }
    }
    if (options.log_path.has_parent_path()) std::filesystem::create_directories(options.log_path.parent_path());
    log.open(options.log_path, std::ios::trunc);
    if (!log) throw IoError("cannot write loss log " + options.log_path.string());
    log << kLossLogHeader << '\n';
    for (const auto& l : kept) log << l << '\n';
  }
  if (!options.checkpoint_dir.empty()) std::filesystem::create_directories(options.checkpoint_dir);

  while (bundle.state.t < cfg.iterations) {
    if (options.stop_after >= 0 && bundle.state.t >= options.stop_after) break;
    const auto report = trainer.step(bundle.state, trainer.pick_view(bundle.state.t));
    if (log.is_open()) log << report.to_line() << '\n';
    if (options.on_report) options.on_report(report);
    const bool boundary = bundle.state.t % cfg.checkpoint_every == 0 || bundle.state.t == cfg.iterations;
    if (!options.checkpoint_dir.empty() && boundary) {
      if (log.is_open()) log.flush();
      bundle.save(options.checkpoint_dir / "checkpoint.bin");
    }
  }
  return bundle;
}

}  // namespace supernerf::training
