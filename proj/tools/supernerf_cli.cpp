#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "supernerf/ccsr/backbone.hpp"
#include "supernerf/core/error.hpp"
#include "supernerf/core/hash.hpp"
#include "supernerf/core/png_io.hpp"
#include "supernerf/nerf/render.hpp"
#include "supernerf/pipeline/pipeline.hpp"

#ifndef SUPERNERF_REVISION
#define SUPERNERF_REVISION "unknown"
#endif

namespace fs = std::filesystem;
using namespace supernerf;
using Json = nlohmann::ordered_json;

namespace {

// Usage problems (bad flags, missing inputs, schema violations) exit with 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<int> scale;
  std::optional<double> hybrid;
  bool no_lr_nerf = false;
  std::optional<int> latent_downsample;
  std::optional<int> iterations;
};

std::string now_iso() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

pipeline::PipelineConfig load_config(const CommonFlags& f) {
  KeyValueConfig kv;
  if (!f.config.empty()) {
    if (!fs::exists(f.config)) throw UsageError("config file not found: " + f.config);
    kv = KeyValueConfig::load(f.config);
  }
  if (f.seed) kv.set("seed", std::to_string(*f.seed));
  if (f.scale) kv.set("scale", std::to_string(*f.scale));
  if (f.hybrid) kv.set("train.hybrid_hr_fraction", std::to_string(*f.hybrid));
  if (f.no_lr_nerf) kv.set("train.use_lr_nerf", "false");
  if (f.latent_downsample) kv.set("train.latent_downsample", std::to_string(*f.latent_downsample));
  if (f.iterations) kv.set("train.iterations", std::to_string(*f.iterations));
  return pipeline::PipelineConfig::from_kv(kv);
}

void require_file(const std::string& p, const char* what) {
  if (p.empty() || !fs::exists(p)) throw UsageError(std::string(what) + " not found: " + p);
}

class Manifest {
 public:
  Manifest(std::string command, const pipeline::PipelineConfig& cfg, fs::path out)
      : out_(std::move(out)) {
    j_["command"] = std::move(command);
    j_["config_hash"] = hex64(fnv1a64(cfg.to_kv().canonical_text()));
    j_["seed"] = cfg.seed;
    j_["revision"] = SUPERNERF_REVISION;
    j_["started"] = now_iso();
    j_["finished"] = nullptr;
    j_["outputs"] = Json::array();
    j_["details"] = Json::object();
  }
  void output(const fs::path& p) { j_["outputs"].push_back(fs::relative(p, out_).generic_string()); }
  Json& details() { return j_["details"]; }
  void write() {
    j_["finished"] = now_iso();
    std::ofstream o(out_ / "manifest.json", std::ios::trunc);
    if (!o) throw IoError("cannot write manifest in " + out_.string());
    o << j_.dump(2) << "\n";
  }

 private:
  fs::path out_;
  Json j_;
};

fs::path prepare_out(const CommonFlags& f) {
  if (f.out.empty()) throw UsageError("--out is required");
  fs::create_directories(f.out);
  return fs::path(f.out);
}

void save_config(const pipeline::PipelineConfig& cfg, const fs::path& out, Manifest& m) {
  std::ofstream o(out / "config.txt", std::ios::trunc);
  o << cfg.to_kv().canonical_text();
  m.output(out / "config.txt");
}

void cmd_gen_data(const CommonFlags& f) {
  const auto cfg = load_config(f);
  const auto out = prepare_out(f);
  Manifest m("gen-data", cfg, out);
  const auto data = pipeline::generate_scene_data(cfg);
  pipeline::save_scene_data(data, out);
  m.output(out / "truth");
  m.output(out / "heldout");
  save_config(cfg, out, m);
  m.details()["training_views"] = data.truth.views.size();
  m.details()["heldout_views"] = data.heldout.views.size();
  m.write();
}

void cmd_pretrain_lr(const CommonFlags& f, const std::string& data_dir) {
  require_file(data_dir, "dataset directory");
  auto cfg = load_config(f);
  const auto out = prepare_out(f);
  Manifest m("pretrain-lr", cfg, out);
  const auto data = pipeline::load_scene_data(data_dir);
  cfg.lr.checkpoint_path = out / "lr_field.partial.bin";
  std::ofstream log(out / "lr_log.txt");
  log << "# step mse\n";
  const auto field = training::pretrain_lr_nerf(data.truth, cfg.lr_field, cfg.lr, [&](const training::LrPretrainStep& s) {
    log << s.step << ' ' << s.mse << '\n';
    if (s.step % 250 == 0) std::cerr << "pretrain-lr step " << s.step << " mse " << s.mse << "\n";
  });
  nerf::save_field(field, out / "lr_field.bin");
  fs::remove(cfg.lr.checkpoint_path);
  const double psnr = training::mean_lr_psnr(field, data.truth);
  std::cerr << "pretrain-lr mean train-view PSNR " << psnr << " dB\n";
  m.output(out / "lr_field.bin");
  m.output(out / "lr_log.txt");
  m.details()["mean_train_psnr_db"] = psnr;
  m.details()["parameters"] = field.parameter_count();
  m.write();
}

void cmd_pretrain_sr(const CommonFlags& f) {
  const auto cfg = load_config(f);
  const auto out = prepare_out(f);
  Manifest m("pretrain-sr", cfg, out);
  std::ofstream log(out / "sr_log.txt");
  log << "# step reconstruction diversity total\n";
  const auto net = pipeline::pretrain_sr(cfg, [&](const ccsr::SrPretrainStep& s) {
    log << s.step << ' ' << s.reconstruction << ' ' << s.diversity << ' ' << s.total << '\n';
    if (s.step % 250 == 0) std::cerr << "pretrain-sr step " << s.step << " l1 " << s.reconstruction << "\n";
  });
  ccsr::save_backbone(net, out / "sr_backbone.bin");
  m.output(out / "sr_backbone.bin");
  m.output(out / "sr_log.txt");
  m.details()["parameters"] = net.parameter_count();
  m.write();
}

struct TrainInputs {
  std::string data, lr_field, sr;
  bool resume = false;
};

training::CheckpointBundle run_training(const pipeline::PipelineConfig& cfg, const TrainInputs& in, const fs::path& out,
                                        const scene::MultiViewDataset& train, Manifest& m) {
  std::optional<nerf::RadianceField> lr_field;
  if (cfg.train.use_lr_nerf) {
    require_file(in.lr_field, "LR field checkpoint (--lr-field)");
    lr_field = nerf::load_field(in.lr_field);
  }
  const auto backbone = ccsr::load_backbone(in.sr);
  training::TrainOptions opts;
  opts.checkpoint_dir = out / "checkpoint";
  opts.log_path = out / "loss.txt";
  opts.on_report = [&](const training::LossReport& r) {
    if (r.t % 100 == 0) {
      std::fprintf(stderr, "train t %lld alpha %.4f loss_sr %.5f loss_range %.5f\n", static_cast<long long>(r.t),
                   r.alpha_t, r.loss_sr, r.loss_range);
    }
  };
  std::optional<training::CheckpointBundle> resume;
  const auto ckpt = opts.checkpoint_dir / "checkpoint.bin";
  if (in.resume && fs::exists(ckpt)) {
    resume = training::CheckpointBundle::load(ckpt);
    std::cerr << "resuming from t = " << resume->state.t << "\n";
  }
  auto bundle = training::train_super_nerf(train, lr_field ? &*lr_field : nullptr, backbone, cfg.train, opts,
                                           resume ? &*resume : nullptr);
  bundle.save(out / "final.bin");
  m.output(out / "final.bin");
  m.output(out / "loss.txt");
  m.output(ckpt);
  m.details()["latent_codes"] = bundle.state.latents.size();
  m.details()["iterations"] = bundle.state.t;
  m.details()["train_config_hash"] = bundle.config_hash;
  m.details()["use_lr_nerf"] = cfg.train.use_lr_nerf;
  m.details()["hybrid_hr_fraction"] = cfg.hybrid_hr_fraction;
  m.details()["latent_downsample"] = cfg.train.latent_downsample;
  return bundle;
}

void cmd_train(const CommonFlags& f, const TrainInputs& in) {
  require_file(in.data, "dataset directory (--data)");
  require_file(in.sr, "SR backbone checkpoint (--sr)");
  const auto cfg = load_config(f);
  const auto out = prepare_out(f);
  Manifest m("train", cfg, out);
  save_config(cfg, out, m);
  const auto data = pipeline::load_scene_data(in.data);
  const auto train = pipeline::training_set(data.truth, cfg.hybrid_hr_fraction);
  const auto bundle = run_training(cfg, in, out, train, m);
  fs::create_directories(out / "sr_views");
  const auto backbone = ccsr::load_backbone(in.sr);
  const auto srs = pipeline::trained_sr(train, backbone, bundle.state, cfg.scale);
  for (std::size_t p = 0; p < srs.size(); ++p) {
    const auto path = out / "sr_views" / ("view_" + std::to_string(train.views[p].index) + ".png");
    write_png(path, srs[p], 8);
    m.output(path);
  }
  m.write();
}

void evaluate_into(const pipeline::PipelineConfig& cfg, const pipeline::SceneData& data,
                   const training::CheckpointBundle& bundle, const ccsr::SrBackbone& backbone, const fs::path& out,
                   const fs::path& loss_log, Manifest& m, const std::string& run_id) {
  const auto train = pipeline::training_set(data.truth, cfg.hybrid_hr_fraction);
  const auto report = pipeline::evaluate(cfg, data, train, backbone, bundle, run_id);
  eval::emit_report(report, out, loss_log);
  m.output(out / "metrics.json");
  m.output(out / "metrics.txt");
  m.output(out / "plots");
  std::cerr << eval::report_table(report);
}

void cmd_eval(const CommonFlags& f, const std::string& data_dir, const std::string& checkpoint, const std::string& sr,
              const std::string& loss_log) {
  require_file(data_dir, "dataset directory (--data)");
  require_file(checkpoint, "checkpoint (--checkpoint)");
  require_file(sr, "SR backbone checkpoint (--sr)");
  const auto cfg = load_config(f);
  const auto out = prepare_out(f);
  Manifest m("eval", cfg, out);
  const auto bundle = training::CheckpointBundle::load(checkpoint);
  if (bundle.config_hash != cfg.train.hash()) {
    throw ConfigError("checkpoint was trained with config " + bundle.config_hash + ", flags give " + cfg.train.hash());
  }
  evaluate_into(cfg, pipeline::load_scene_data(data_dir), bundle, ccsr::load_backbone(sr), out, loss_log, m,
                fs::path(checkpoint).parent_path().filename().string());
  m.write();
}

void cmd_render(const CommonFlags& f, const std::string& checkpoint, int frames, int height, int width) {
  require_file(checkpoint, "checkpoint (--checkpoint)");
  const auto cfg = load_config(f);
  if (frames < 1) throw UsageError("--frames must be >= 1");
  const auto out = prepare_out(f);
  Manifest m("render", cfg, out);
  const auto bundle = training::CheckpointBundle::load(checkpoint);
  const auto spec = cfg.scene_spec();
  const int h = height > 0 ? height : spec.ring.lr_height * cfg.scale;
  const int w = width > 0 ? width : spec.ring.lr_width * cfg.scale;
  for (int k = 0; k < frames; ++k) {
    const double az = spec.ring.azimuth_center_deg - 0.5 * spec.ring.arc_deg +
                      spec.ring.arc_deg * (frames == 1 ? 0.5 : static_cast<double>(k) / (frames - 1));
    const auto pose = scene::ring_pose(spec, az, spec.ring.elevation_deg);
    char name[32];
    std::snprintf(name, sizeof name, "frame_%03d.png", k);
    write_png(out / name, nerf::render_image(bundle.state.hr_field, pose, h, w), 8);
    m.output(out / name);
    std::cerr << "rendered " << name << "\n";
  }
  m.details()["frames"] = frames;
  m.write();
}

void cmd_ablate_latent(const CommonFlags& f, const TrainInputs& in) {
  require_file(in.data, "dataset directory (--data)");
  require_file(in.sr, "SR backbone checkpoint (--sr)");
  const auto base = load_config(f);
  const auto out = prepare_out(f);
  Manifest m("ablate-latent", base, out);
  const auto data = pipeline::load_scene_data(in.data);
  const auto backbone = ccsr::load_backbone(in.sr);
  Json rows = Json::array();
  for (int ds : {1, 4, 16}) {
    auto cfg = base;
    cfg.train.latent_downsample = ds;
    const auto dir = out / ("downsample_" + std::to_string(ds));
    fs::create_directories(dir);
    Manifest sub("train", cfg, dir);
    const auto train = pipeline::training_set(data.truth, cfg.hybrid_hr_fraction);
    const auto bundle = run_training(cfg, in, dir, train, sub);
    evaluate_into(cfg, data, bundle, backbone, dir / "eval", dir / "loss.txt", sub, "downsample_" + std::to_string(ds));
    sub.write();
    const auto report = nlohmann::json::parse(std::ifstream(dir / "eval" / "metrics.json"));
    Json row;
    row["latent_downsample"] = ds;
    row["psnr_heldout_mean"] = report["psnr_heldout_mean"];
    row["warped_consistency"] = report["warped_consistency"]["supernerf_mean"];
    rows.push_back(row);
    m.output(dir);
  }
  std::ofstream(out / "ablation.json") << rows.dump(2) << "\n";
  m.output(out / "ablation.json");
  m.details()["runs"] = rows;
  m.write();
}

void add_common(CLI::App* sub, CommonFlags& f, bool training_flags) {
  sub->add_option("--config", f.config, "Key-value config file");
  sub->add_option("--seed", f.seed, "Seed for every random choice");
  sub->add_option("--out", f.out, "Output directory")->required();
  sub->add_option("--scale", f.scale, "SR scale factor");
  if (training_flags) {
    sub->add_option("--hybrid-hr-fraction", f.hybrid, "Fraction of views kept at HR")->check(CLI::Range(0.0, 1.0));
    sub->add_flag("--no-lr-nerf", f.no_lr_nerf, "Train without LR-field supervision (alpha = 0)");
    sub->add_option("--latent-downsample", f.latent_downsample, "Latent entry reduction: 1, 4 or 16")
        ->check(CLI::IsMember({1, 4, 16}));
    sub->add_option("--iterations", f.iterations, "Mutual-learning iterations");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Super-NeRF: view-consistent NeRF super-resolution from low-resolution views"};
  app.require_subcommand(1);
  CommonFlags f;
  TrainInputs in;
  std::string checkpoint, loss_log;
  int frames = 12, height = 0, width = 0;

  auto* gen = app.add_subcommand("gen-data", "Render the synthetic scene (training truth and held-out views)");
  add_common(gen, f, false);

  auto* plr = app.add_subcommand("pretrain-lr", "Fit the LR field on the LR training images");
  add_common(plr, f, false);
  plr->add_option("--data", in.data, "Dataset directory from gen-data")->required();

  auto* psr = app.add_subcommand("pretrain-sr", "Pretrain the latent-conditioned SR backbone");
  add_common(psr, f, false);

  auto* tr = app.add_subcommand("train", "Mutual learning of the HR field and the latent codes");
  add_common(tr, f, true);
  tr->add_option("--data", in.data, "Dataset directory")->required();
  tr->add_option("--lr-field", in.lr_field, "LR field checkpoint");
  tr->add_option("--sr", in.sr, "SR backbone checkpoint")->required();
  tr->add_flag("--resume", in.resume, "Continue from <out>/checkpoint/checkpoint.bin when present");

  auto* rd = app.add_subcommand("render", "Render novel views along the camera arc");
  add_common(rd, f, false);
  rd->add_option("--checkpoint", checkpoint, "Training checkpoint")->required();
  rd->add_option("--frames", frames, "Number of frames");
  rd->add_option("--height", height, "Image height (default: HR)");
  rd->add_option("--width", width, "Image width (default: HR)");

  auto* ev = app.add_subcommand("eval", "Evaluate a trained run and emit the metric report");
  add_common(ev, f, true);
  ev->add_option("--data", in.data, "Dataset directory")->required();
  ev->add_option("--checkpoint", checkpoint, "Training checkpoint")->required();
  ev->add_option("--sr", in.sr, "SR backbone checkpoint")->required();
  ev->add_option("--loss-log", loss_log, "Loss log for the loss-curve plot");

  auto* ab = app.add_subcommand("ablate-latent", "Train and evaluate with latent downsampling 1, 4 and 16");
  add_common(ab, f, false);
  ab->add_option("--data", in.data, "Dataset directory")->required();
  ab->add_option("--lr-field", in.lr_field, "LR field checkpoint");
  ab->add_option("--sr", in.sr, "SR backbone checkpoint")->required();
  ab->add_option("--hybrid-hr-fraction", f.hybrid, "Fraction of views kept at HR")->check(CLI::Range(0.0, 1.0));
  ab->add_option("--iterations", f.iterations, "Mutual-learning iterations");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (*gen) cmd_gen_data(f);
    else if (*plr) cmd_pretrain_lr(f, in.data);
    else if (*psr) cmd_pretrain_sr(f);
    else if (*tr) cmd_train(f, in);
    else if (*rd) cmd_render(f, checkpoint, frames, height, width);
    else if (*ev) cmd_eval(f, in.data, checkpoint, in.sr, loss_log);
    else if (*ab) cmd_ablate_latent(f, in);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
