#include <cmath>
#include <filesystem>
#include <fstream>
#include <vector>

#include "doctest.h"
#include "supernerf/core/error.hpp"
#include "supernerf/nerf/render.hpp"
#include "supernerf/scene/scene.hpp"
#include "supernerf/training/lr_pretrain.hpp"
#include "supernerf/training/super_nerf.hpp"

using namespace supernerf;
using namespace supernerf::training;

namespace {

ImageBuffer constant_image(int h, int w, float v) {
  ImageBuffer img(h, w);
  for (auto& p : img.pixels) p = v;
  return img;
}

struct Fixture {
  scene::MultiViewDataset truth;
  nerf::RadianceField lr_field;
  ccsr::SrBackbone backbone;

  Fixture() {
    auto spec = scene::SceneSpec::one_sphere();
    spec.ring.lr_width = 8;
    spec.ring.lr_height = 8;
    spec.ring.focal_lr = 9.0;
    spec.scale = 2;
    spec.supersample = 1;
    truth = scene::generate_synthetic_scene(spec, 4, 3);
    lr_field = nerf::RadianceField({2, 8, 1, 8, nerf::FieldRole::LR, 0.5}, 11);
    backbone = ccsr::SrBackbone({2, 4, 2, 0.5}, 5);
  }

  scene::MultiViewDataset hybrid(double fraction) const {
    return scene::degrade(truth, scene::select_hr_views(static_cast<int>(truth.views.size()), fraction));
  }
};

TrainConfig small_config() {
  TrainConfig cfg;
  cfg.iterations = 8;
  cfg.rays_per_step = 16;
  cfg.scale = 2;
  cfg.checkpoint_every = 4;
  cfg.seed = 9;
  cfg.hr_field = {3, 8, 1, 8, nerf::FieldRole::HR, 0.5};
  return cfg;
}

std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("supernerf_training_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::vector<std::string> read_lines(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::vector<std::string> out;
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

}  // namespace

TEST_CASE("alpha schedule") {
  const AlphaSchedule s{100.0, 0.0};
  CHECK(s(0) == 1.0);
  CHECK(s(100) == doctest::Approx(std::exp(-1.0)));
  double prev = 2.0;
  for (int t = 0; t < 1000; t += 7) {
    CHECK(s(t) < prev);
    CHECK(s(t) >= 0.0);
    prev = s(t);
  }
  const AlphaSchedule floored{100.0, 0.2};
  CHECK(floored(1000) == 0.2);
  CHECK(AlphaSchedule::for_iterations(2000).tau == 400.0);
  CHECK_THROWS_AS((void)s(-1), ConfigError);
  const AlphaSchedule degenerate{0.0, 0.0};
  CHECK_THROWS_AS(degenerate.validate(), ConfigError);
}

TEST_CASE("loss_sr hand values") {
  const auto hr = constant_image(2, 2, 0.5f);
  const auto ln = constant_image(2, 2, 0.75f);
  const auto hn = constant_image(2, 2, 0.0f);
  CHECK(loss_sr(ln, hn, hr, 1.0) == doctest::Approx(0.25));
  CHECK(loss_sr(ln, hn, hr, 0.0) == doctest::Approx(0.5));
  CHECK(loss_sr(ln, hn, hr, 0.5) == doctest::Approx(0.375));
  // one entry off by 1.2 among 12
  auto odd = hr;
  odd.pixels[5] = -0.7f;
  CHECK(loss_sr(hr, odd, hr, 0.0) == doctest::Approx(0.1));
  CHECK(loss_sr(hr, hr, hr, 0.3) == 0.0);
  // alpha = 1 with C_HR at C_LN: nothing left to fit, whatever C_HN is
  CHECK(loss_sr(ln, hn, ln, 1.0) == 0.0);
  CHECK_THROWS_AS((void)loss_sr(hr, hr, hr, 1.5), ConfigError);
  CHECK_THROWS_AS((void)loss_sr(hr, constant_image(2, 3, 0.f), hr, 0.5), ShapeError);
}

TEST_CASE("loss_range hand values") {
  CHECK(loss_range(constant_image(2, 2, 0.3f)) == 0.0);
  CHECK(loss_range(constant_image(2, 2, 1.0f)) == 0.0);
  auto img = constant_image(2, 2, 0.5f);
  img.pixels[0] = 1.5f;
  img.pixels[7] = -0.25f;
  CHECK(loss_range(img) == doctest::Approx((0.5 + 0.25) / 4.0));
}

TEST_CASE("loss log line round trip") {
  LossReport r{17, 3, 0.25, 0.125, 1e-9, 0.125 + 1e-9, 12.5};
  const auto back = LossReport::parse_line(r.to_line());
  CHECK(back.same_values(r));
  CHECK_THROWS((void)LossReport::parse_line("12 x"));
}

TEST_CASE("config validation and hashing") {
  auto cfg = small_config();
  CHECK_NOTHROW(cfg.validate());
  CHECK(cfg.hash() == small_config().hash());
  auto other = cfg;
  other.seed = 10;
  CHECK(other.hash() != cfg.hash());
  other = cfg;
  other.latent_downsample = 3;
  CHECK_THROWS_AS(other.validate(), ConfigError);
  other = cfg;
  other.rays_per_step = 0;
  CHECK_THROWS_AS(other.validate(), ConfigError);
  CHECK(cfg.schedule().tau == doctest::Approx(cfg.iterations / 5.0));
}

TEST_CASE("trainer construction errors") {
  Fixture f;
  const auto ds = f.hybrid(0.0);
  auto cfg = small_config();
  CHECK_THROWS_AS(SuperNerfTrainer(ds, nullptr, f.backbone, cfg), ConfigError);
  cfg.scale = 4;
  CHECK_THROWS_AS(SuperNerfTrainer(ds, &f.lr_field, f.backbone, cfg), ConfigError);
}

TEST_CASE("frozen modules stay untouched and SR targets stay LR-consistent") {
  Fixture f;
  const auto ds = f.hybrid(0.25);
  const auto lr_before = f.lr_field;
  const auto g_before = f.backbone;
  const auto cfg = small_config();
  SuperNerfTrainer trainer(ds, &f.lr_field, f.backbone, cfg);
  auto st = trainer.initial_state();
  const auto codes_before = st.latents;
  for (int i = 0; i < 12; ++i) (void)trainer.step(st, i % static_cast<int>(ds.views.size()));
  CHECK(f.lr_field == lr_before);
  CHECK(f.backbone == g_before);
  CHECK(st.t == 12);
  CHECK_FALSE(st.latents == codes_before);

  const ccsr::BlurKernel box{cfg.scale};
  for (int p = 0; p < static_cast<int>(ds.views.size()); ++p) {
    const auto target = trainer.sr_target(st, p);
    const auto down = box.apply(target);
    const auto& lr = trainer.lr_images()[p];
    double worst = 0.0;
    for (std::size_t i = 0; i < lr.size(); ++i) worst = std::max(worst, std::abs(double(down.pixels[i]) - lr.pixels[i]));
    CHECK(worst <= 1e-5);
  }
}

TEST_CASE("alpha one leaves the HR field unchanged at the first step") {
  Fixture f;
  const auto ds = f.hybrid(0.0);
  SuperNerfTrainer trainer(ds, &f.lr_field, f.backbone, small_config());
  auto st = trainer.initial_state();
  const auto field_before = st.hr_field;
  const auto r = trainer.step(st, 0);
  CHECK(r.alpha_t == 1.0);
  CHECK(st.hr_field == field_before);
  const auto r2 = trainer.step(st, 1);
  CHECK(r2.alpha_t < 1.0);
  CHECK_FALSE(st.hr_field == field_before);
}

TEST_CASE("loss_total is loss_sr plus loss_range") {
  Fixture f;
  const auto ds = f.hybrid(0.5);
  SuperNerfTrainer trainer(ds, &f.lr_field, f.backbone, small_config());
  auto st = trainer.initial_state();
  for (int p = 0; p < static_cast<int>(ds.views.size()); ++p) {
    const auto r = trainer.step(st, p);
    CHECK(r.loss_total == doctest::Approx(r.loss_sr + r.loss_range));
    CHECK(std::isfinite(r.loss_total));
    if (ds.views[p].tag == scene::ResolutionTag::HR) CHECK(r.loss_range == 0.0);
  }
}

TEST_CASE("hybrid with all views at HR uses no latent codes") {
  Fixture f;
  const auto ds = f.hybrid(1.0);
  SuperNerfTrainer trainer(ds, &f.lr_field, f.backbone, small_config());
  auto st = trainer.initial_state();
  CHECK(st.latents.empty());
  CHECK(st.latent_opt.empty());
  CHECK(trainer.sr_target(st, 0) == ds.views[0].image);
  CHECK_THROWS_AS((void)trainer.sr_candidate(st, 0), ConfigError);
  (void)trainer.step(st, 0);
}

TEST_CASE("without the LR field alpha is zero") {
  Fixture f;
  const auto ds = f.hybrid(0.0);
  auto cfg = small_config();
  cfg.use_lr_nerf = false;
  SuperNerfTrainer trainer(ds, nullptr, f.backbone, cfg);
  auto st = trainer.initial_state();
  const auto field_before = st.hr_field;
  const auto r = trainer.step(st, 0);
  CHECK(r.alpha_t == 0.0);
  CHECK_FALSE(st.hr_field == field_before);
  CHECK(trainer.lr_field_renders().empty());
}

TEST_CASE("latent downsampling shrinks the codes") {
  Fixture f;
  const auto ds = f.hybrid(0.0);
  auto cfg = small_config();
  cfg.latent_downsample = 4;
  SuperNerfTrainer trainer(ds, &f.lr_field, f.backbone, cfg);
  auto st = trainer.initial_state();
  const auto& code = st.latents.at(ds.views[0].index);
  const auto [h, w] = ds.hr_size();
  CHECK(code.values.size() == static_cast<std::size_t>(h * w * 3 / 4));
  (void)trainer.step(st, 0);
  CHECK(trainer.sr_target(st, 0).height == h);
}

TEST_CASE("training is deterministic and resumes bit-exactly") {
  Fixture f;
  const auto ds = f.hybrid(0.25);
  const auto cfg = small_config();

  const auto dir_a = temp_dir("full");
  TrainOptions full;
  full.checkpoint_dir = dir_a / "ckpt";
  full.log_path = dir_a / "loss.txt";
  const auto a = train_super_nerf(ds, &f.lr_field, f.backbone, cfg, full);
  CHECK(a.state.t == cfg.iterations);
  const auto again = train_super_nerf(ds, &f.lr_field, f.backbone, cfg);
  CHECK(again.state == a.state);

  const auto dir_b = temp_dir("resume");
  TrainOptions part;
  part.checkpoint_dir = dir_b / "ckpt";
  part.log_path = dir_b / "loss.txt";
  part.stop_after = 4;
  const auto stopped = train_super_nerf(ds, &f.lr_field, f.backbone, cfg, part);
  CHECK(stopped.state.t == 4);
  const auto loaded = CheckpointBundle::load(part.checkpoint_dir / "checkpoint.bin");
  CHECK(loaded.state == stopped.state);
  part.stop_after = -1;
  const auto resumed = train_super_nerf(ds, &f.lr_field, f.backbone, cfg, part, &loaded);
  CHECK(resumed.state == a.state);
  CHECK(CheckpointBundle::load(part.checkpoint_dir / "checkpoint.bin").state == a.state);

  const auto la = read_lines(full.log_path);
  const auto lb = read_lines(part.log_path);
  REQUIRE(la.size() == lb.size());
  REQUIRE(la.size() == static_cast<std::size_t>(cfg.iterations) + 1);
  for (std::size_t i = 1; i < la.size(); ++i) {
    CHECK(LossReport::parse_line(la[i]).same_values(LossReport::parse_line(lb[i])));
  }

  auto other = cfg;
  other.seed = 1234;
  const TrainOptions none;
  CHECK_THROWS_AS(train_super_nerf(ds, &f.lr_field, f.backbone, other, none, &loaded), ConfigError);
  std::filesystem::remove_all(dir_a);
  std::filesystem::remove_all(dir_b);
}

TEST_CASE("corrupt checkpoint is rejected") {
  const auto dir = temp_dir("corrupt");
  {
    std::ofstream o(dir / "bad.bin", std::ios::binary);
    o << "garbage";
  }
  CHECK_THROWS_AS(CheckpointBundle::load(dir / "bad.bin"), IoError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("LR pretraining fits a tiny scene") {
  Fixture f;
  const auto ds = f.hybrid(0.0);
  LrPretrainConfig cfg;
  cfg.iterations = 150;
  cfg.rays_per_step = 64;
  cfg.learning_rate = 1e-2f;
  const nerf::FieldConfig fc{3, 16, 2, 16, nerf::FieldRole::LR, 0.5};
  const nerf::RadianceField fresh(fc, cfg.seed);
  const double before = mean_lr_psnr(fresh, ds);
  const auto field = pretrain_lr_nerf(ds, fc, cfg);
  CHECK(mean_lr_psnr(field, ds) > before + 3.0);
}
