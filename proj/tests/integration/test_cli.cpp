#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "json.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path kRoot = fs::temp_directory_path() / "supernerf_cli_test";

int run(const std::string& args) {
  const std::string cmd = std::string(SUPERNERF_CLI) + " " + args + " >>" + (kRoot / "cli.log").string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

bool same_tree(const fs::path& a, const fs::path& b) {
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (!e.is_regular_file()) continue;
    const auto other = b / fs::relative(e.path(), a);
    if (!fs::exists(other) || slurp(e.path()) != slurp(other)) return false;
  }
  return true;
}

nlohmann::json manifest(const fs::path& dir) { return nlohmann::json::parse(slurp(dir / "manifest.json")); }

std::string tiny_config() {
  const auto p = kRoot / "tiny.cfg";
  std::ofstream o(p);
  o << "# small budget for the command-line tests\n"
       "scene = one_sphere\nviews = 3\nheldout_views = 1\n"
       "lr_field.frequencies = 2\nlr_field.width = 8\nlr_field.layers = 1\nlr_field.samples = 8\n"
       "lr.iterations = 5\nlr.rays_per_step = 64\n"
       "sr.channels = 4\nsr.blocks = 1\nsr.steps = 2\nsr.batch = 1\nsr.patch = 16\nsr.corpus_size = 2\nsr.corpus_image = 16\n"
       "hr_field.frequencies = 3\nhr_field.width = 8\nhr_field.layers = 1\nhr_field.samples = 8\n"
       "train.iterations = 4\ntrain.rays_per_step = 16\ntrain.checkpoint_every = 2\neval.max_gap = 1\n";
  return p.string();
}

struct Setup {
  Setup() {
    fs::remove_all(kRoot);
    fs::create_directories(kRoot);
  }
};

}  // namespace

TEST_CASE("command-line pipeline") {
  Setup setup;
  const auto cfg = tiny_config();
  const auto d = kRoot.string();

  SUBCASE("gen-data is deterministic") {
    REQUIRE(run("gen-data --config " + cfg + " --seed 0 --out " + d + "/data_a") == 0);
    REQUIRE(run("gen-data --config " + cfg + " --seed 0 --out " + d + "/data_b") == 0);
    CHECK(same_tree(kRoot / "data_a" / "truth", kRoot / "data_b" / "truth"));
    CHECK(same_tree(kRoot / "data_a" / "heldout", kRoot / "data_b" / "heldout"));
    CHECK(manifest(kRoot / "data_a")["command"] == "gen-data");
    REQUIRE(run("gen-data --config " + cfg + " --seed 1 --out " + d + "/data_c") == 0);
    CHECK_FALSE(same_tree(kRoot / "data_a" / "truth", kRoot / "data_c" / "truth"));
  }

  SUBCASE("usage errors exit with 2, runtime failures with 1") {
    CHECK(run("gen-data --bogus --out " + d + "/x") == 2);
    CHECK(run("") == 2);
    CHECK(run("train --out " + d + "/t --data " + d + "/missing --sr " + d + "/missing.bin") == 2);
    CHECK(run("train --out " + d + "/t --data " + d + " --sr x --latent-downsample 3") == 2);
    {
      std::ofstream o(kRoot / "bad.cfg");
      o << "no_such_key = 1\n";
    }
    CHECK(run("gen-data --config " + d + "/bad.cfg --out " + d + "/x") == 2);
    {
      std::ofstream o(kRoot / "corrupt.bin");
      o << "not a checkpoint";
    }
    CHECK(run("render --config " + cfg + " --checkpoint " + d + "/corrupt.bin --out " + d + "/r") == 1);
  }

  SUBCASE("full pipeline writes manifests and a report") {
    REQUIRE(run("gen-data --config " + cfg + " --out " + d + "/data") == 0);
    REQUIRE(run("pretrain-lr --config " + cfg + " --data " + d + "/data --out " + d + "/lr") == 0);
    REQUIRE(run("pretrain-sr --config " + cfg + " --out " + d + "/sr") == 0);
    const std::string inputs = " --data " + d + "/data --lr-field " + d + "/lr/lr_field.bin --sr " + d + "/sr/sr_backbone.bin";
    REQUIRE(run("train --config " + cfg + inputs + " --out " + d + "/train") == 0);
    CHECK(manifest(kRoot / "train")["details"]["latent_codes"] == 3);
    CHECK(fs::exists(kRoot / "train" / "checkpoint" / "checkpoint.bin"));
    CHECK(fs::exists(kRoot / "train" / "sr_views" / "view_0.png"));

    // Resuming a finished run changes nothing.
    const auto before = slurp(kRoot / "train" / "final.bin");
    REQUIRE(run("train --resume --config " + cfg + inputs + " --out " + d + "/train") == 0);
    CHECK(slurp(kRoot / "train" / "final.bin") == before);

    REQUIRE(run("eval --config " + cfg + " --data " + d + "/data --sr " + d + "/sr/sr_backbone.bin --checkpoint " + d +
                "/train/final.bin --loss-log " + d + "/train/loss.txt --out " + d + "/eval") == 0);
    const auto metrics = nlohmann::json::parse(slurp(kRoot / "eval" / "metrics.json"));
    CHECK(metrics["warped_consistency"]["pairs"].size() == 2);
    CHECK(fs::exists(kRoot / "eval" / "plots" / "loss_curve.png"));
    CHECK(manifest(kRoot / "eval")["command"] == "eval");
    // A config mismatch between checkpoint and flags is a usage error.
    CHECK(run("eval --config " + cfg + " --seed 5 --data " + d + "/data --sr " + d + "/sr/sr_backbone.bin --checkpoint " + d +
              "/train/final.bin --out " + d + "/eval2") == 2);

    REQUIRE(run("render --config " + cfg + " --checkpoint " + d + "/train/final.bin --frames 2 --height 16 --width 16 --out " +
                d + "/render") == 0);
    CHECK(fs::exists(kRoot / "render" / "frame_001.png"));

    REQUIRE(run("train --config " + cfg + inputs + " --hybrid-hr-fraction 1.0 --out " + d + "/train_hr") == 0);
    CHECK(manifest(kRoot / "train_hr")["details"]["latent_codes"] == 0);

    REQUIRE(run("train --config " + cfg + inputs + " --no-lr-nerf --out " + d + "/train_nolr") == 0);
    CHECK(manifest(kRoot / "train_nolr")["details"]["use_lr_nerf"] == false);

    REQUIRE(run("ablate-latent --config " + cfg + inputs + " --out " + d + "/ablate") == 0);
    const auto rows = nlohmann::json::parse(slurp(kRoot / "ablate" / "ablation.json"));
    REQUIRE(rows.size() == 3);
    CHECK(rows[2]["latent_downsample"] == 16);
  }
}
