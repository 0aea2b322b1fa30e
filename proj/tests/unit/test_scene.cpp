#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "supernerf/core/error.hpp"
#include "supernerf/core/image.hpp"
#include "supernerf/scene/camera.hpp"
#include "supernerf/scene/dataset.hpp"
#include "supernerf/scene/scene.hpp"

using namespace supernerf;
using namespace supernerf::scene;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  auto p = fs::temp_directory_path() / ("supernerf_test_scene_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

CameraPose axis_pose(double focal, int w, int h) {
  CameraPose p;
  p.focal = focal;
  p.width = w;
  p.height = h;
  p.near = 0.5;
  p.far = 5.0;
  return p;
}

// Independent sphere-tracing oracle for scenes made of spheres and the ground square.
struct MarchOracle {
  const SceneSpec& spec;

  [[nodiscard]] double ground_sdf(const Eigen::Vector3d& p) const {
    if (!spec.ground.enabled) return 1e9;
    const double dx = std::max(std::abs(p.x()) - spec.ground.half_size, 0.0);
    const double dz = std::max(std::abs(p.z()) - spec.ground.half_size, 0.0);
    const double dy = p.y() - spec.ground.height;
    return std::sqrt(dx * dx + dy * dy + dz * dz);
  }

  // Distance and index of the closest primitive (-1 = ground).
  [[nodiscard]] std::pair<double, int> sdf(const Eigen::Vector3d& p) const {
    double best = ground_sdf(p);
    int which = -1;
    for (std::size_t i = 0; i < spec.spheres.size(); ++i) {
      const double d = (p - spec.spheres[i].center).norm() - spec.spheres[i].radius;
      if (d < best) {
        best = d;
        which = static_cast<int>(i);
      }
    }
    return {best, which};
  }

  [[nodiscard]] std::optional<std::pair<Eigen::Vector3d, int>> march(Eigen::Vector3d o, const Eigen::Vector3d& d) const {
    double t = 0.0;
    for (int it = 0; it < 20000 && t < 50.0; ++it) {
      const auto [dist, which] = sdf(o + t * d);
      if (dist < 1e-10) return std::make_pair(Eigen::Vector3d(o + t * d), which);
      t += dist;
    }
    return std::nullopt;
  }

  [[nodiscard]] Eigen::Vector3d color(const Eigen::Vector3d& o, const Eigen::Vector3d& d) const {
    auto hit = march(o, d);
    if (!hit) return Eigen::Vector3d::Zero();
    const auto& [p, which] = *hit;
    Eigen::Vector3d n;
    Eigen::Vector3d albedo;
    if (which >= 0) {
      n = (p - spec.spheres[which].center).normalized();
      albedo = spec.spheres[which].albedo;
    } else {
      n = Eigen::Vector3d::UnitY();
      const double pc = spec.ground.checker_period;
      const long long cx = static_cast<long long>(std::floor(p.x() / pc));
      const long long cz = static_cast<long long>(std::floor(p.z() / pc));
      albedo = ((cx + cz) & 1LL) ? spec.ground.color_b : spec.ground.color_a;
    }
    const Eigen::Vector3d l = spec.light.direction.normalized();
    double diffuse = std::max(0.0, n.dot(l));
    if (diffuse > 0.0 && march(p + 1e-6 * n, l)) diffuse = 0.0;
    const double a = spec.light.ambient;
    return albedo * (a + (1.0 - a) * diffuse);
  }
};

}  // namespace

TEST_CASE("center ray follows the optical axis") {
  auto pose = axis_pose(50.0, 9, 9);
  auto rays = generate_rays(pose, 9, 9);
  const Eigen::Index center = 4 * 9 + 4;
  CHECK((rays.directions.row(center).transpose() - Eigen::Vector3d(0, 0, -1)).norm() < 1e-12);
}

TEST_CASE("corner ray matches the pinhole formula") {
  auto pose = axis_pose(100.0, 100, 100);
  auto rays = generate_rays(pose, 100, 100);
  const double x = (0.5 - 50.0) / 100.0;
  const double y = -(0.5 - 50.0) / 100.0;
  const double n = std::sqrt(x * x + y * y + 1.0);
  CHECK(rays.directions(0, 0) == doctest::Approx(x / n).epsilon(1e-12));
  CHECK(rays.directions(0, 1) == doctest::Approx(y / n).epsilon(1e-12));
  CHECK(rays.directions(0, 2) == doctest::Approx(-1.0 / n).epsilon(1e-12));
}

TEST_CASE("ray directions are unit norm for an oblique pose") {
  SceneSpec spec = SceneSpec::reference();
  auto pose = ring_pose(spec, 37.0, 28.0);
  auto rays = generate_rays(pose, 24, 20);
  for (Eigen::Index i = 0; i < rays.size(); ++i) CHECK(std::abs(rays.directions.row(i).norm() - 1.0) < 1e-12);
}

TEST_CASE("refined ray grid brackets and aligns with the coarse grid") {
  SceneSpec spec = SceneSpec::reference();
  auto pose = ring_pose(spec, 12.0, 31.0);
  const int h = 8, w = 10, s = 4;
  auto lr = generate_rays(pose, h, w);
  auto hr = generate_rays(pose, h * s, w * s);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const Eigen::Index li = y * w + x;
      Eigen::Vector2d mean_uv = Eigen::Vector2d::Zero();
      Eigen::Vector2d lo(1e9, 1e9), hi(-1e9, -1e9);
      for (int dy = 0; dy < s; ++dy) {
        for (int dx = 0; dx < s; ++dx) {
          const Eigen::Index hi_index = (y * s + dy) * (w * s) + x * s + dx;
          mean_uv += hr.pixel_coords.row(hi_index).transpose();
          const Eigen::Vector3d cam = pose.rotation * hr.directions.row(hi_index).transpose();
          const Eigen::Vector2d proj(cam.x() / -cam.z(), cam.y() / -cam.z());
          lo = lo.cwiseMin(proj);
          hi = hi.cwiseMax(proj);
        }
      }
      mean_uv /= s * s;
      CHECK(std::abs(mean_uv.x() / s - lr.pixel_coords(li, 0)) < 1e-9);
      CHECK(std::abs(mean_uv.y() / s - lr.pixel_coords(li, 1)) < 1e-9);
      const Eigen::Vector3d cam = pose.rotation * lr.directions.row(li).transpose();
      const Eigen::Vector2d proj(cam.x() / -cam.z(), cam.y() / -cam.z());
      CHECK(proj.x() > lo.x());
      CHECK(proj.x() < hi.x());
      CHECK(proj.y() > lo.y());
      CHECK(proj.y() < hi.y());
    }
  }
}

TEST_CASE("synthetic scene generation is deterministic and validated") {
  SceneSpec spec = SceneSpec::one_sphere();
  spec.ring.lr_width = spec.ring.lr_height = 8;
  spec.scale = 2;
  auto a = generate_synthetic_scene(spec, 8, 0);
  auto b = generate_synthetic_scene(spec, 8, 0);
  CHECK(a.views.size() == 8);
  CHECK(a == b);
  auto c = generate_synthetic_scene(spec, 8, 1);
  CHECK_FALSE(a.views[0].pose == c.views[0].pose);

  CHECK_THROWS_AS(generate_synthetic_scene(spec, 1, 0), ConfigError);
  SceneSpec empty;
  empty.ground.enabled = false;
  CHECK_THROWS_AS(generate_synthetic_scene(empty, 8, 0), ConfigError);
  SceneSpec flat = spec;
  flat.ring.radius = 0.0;
  CHECK_THROWS_AS(generate_synthetic_scene(flat, 8, 0), ConfigError);
}

TEST_CASE("pixel at the projected sphere center matches the ray-marching oracle") {
  SceneSpec spec = SceneSpec::two_spheres();
  spec.supersample = 1;
  spec.ring.lr_width = spec.ring.lr_height = 16;
  spec.scale = 2;
  auto ds = generate_synthetic_scene(spec, 8, 0);
  MarchOracle oracle{spec};
  int checked = 0;
  for (const auto& view : ds.views) {
    const auto& pose = view.pose;
    const Eigen::Vector3d cam = pose.to_camera(spec.spheres[0].center);
    const double u = pose.focal * cam.x() / -cam.z() + 0.5 * pose.width;
    const double v = -pose.focal * cam.y() / -cam.z() + 0.5 * pose.height;
    const int x = static_cast<int>(std::floor(u));
    const int y = static_cast<int>(std::floor(v));
    REQUIRE(x >= 0);
    REQUIRE(x < pose.width);
    REQUIRE(y >= 0);
    REQUIRE(y < pose.height);
    const Eigen::Vector3d d = pixel_direction(pose, pose.height, pose.width, x + 0.5, y + 0.5);
    const Eigen::Vector3d expected = oracle.color(pose.position, d);
    for (int c = 0; c < 3; ++c) CHECK(view.image.at(y, x, c) == doctest::Approx(expected(c)).epsilon(1e-5));
    // The center pixel shows the sphere: its color is a multiple of the albedo.
    const double k = expected(0) / spec.spheres[0].albedo(0);
    CHECK(k >= spec.light.ambient - 1e-9);
    CHECK((expected - k * spec.spheres[0].albedo).norm() < 1e-9);
    ++checked;
  }
  CHECK(checked == 8);
}

TEST_CASE("ring oracle agrees with the tracer over whole images") {
  SceneSpec spec = SceneSpec::two_spheres();
  spec.supersample = 1;
  spec.ring.lr_width = spec.ring.lr_height = 8;
  spec.scale = 2;
  auto ds = generate_synthetic_scene(spec, 2, 3);
  MarchOracle oracle{spec};
  const auto& view = ds.views[1];
  int mismatched = 0;
  for (int y = 0; y < view.pose.height; ++y) {
    for (int x = 0; x < view.pose.width; ++x) {
      const auto d = pixel_direction(view.pose, view.pose.height, view.pose.width, x + 0.5, y + 0.5);
      const auto e = oracle.color(view.pose.position, d);
      for (int c = 0; c < 3; ++c) mismatched += std::abs(view.image.at(y, x, c) - e(c)) > 1e-4;
    }
  }
  // Grazing rays at silhouette or checker boundaries may legitimately differ.
  CHECK(mismatched <= 3);
}

TEST_CASE("hr view selection and degradation") {
  CHECK(select_hr_views(8, 0.0).empty());
  CHECK(select_hr_views(8, 1.0).size() == 8);
  CHECK(select_hr_views(10, 0.2) == std::vector<int>{2, 7});

  SceneSpec spec = SceneSpec::one_sphere();
  spec.ring.lr_width = spec.ring.lr_height = 8;
  spec.scale = 2;
  auto truth = generate_synthetic_scene(spec, 4, 0);
  auto mixed = degrade(truth, {1});
  CHECK(mixed.count(ResolutionTag::HR) == 1);
  CHECK(mixed.count(ResolutionTag::LR) == 3);
  CHECK(mixed.views[0].image == box_downsample(truth.views[0].image, 2));
  CHECK(mixed.views[0].pose.width == 8);
  CHECK(mixed.views[0].pose.focal == doctest::Approx(truth.views[0].pose.focal / 2));
  CHECK(mixed.views[1].image == truth.views[1].image);
  CHECK(lr_image(mixed.views[1], 2) == box_downsample(truth.views[1].image, 2));
  CHECK(mixed.lr_size() == std::pair{8, 8});
  CHECK(mixed.hr_size() == std::pair{16, 16});
}

TEST_CASE("dataset round trip") {
  SceneSpec spec = SceneSpec::reference();
  spec.ring.lr_width = spec.ring.lr_height = 8;
  spec.scale = 2;
  auto truth = generate_synthetic_scene(spec, 3, 5);
  auto ds = degrade(truth, {0});
  auto dir = temp_dir("roundtrip");
  save_dataset(ds, dir, 16);
  auto back = load_dataset(dir);
  REQUIRE(back.views.size() == ds.views.size());
  CHECK(back.scale == ds.scale);
  for (std::size_t i = 0; i < ds.views.size(); ++i) {
    CHECK(back.views[i].pose == ds.views[i].pose);
    CHECK(back.views[i].tag == ds.views[i].tag);
    CHECK(back.views[i].index == ds.views[i].index);
    const auto& a = ds.views[i].image.pixels;
    const auto& b = back.views[i].image.pixels;
    REQUIRE(a.size() == b.size());
    double worst = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) worst = std::max(worst, std::abs(double(a[k]) - b[k]));
    CHECK(worst <= 0.5 / 65535.0 + 1e-7);
  }
  // Saving what was loaded reproduces it bit-exactly.
  auto dir2 = temp_dir("roundtrip2");
  save_dataset(back, dir2, 16);
  CHECK(load_dataset(dir2) == back);
}

TEST_CASE("dataset loading reports corruption") {
  SceneSpec spec = SceneSpec::one_sphere();
  spec.ring.lr_width = spec.ring.lr_height = 8;
  spec.scale = 2;
  auto ds = degrade(generate_synthetic_scene(spec, 2, 0), {});
  auto dir = temp_dir("corrupt");
  save_dataset(ds, dir, 8);

  std::stringstream full;
  full << std::ifstream(dir / "poses.txt").rdbuf();
  const std::string text = full.str();

  SUBCASE("truncated poses") {
    std::ofstream(dir / "poses.txt") << text.substr(0, text.size() - 20);
    CHECK_THROWS_AS(load_dataset(dir), IoError);
  }
  SUBCASE("missing image") {
    fs::remove(dir / "view_1.png");
    CHECK_THROWS_AS(load_dataset(dir), IoError);
  }
  SUBCASE("tag does not match the image size") {
    std::string bad = text;
    const auto pos = bad.rfind(" LR ");
    REQUIRE(pos != std::string::npos);
    bad.replace(pos, 4, " HR ");
    std::ofstream(dir / "poses.txt") << bad;
    CHECK_THROWS_AS(load_dataset(dir), IoError);
  }
  SUBCASE("missing directory") { CHECK_THROWS_AS(load_dataset(dir / "nope"), IoError); }
}
