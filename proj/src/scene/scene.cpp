#include "supernerf/scene/scene.hpp"

#include <Eigen/Geometry>
#include <cmath>
#include <limits>
#include <numbers>

#include "supernerf/core/error.hpp"
#include "supernerf/core/random.hpp"

namespace supernerf::scene {
namespace {

constexpr double kEps = 1e-9;

double deg2rad(double d) { return d * std::numbers::pi / 180.0; }

// Checker parity for a point; period p.
bool checker(const Eigen::Vector3d& p, double period) {
  const auto cell = [&](double v) { return static_cast<long long>(std::floor(v / period)); };
  return ((cell(p.x()) + cell(p.y()) + cell(p.z())) & 1LL) != 0;
}

std::optional<double> intersect_sphere(const Sphere& s, const Eigen::Vector3d& o, const Eigen::Vector3d& d) {
  const Eigen::Vector3d oc = o - s.center;
  const double b = oc.dot(d);
  const double c = oc.squaredNorm() - s.radius * s.radius;
  const double disc = b * b - c;
  if (disc < 0.0) return std::nullopt;
  const double sq = std::sqrt(disc);
  double t = -b - sq;
  if (t <= kEps) t = -b + sq;
  if (t <= kEps) return std::nullopt;
  return t;
}

std::optional<std::pair<double, Eigen::Vector3d>> intersect_box(const Box& b, const Eigen::Vector3d& o,
                                                                const Eigen::Vector3d& d) {
  double t0 = -std::numeric_limits<double>::infinity();
  double t1 = std::numeric_limits<double>::infinity();
  int axis0 = 0;
  double sign0 = 1.0;
  for (int a = 0; a < 3; ++a) {
    const double lo = b.center(a) - b.half_extent(a);
    const double hi = b.center(a) + b.half_extent(a);
    if (std::abs(d(a)) < 1e-15) {
      if (o(a) < lo || o(a) > hi) return std::nullopt;
      continue;
    }
    double ta = (lo - o(a)) / d(a);
    double tb = (hi - o(a)) / d(a);
    double s = -1.0;  // entering through the low face
    if (ta > tb) {
      std::swap(ta, tb);
      s = 1.0;
    }
    if (ta > t0) {
      t0 = ta;
      axis0 = a;
      sign0 = s;
    }
    t1 = std::min(t1, tb);
  }
  if (t0 > t1 || t0 <= kEps) return std::nullopt;  // camera inside boxes is unsupported
  Eigen::Vector3d n = Eigen::Vector3d::Zero();
  n(axis0) = sign0;
  return std::make_pair(t0, n);
}

std::optional<double> intersect_ground(const Ground& g, const Eigen::Vector3d& o, const Eigen::Vector3d& d) {
  if (!g.enabled || std::abs(d.y()) < 1e-15) return std::nullopt;
  const double t = (g.height - o.y()) / d.y();
  if (t <= kEps) return std::nullopt;
  const Eigen::Vector3d p = o + t * d;
  if (std::abs(p.x()) > g.half_size || std::abs(p.z()) > g.half_size) return std::nullopt;
  return t;
}

}  // namespace

void SceneSpec::validate() const {
  if (spheres.empty() && boxes.empty() && !ground.enabled) throw ConfigError("scene has no objects");
  for (const auto& s : spheres) {
    if (!(s.radius > 0.0)) throw ConfigError("sphere radius must be positive");
  }
  for (const auto& b : boxes) {
    if (!(b.half_extent.minCoeff() > 0.0)) throw ConfigError("box extents must be positive");
  }
  if (!(ring.radius > 0.0) || !std::isfinite(ring.radius)) throw ConfigError("degenerate camera ring radius");
  if (!(ring.near > 0.0 && ring.near < ring.far)) throw ConfigError("camera ring requires 0 < near < far");
  if (ring.lr_width < 8 || ring.lr_height < 8) throw ConfigError("LR image must be at least 8x8");
  if (!(ring.focal_lr > 0.0)) throw ConfigError("focal must be positive");
  if (scale < 1) throw ConfigError("scale must be positive");
  if (supersample < 1) throw ConfigError("supersample must be positive");
  if (light.direction.norm() < 1e-12) throw ConfigError("light direction must be nonzero");
}

SceneSpec SceneSpec::one_sphere() {
  SceneSpec spec;
  spec.ground.enabled = false;
  spec.spheres.push_back({Eigen::Vector3d(0.0, 0.3, 0.0), 0.6, Eigen::Vector3d(0.85, 0.35, 0.3), 0.0, 0.0});
  return spec;
}

SceneSpec SceneSpec::two_spheres() {
  SceneSpec spec;
  spec.spheres.push_back({Eigen::Vector3d(-0.5, 0.45, 0.2), 0.45, Eigen::Vector3d(0.85, 0.3, 0.25), 0.0, 0.0});
  spec.spheres.push_back({Eigen::Vector3d(0.55, 0.35, -0.3), 0.35, Eigen::Vector3d(0.25, 0.45, 0.85), 0.0, 0.0});
  return spec;
}

SceneSpec SceneSpec::reference() {
  SceneSpec spec;
  spec.spheres.push_back({Eigen::Vector3d(-0.5, 0.45, 0.2), 0.45, Eigen::Vector3d(0.88, 0.32, 0.26), 3.0, 0.45});
  spec.spheres.push_back({Eigen::Vector3d(0.55, 0.35, -0.35), 0.35, Eigen::Vector3d(0.28, 0.48, 0.88), 4.0, 0.4});
  Box box;
  box.center = Eigen::Vector3d(0.45, 0.25, 0.6);
  box.half_extent = Eigen::Vector3d(0.25, 0.25, 0.25);
  box.albedo = Eigen::Vector3d(0.35, 0.78, 0.38);
  box.albedo_alt = Eigen::Vector3d(0.9, 0.88, 0.4);
  box.checker_period = 0.125;
  spec.boxes.push_back(box);
  return spec;
}

std::optional<Hit> trace(const SceneSpec& spec, const Eigen::Vector3d& origin, const Eigen::Vector3d& dir) {
  std::optional<Hit> best;
  auto consider = [&](double t, const Eigen::Vector3d& n, const Eigen::Vector3d& albedo) {
    if (!best || t < best->t) best = Hit{t, origin + t * dir, n, albedo};
  };
  for (const auto& s : spec.spheres) {
    if (auto t = intersect_sphere(s, origin, dir)) {
      if (best && *t >= best->t) continue;
      const Eigen::Vector3d p = origin + *t * dir;
      Eigen::Vector3d albedo = s.albedo;
      if (s.stripe_frequency > 0.0) {
        const double u = (p - s.center).dot(Eigen::Vector3d(1.0, 1.0, 0.0).normalized());
        if (std::sin(2.0 * std::numbers::pi * s.stripe_frequency * u) < 0.0) albedo *= 1.0 - s.stripe_amplitude;
      }
      consider(*t, (p - s.center) / s.radius, albedo);
    }
  }
  for (const auto& b : spec.boxes) {
    if (auto hit = intersect_box(b, origin, dir)) {
      if (best && hit->first >= best->t) continue;
      const Eigen::Vector3d p = origin + hit->first * dir;
      const bool alt = b.checker_period > 0.0 && checker(p - b.center + b.half_extent, b.checker_period);
      consider(hit->first, hit->second, alt ? b.albedo_alt : b.albedo);
    }
  }
  if (auto t = intersect_ground(spec.ground, origin, dir)) {
    if (!best || *t < best->t) {
      const Eigen::Vector3d p = origin + *t * dir;
      const bool alt = checker(Eigen::Vector3d(p.x(), 0.0, p.z()), spec.ground.checker_period);
      consider(*t, Eigen::Vector3d::UnitY(), alt ? spec.ground.color_b : spec.ground.color_a);
    }
  }
  return best;
}

Eigen::Vector3d shade(const SceneSpec& spec, const Hit& hit) {
  const Eigen::Vector3d l = spec.light.direction.normalized();
  double diffuse = std::max(0.0, hit.normal.dot(l));
  if (diffuse > 0.0 && spec.light.shadows) {
    if (trace(spec, hit.point + 1e-6 * hit.normal, l)) diffuse = 0.0;
  }
  const double a = spec.light.ambient;
  return hit.albedo * (a + (1.0 - a) * diffuse);
}

Eigen::Vector3d trace_color(const SceneSpec& spec, const Eigen::Vector3d& origin, const Eigen::Vector3d& dir) {
  if (auto hit = trace(spec, origin, dir)) return shade(spec, *hit);
  return Eigen::Vector3d::Zero();
}

ImageBuffer render_ground_truth(const SceneSpec& spec, const CameraPose& pose, int height, int width) {
  ImageBuffer img(height, width);
  const int ss = spec.supersample;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      Eigen::Vector3d acc = Eigen::Vector3d::Zero();
      for (int sy = 0; sy < ss; ++sy) {
        for (int sx = 0; sx < ss; ++sx) {
          const double u = x + (sx + 0.5) / ss;
          const double v = y + (sy + 0.5) / ss;
          acc += trace_color(spec, pose.position, pixel_direction(pose, height, width, u, v));
        }
      }
      acc /= static_cast<double>(ss * ss);
      for (int c = 0; c < 3; ++c) img.at(y, x, c) = static_cast<float>(acc(c));
    }
  }
  return img;
}

CameraPose ring_pose(const SceneSpec& spec, double azimuth_deg, double elevation_deg) {
  const auto& r = spec.ring;
  const double az = deg2rad(azimuth_deg);
  const double el = deg2rad(elevation_deg);
  const Eigen::Vector3d eye =
      r.target + r.radius * Eigen::Vector3d(std::cos(el) * std::sin(az), std::sin(el), std::cos(el) * std::cos(az));
  CameraPose pose = look_at(eye, r.target, Eigen::Vector3d::UnitY(), r.focal_lr * spec.scale, r.lr_width * spec.scale,
                            r.lr_height * spec.scale, r.near, r.far);
  const auto snap = [](double v) { return static_cast<double>(static_cast<float>(v)); };
  // Element-wise loops: GCC 11 at -O3 -march=native drops the narrowing
  // inside a vectorized unaryExpr.
  for (int i = 0; i < 3; ++i) {
    pose.position(i) = snap(pose.position(i));
    for (int j = 0; j < 3; ++j) pose.rotation(i, j) = snap(pose.rotation(i, j));
  }
  pose.focal = snap(pose.focal);
  pose.near = snap(pose.near);
  pose.far = snap(pose.far);
  return pose;
}

double ring_azimuth(const CameraRing& ring, int k, int n) {
  if (ring.arc_deg >= 360.0) return ring.azimuth_center_deg + 360.0 * k / n;
  if (n == 1) return ring.azimuth_center_deg;
  return ring.azimuth_center_deg - 0.5 * ring.arc_deg + ring.arc_deg * k / (n - 1);
}

MultiViewDataset render_views(const SceneSpec& spec, const std::vector<CameraPose>& poses, int first_index) {
  MultiViewDataset ds;
  ds.scale = spec.scale;
  for (std::size_t k = 0; k < poses.size(); ++k) {
    View v;
    v.index = first_index + static_cast<int>(k);
    v.tag = ResolutionTag::HR;
    v.pose = poses[k];
    v.image = render_ground_truth(spec, v.pose, v.pose.height, v.pose.width);
    ds.views.push_back(std::move(v));
  }
  return ds;
}

MultiViewDataset generate_synthetic_scene(const SceneSpec& spec, int n_views, std::uint64_t seed) {
  spec.validate();
  if (n_views < 2) throw ConfigError("generate_synthetic_scene needs at least 2 views");
  auto rng = make_rng(seed, 0x5CE7E);
  std::vector<CameraPose> poses;
  for (int k = 0; k < n_views; ++k) {
    const double ja = spec.ring.jitter_deg * (2.0 * uniform01(rng) - 1.0);
    const double je = spec.ring.jitter_deg * (2.0 * uniform01(rng) - 1.0);
    poses.push_back(ring_pose(spec, ring_azimuth(spec.ring, k, n_views) + ja, spec.ring.elevation_deg + je));
  }
  auto ds = render_views(spec, poses);
  ds.validate();
  return ds;
}

std::vector<CameraPose> held_out_poses(const SceneSpec& spec, int n_train_views, int n_held_out) {
  spec.validate();
  std::vector<CameraPose> out;
  if (n_train_views < 2) throw ConfigError("held-out poses need at least 2 training views");
  const int gaps = spec.ring.arc_deg >= 360.0 ? n_train_views : n_train_views - 1;
  for (int k = 0; k < n_held_out; ++k) {
    // Spread over the gaps between training views.
    const int gap = static_cast<int>((k + 0.5) * gaps / n_held_out);
    const double az = 0.5 * (ring_azimuth(spec.ring, gap, n_train_views) + ring_azimuth(spec.ring, gap + 1, n_train_views));
    out.push_back(ring_pose(spec, az, spec.ring.elevation_deg));
  }
  return out;
}

}  // namespace supernerf::scene
