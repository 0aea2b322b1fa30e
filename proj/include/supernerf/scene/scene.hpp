#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <vector>

#include "supernerf/scene/camera.hpp"
#include "supernerf/scene/dataset.hpp"

namespace supernerf::scene {

/// Sphere with optional hard stripes (albedo scaled by 1 - stripe_amplitude on
/// dark bands) along the (1, 1, 0) diagonal.
struct Sphere {
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  double radius = 0.5;
  Eigen::Vector3d albedo = Eigen::Vector3d::Constant(0.8);
  double stripe_frequency = 0.0;  // bands per world unit
  double stripe_amplitude = 0.0;
};

/// Axis-aligned box with an optional 3D checker between two albedos.
struct Box {
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  Eigen::Vector3d half_extent = Eigen::Vector3d::Constant(0.25);
  Eigen::Vector3d albedo = Eigen::Vector3d::Constant(0.8);
  Eigen::Vector3d albedo_alt = Eigen::Vector3d::Constant(0.4);
  double checker_period = 0.0;  // 0 disables the checker
};

/// Finite square platform in the plane y = height, checkered.
struct Ground {
  bool enabled = true;
  double height = 0.0;
  double half_size = 1.6;
  Eigen::Vector3d color_a{0.82, 0.80, 0.74};
  Eigen::Vector3d color_b{0.36, 0.36, 0.42};
  double checker_period = 0.2;
};

struct Light {
  Eigen::Vector3d direction{-0.4, 1.0, 0.3};  // towards the light
  double ambient = 0.25;
  bool shadows = true;
};

/// Cameras on an arc of a horizontal circle, looking at `target`.
struct CameraRing {
  Eigen::Vector3d target{0.0, 0.3, 0.0};
  double radius = 4.0;
  double elevation_deg = 30.0;
  double azimuth_center_deg = 0.0;
  double arc_deg = 120.0;  // >= 360 places views on a full ring
  double jitter_deg = 1.5;
  double focal_lr = 36.0;
  int lr_width = 32;
  int lr_height = 32;
  double near = 1.5;
  double far = 6.5;
};

struct SceneSpec {
  std::vector<Sphere> spheres;
  std::vector<Box> boxes;
  Ground ground;
  Light light;
  CameraRing ring;
  int scale = 4;
  int supersample = 2;  // per axis, at HR resolution

  /// Throws ConfigError on an empty scene or degenerate camera ring.
  void validate() const;

  static SceneSpec one_sphere();
  static SceneSpec two_spheres();
  /// Reference toy scene: two textured spheres and a checkered box on a platform.
  static SceneSpec reference();
};

struct Hit {
  double t = 0.0;
  Eigen::Vector3d point;
  Eigen::Vector3d normal;
  Eigen::Vector3d albedo;
};

/// Closest intersection of the ray with the scene, if any.
std::optional<Hit> trace(const SceneSpec& spec, const Eigen::Vector3d& origin, const Eigen::Vector3d& dir);

/// Lambertian shading with ambient term and optional hard shadows.
Eigen::Vector3d shade(const SceneSpec& spec, const Hit& hit);

/// Color of a single ray (black background).
Eigen::Vector3d trace_color(const SceneSpec& spec, const Eigen::Vector3d& origin, const Eigen::Vector3d& dir);

/// Ground-truth image at the given resolution, with spec.supersample^2 samples per pixel.
ImageBuffer render_ground_truth(const SceneSpec& spec, const CameraPose& pose, int height, int width);

/// HR pose on the ring at the given azimuth/elevation (degrees). Values are
/// rounded to single precision so text round-trips are exact.
CameraPose ring_pose(const SceneSpec& spec, double azimuth_deg, double elevation_deg);

/// Azimuth (degrees) of the k-th of n views on the ring, before jitter.
double ring_azimuth(const CameraRing& ring, int k, int n);

/// HR ground-truth views at (s*H, s*W) on the camera ring. Deterministic in
/// (spec, n_views, seed); the seed drives small pose jitter.
MultiViewDataset generate_synthetic_scene(const SceneSpec& spec, int n_views, std::uint64_t seed);

/// Ground-truth HR views at explicit poses (e.g. held-out views).
MultiViewDataset render_views(const SceneSpec& spec, const std::vector<CameraPose>& poses, int first_index = 0);

/// Held-out poses halfway between consecutive training azimuths.
std::vector<CameraPose> held_out_poses(const SceneSpec& spec, int n_train_views, int n_held_out);

}  // namespace supernerf::scene
