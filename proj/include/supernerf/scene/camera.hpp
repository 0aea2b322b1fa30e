#pragma once

#include <Eigen/Core>
#include <span>

namespace supernerf::scene {

/// Pinhole camera. `rotation` maps world to camera coordinates; the camera
/// looks down its local -z axis with +y up and +x right. Pixel (u, v) has u to
/// the right and v downwards; pixel centers sit at half-integer coordinates.
struct CameraPose {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  double focal = 1.0;  // pixels, at (width, height)
  int width = 8;
  int height = 8;
  double near = 0.1;
  double far = 10.0;

  /// Throws ConfigError when an invariant does not hold.
  void validate() const;

  /// Focal length after rescaling the image plane to `target_width` pixels.
  [[nodiscard]] double focal_at(int target_width) const { return focal * target_width / width; }

  /// Camera-space coordinates of a world point.
  [[nodiscard]] Eigen::Vector3d to_camera(const Eigen::Vector3d& world) const {
    return rotation * (world - position);
  }

  friend bool operator==(const CameraPose&, const CameraPose&) = default;
};

CameraPose look_at(const Eigen::Vector3d& eye, const Eigen::Vector3d& target, const Eigen::Vector3d& up,
                   double focal, int width, int height, double near, double far);

/// Rays through pixel centers. Directions have unit norm.
struct RayBatch {
  Eigen::MatrixX3d origins;
  Eigen::MatrixX3d directions;
  Eigen::MatrixX2d pixel_coords;
  double near = 0.0;
  double far = 1.0;
  int view_index = -1;

  [[nodiscard]] Eigen::Index size() const { return origins.rows(); }
};

/// Unit direction (world) through the sub-pixel location (u, v) of a
/// target_h x target_w grid covering the same field of view as `pose`.
Eigen::Vector3d pixel_direction(const CameraPose& pose, int target_h, int target_w, double u, double v);

/// One ray per pixel center of a target_h x target_w grid, row-major.
RayBatch generate_rays(const CameraPose& pose, int target_h, int target_w, int view_index = -1);

/// Rays for the given flat pixel indices (y * target_w + x) of the target grid.
RayBatch generate_rays_for_pixels(const CameraPose& pose, int target_h, int target_w,
                                  std::span<const int> pixel_indices, int view_index = -1);

}  // namespace supernerf::scene
