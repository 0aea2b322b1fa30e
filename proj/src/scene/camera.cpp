#include "supernerf/scene/camera.hpp"

#include <Eigen/Geometry>
#include <string>

#include "supernerf/core/error.hpp"

namespace supernerf::scene {

void CameraPose::validate() const {
  const double ortho = (rotation.transpose() * rotation - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  if (!(ortho <= 1e-6)) throw ConfigError("camera rotation is not orthonormal (error " + std::to_string(ortho) + ")");
  if (!(near > 0.0 && near < far)) throw ConfigError("camera requires 0 < near < far");
  if (width < 8 || height < 8) throw ConfigError("camera image must be at least 8x8");
  if (!(focal > 0.0)) throw ConfigError("camera focal must be positive");
  if (!position.allFinite()) throw ConfigError("camera position is not finite");
}

CameraPose look_at(const Eigen::Vector3d& eye, const Eigen::Vector3d& target, const Eigen::Vector3d& up,
                   double focal, int width, int height, double near, double far) {
  const Eigen::Vector3d back = (eye - target).normalized();
  const Eigen::Vector3d right = up.cross(back).normalized();
  const Eigen::Vector3d true_up = back.cross(right);
  CameraPose pose;
  pose.position = eye;
  pose.rotation.row(0) = right.transpose();
  pose.rotation.row(1) = true_up.transpose();
  pose.rotation.row(2) = back.transpose();
  pose.focal = focal;
  pose.width = width;
  pose.height = height;
  pose.near = near;
  pose.far = far;
  return pose;
}

Eigen::Vector3d pixel_direction(const CameraPose& pose, int target_h, int target_w, double u, double v) {
  const double f = pose.focal_at(target_w);
  const Eigen::Vector3d cam((u - 0.5 * target_w) / f, -(v - 0.5 * target_h) / f, -1.0);
  return (pose.rotation.transpose() * cam).normalized();
}

RayBatch generate_rays_for_pixels(const CameraPose& pose, int target_h, int target_w,
                                  std::span<const int> pixel_indices, int view_index) {
  if (target_h < 1 || target_w < 1) throw ConfigError("ray grid must be at least 1x1");
  RayBatch batch;
  const auto n = static_cast<Eigen::Index>(pixel_indices.size());
  batch.origins.resize(n, 3);
  batch.directions.resize(n, 3);
  batch.pixel_coords.resize(n, 2);
  batch.near = pose.near;
  batch.far = pose.far;
  batch.view_index = view_index;
  for (Eigen::Index i = 0; i < n; ++i) {
    const int p = pixel_indices[i];
    if (p < 0 || p >= target_h * target_w) throw ShapeError("pixel index out of range");
    const double u = (p % target_w) + 0.5;
    const double v = (p / target_w) + 0.5;
    batch.origins.row(i) = pose.position.transpose();
    batch.directions.row(i) = pixel_direction(pose, target_h, target_w, u, v).transpose();
    batch.pixel_coords(i, 0) = u;
    batch.pixel_coords(i, 1) = v;
  }
  return batch;
}

RayBatch generate_rays(const CameraPose& pose, int target_h, int target_w, int view_index) {
  if (target_h < 1 || target_w < 1) throw ConfigError("ray grid must be at least 1x1");
  std::vector<int> all(static_cast<std::size_t>(target_h) * target_w);
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
  return generate_rays_for_pixels(pose, target_h, target_w, all, view_index);
}

}  // namespace supernerf::scene
