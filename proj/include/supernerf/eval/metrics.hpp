#pragma once

#include <Eigen/Core>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "supernerf/core/image.hpp"
#include "supernerf/nerf/field.hpp"
#include "supernerf/scene/camera.hpp"

namespace supernerf::eval {

/// PSNR with peak 1.0. Zero MSE is reported as `identical` rather than +inf.
struct PsnrValue {
  double db = 0.0;
  bool identical = false;

  [[nodiscard]] std::string str() const;
  friend bool operator==(const PsnrValue&, const PsnrValue&) = default;
};

PsnrValue psnr(const ImageBuffer& a, const ImageBuffer& b);

/// Mean PSNR over a list, skipping `identical` entries; nullopt if none remain.
std::optional<double> mean_db(std::span<const PsnrValue> values);

/// max |box_downsample(hr, s) - lr|.
double lr_consistency_residual(const ImageBuffer& hr, const ImageBuffer& lr, int s);

/// Expected ray depth (distance along the unit ray) and accumulated weight for
/// every pixel of a view.
struct DepthView {
  scene::CameraPose pose;
  int height = 0;
  int width = 0;
  std::vector<float> depth;
  std::vector<float> weight;
};

DepthView render_depth(const nerf::RadianceField& field, const scene::CameraPose& pose, int height, int width);

/// Per-pixel map from view i into view j. Coordinates are continuous pixel
/// positions with centers at half-integers.
struct WarpField {
  int source_view = -1;
  int target_view = -1;
  int height = 0;
  int width = 0;
  std::vector<Eigen::Vector2d> mapping;
  std::vector<std::uint8_t> valid;

  [[nodiscard]] double valid_fraction() const;
  /// Mean |mapping - source pixel| over valid pixels; 0 for an empty mask.
  [[nodiscard]] double mean_displacement() const;
};

struct WarpOptions {
  double min_weight = 0.1;
  double depth_tolerance = 0.05;  // relative
};

/// Warp from depth maps of both views. Pixels are masked when the source
/// weight is below min_weight, the point lands outside view j or behind it,
/// the target weight there is below min_weight, or the distance to camera j
/// differs from view j's depth by more than depth_tolerance (relative).
/// A pose pair with equal centers and axes yields the identity with every
/// pixel valid.
WarpField build_warp(const DepthView& i, const DepthView& j, int source_view = -1, int target_view = -1,
                     const WarpOptions& opts = {});

WarpField build_warp(const nerf::RadianceField& field, const scene::CameraPose& pose_i,
                     const scene::CameraPose& pose_j, int target_h, int target_w, const WarpOptions& opts = {});

/// Identity warp on an h x w grid.
WarpField identity_warp(int height, int width);

/// Pixel-aligned distance between two lists of RGB samples (same length, > 0).
using DistanceMetric =
    std::function<double(std::span<const Eigen::Vector3f> a, std::span<const Eigen::Vector3f> b)>;

/// Mean absolute difference over samples and channels.
double masked_mae(std::span<const Eigen::Vector3f> a, std::span<const Eigen::Vector3f> b);

/// Bilinear sample of an image at a continuous pixel position, clamped to the border.
Eigen::Vector3f sample_bilinear(const ImageBuffer& img, double u, double v);

/// Distance between img_i and img_j resampled through the warp, over valid
/// pixels. nullopt is the no-overlap sentinel.
std::optional<double> warped_consistency(const ImageBuffer& img_i, const ImageBuffer& img_j, const WarpField& warp,
                                         const DistanceMetric& metric = masked_mae);

/// Disparity buckets by mean warp displacement: [0, 6.5) "3 pix",
/// [6.5, 12.5) "10 pix", [12.5, inf) "15 pix".
inline constexpr double kBucketEdges[2] = {6.5, 12.5};
inline constexpr const char* kBucketNames[3] = {"3 pix", "10 pix", "15 pix"};
const char* disparity_bucket(double mean_displacement);

}  // namespace supernerf::eval
