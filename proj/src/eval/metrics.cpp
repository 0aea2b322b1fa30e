#include "supernerf/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "supernerf/core/error.hpp"
#include "supernerf/nerf/render.hpp"

namespace supernerf::eval {

std::string PsnrValue::str() const {
  if (identical) return "identical";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", db);
  return buf;
}

PsnrValue psnr(const ImageBuffer& a, const ImageBuffer& b) {
  require_same_shape(a, b, "psnr");
  double se = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = static_cast<double>(a.pixels[k]) - b.pixels[k];
    se += d * d;
  }
  if (se == 0.0) return {0.0, true};
  const double mse = se / static_cast<double>(a.size());
  return {10.0 * std::log10(1.0 / mse), false};
}

std::optional<double> mean_db(std::span<const PsnrValue> values) {
  double sum = 0.0;
  int n = 0;
  for (const auto& v : values) {
    if (v.identical) continue;
    sum += v.db;
    ++n;
  }
  if (n == 0) return std::nullopt;
  return sum / n;
}

double lr_consistency_residual(const ImageBuffer& hr, const ImageBuffer& lr, int s) {
  const auto down = box_downsample(hr, s);
  require_same_shape(down, lr, "lr_consistency_residual");
  double m = 0.0;
  for (std::size_t k = 0; k < lr.size(); ++k) m = std::max(m, std::abs(static_cast<double>(down.pixels[k]) - lr.pixels[k]));
  return m;
}

DepthView render_depth(const nerf::RadianceField& field, const scene::CameraPose& pose, int height, int width) {
  auto rv = nerf::render_view(field, pose, height, width);
  return {pose, height, width, std::move(rv.depth), std::move(rv.weight)};
}

double WarpField::valid_fraction() const {
  if (valid.empty()) return 0.0;
  return static_cast<double>(std::count(valid.begin(), valid.end(), 1)) / static_cast<double>(valid.size());
}

double WarpField::mean_displacement() const {
  double sum = 0.0;
  std::size_t n = 0;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const std::size_t p = static_cast<std::size_t>(y) * width + x;
      if (!valid[p]) continue;
      sum += (mapping[p] - Eigen::Vector2d(x + 0.5, y + 0.5)).norm();
      ++n;
    }
  }
  return n ? sum / static_cast<double>(n) : 0.0;
}

WarpField identity_warp(int height, int width) {
  WarpField w;
  w.height = height;
  w.width = width;
  w.mapping.resize(static_cast<std::size_t>(height) * width);
  w.valid.assign(w.mapping.size(), 1);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) w.mapping[static_cast<std::size_t>(y) * width + x] = {x + 0.5, y + 0.5};
  return w;
}

WarpField build_warp(const DepthView& vi, const DepthView& vj, int source_view, int target_view,
                     const WarpOptions& opts) {
  const std::size_t n_i = static_cast<std::size_t>(vi.height) * vi.width;
  const std::size_t n_j = static_cast<std::size_t>(vj.height) * vj.width;
  if (vi.depth.size() != n_i || vi.weight.size() != n_i || vj.depth.size() != n_j || vj.weight.size() != n_j) {
    throw ShapeError("build_warp: depth maps do not match their image sizes");
  }
  const auto& pi = vi.pose;
  const auto& pj = vj.pose;
  const bool same_camera = pi.position == pj.position && pi.rotation == pj.rotation &&
                           pi.focal_at(vi.width) == pj.focal_at(vj.width) && vi.height == vj.height &&
                           vi.width == vj.width;
  if (same_camera) {
    auto w = identity_warp(vi.height, vi.width);
    w.source_view = source_view;
    w.target_view = target_view;
    return w;
  }

  WarpField w;
  w.source_view = source_view;
  w.target_view = target_view;
  w.height = vi.height;
  w.width = vi.width;
  w.mapping.assign(n_i, Eigen::Vector2d::Zero());
  w.valid.assign(n_i, 0);
  const double fj = pj.focal_at(vj.width);
  for (int y = 0; y < vi.height; ++y) {
    for (int x = 0; x < vi.width; ++x) {
      const std::size_t p = static_cast<std::size_t>(y) * vi.width + x;
      if (vi.weight[p] < opts.min_weight) continue;
      const Eigen::Vector3d dir = scene::pixel_direction(pi, vi.height, vi.width, x + 0.5, y + 0.5);
      const Eigen::Vector3d point = pi.position + static_cast<double>(vi.depth[p]) * dir;
      const Eigen::Vector3d cam = pj.to_camera(point);
      if (cam.z() >= 0.0) continue;
      const double u = 0.5 * vj.width + fj * cam.x() / -cam.z();
      const double v = 0.5 * vj.height - fj * cam.y() / -cam.z();
      w.mapping[p] = {u, v};
      if (u < 0.0 || v < 0.0 || u >= vj.width || v >= vj.height) continue;
      const std::size_t q = static_cast<std::size_t>(v) * vj.width + static_cast<std::size_t>(u);
      if (vj.weight[q] < opts.min_weight) continue;
      const double dj = vj.depth[q];
      if (!(dj > 0.0) || std::abs(cam.norm() - dj) / dj > opts.depth_tolerance) continue;
      w.valid[p] = 1;
    }
  }
  return w;
}

WarpField build_warp(const nerf::RadianceField& field, const scene::CameraPose& pose_i,
                     const scene::CameraPose& pose_j, int target_h, int target_w, const WarpOptions& opts) {
  return build_warp(render_depth(field, pose_i, target_h, target_w), render_depth(field, pose_j, target_h, target_w),
                    -1, -1, opts);
}

double masked_mae(std::span<const Eigen::Vector3f> a, std::span<const Eigen::Vector3f> b) {
  if (a.size() != b.size() || a.empty()) throw ShapeError("masked_mae needs equal, nonempty sample lists");
  double sum = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) sum += (a[k] - b[k]).cast<double>().cwiseAbs().sum();
  return sum / (3.0 * static_cast<double>(a.size()));
}

Eigen::Vector3f sample_bilinear(const ImageBuffer& img, double u, double v) {
  const double x = std::clamp(u - 0.5, 0.0, img.width - 1.0);
  const double y = std::clamp(v - 0.5, 0.0, img.height - 1.0);
  const int x0 = static_cast<int>(x);
  const int y0 = static_cast<int>(y);
  const int x1 = std::min(x0 + 1, img.width - 1);
  const int y1 = std::min(y0 + 1, img.height - 1);
  const float fx = static_cast<float>(x - x0);
  const float fy = static_cast<float>(y - y0);
  Eigen::Vector3f out;
  for (int c = 0; c < 3; ++c) {
    const float top = img.at(y0, x0, c) * (1.0f - fx) + img.at(y0, x1, c) * fx;
    const float bottom = img.at(y1, x0, c) * (1.0f - fx) + img.at(y1, x1, c) * fx;
    out[c] = top * (1.0f - fy) + bottom * fy;
  }
  return out;
}

std::optional<double> warped_consistency(const ImageBuffer& img_i, const ImageBuffer& img_j, const WarpField& warp,
                                         const DistanceMetric& metric) {
  img_i.check_shape();
  img_j.check_shape();
  if (img_i.height != warp.height || img_i.width != warp.width) throw ShapeError("warped_consistency: warp size differs from img_i");
  std::vector<Eigen::Vector3f> a, b;
  for (int y = 0; y < warp.height; ++y) {
    for (int x = 0; x < warp.width; ++x) {
      const std::size_t p = static_cast<std::size_t>(y) * warp.width + x;
      if (!warp.valid[p]) continue;
      a.emplace_back(img_i.at(y, x, 0), img_i.at(y, x, 1), img_i.at(y, x, 2));
      b.push_back(sample_bilinear(img_j, warp.mapping[p].x(), warp.mapping[p].y()));
    }
  }
  if (a.empty()) return std::nullopt;
  const double d = metric(a, b);
  if (!std::isfinite(d)) throw NumericalError("warped_consistency metric returned a non-finite value");
  return d;
}

const char* disparity_bucket(double mean_displacement) {
  if (mean_displacement < kBucketEdges[0]) return kBucketNames[0];
  if (mean_displacement < kBucketEdges[1]) return kBucketNames[1];
  return kBucketNames[2];
}

}  // namespace supernerf::eval
