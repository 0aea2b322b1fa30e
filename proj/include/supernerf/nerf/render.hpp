#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <span>
#include <vector>

#include "supernerf/core/image.hpp"
#include "supernerf/nerf/field.hpp"
#include "supernerf/scene/camera.hpp"

namespace supernerf::nerf {

/// Stratified sampling between near and far. With `jitter` off every sample
/// sits at its bin midpoint. Jitter is keyed by (seed, view, pixel) so a ray
/// gets the same samples no matter which batch it is rendered in.
struct SamplingOptions {
  bool jitter = true;
  std::uint64_t seed = 0;
};

/// Result of alpha compositing along one ray.
struct CompositeResult {
  Eigen::Vector3d color = Eigen::Vector3d::Zero();
  double total_weight = 0.0;
  double depth = 0.0;
  std::vector<double> weights;
  std::vector<double> transmittance;  // T_k before sample k
};

/// Quadrature on one ray: w_k = T_k (1 - exp(-sigma_k delta_k)),
/// T_k = exp(-sum_{j<k} sigma_j delta_j), color = sum w_k c_k (black
/// background), depth = sum w_k t_k / max(sum w_k, eps).
CompositeResult composite(std::span<const double> sigma, std::span<const Eigen::Vector3d> colors,
                          std::span<const double> deltas, std::span<const double> t);

/// Per-ray outputs of render_rays.
struct RenderResult {
  Eigen::MatrixX3d colors;
  Eigen::VectorXd depth;
  Eigen::VectorXd total_weight;
};

/// Sample distances t_k and intervals delta_k for one ray.
void ray_samples(double near, double far, int n_samples, const SamplingOptions& opts, int view_index, double u,
                 double v, double* t, double* delta);

template <typename Scalar>
class BasicRenderTape;

/// Renders a ray batch. Throws ConfigError when near >= far and
/// NumericalError for non-finite field parameters.
template <typename Scalar>
RenderResult render_rays(const BasicRadianceField<Scalar>& field, const scene::RayBatch& rays,
                         const SamplingOptions& opts = {});

/// Forward pass that keeps everything needed for render_backward.
template <typename Scalar>
class BasicRenderTape {
 public:
  RenderResult result;

 private:
  template <typename S>
  friend BasicRenderTape<S> render_forward(const BasicRadianceField<S>&, const scene::RayBatch&,
                                           const SamplingOptions&);
  template <typename S>
  friend void render_backward(const BasicRadianceField<S>&, const BasicRenderTape<S>&, const Eigen::MatrixX3d&,
                              std::span<S>);

  struct Chunk {
    Eigen::Index first_ray = 0;
    Eigen::Index n_rays = 0;
    typename BasicRadianceField<Scalar>::Tape tape;
    typename BasicRadianceField<Scalar>::RowArray density;
    Eigen::MatrixXd deltas;  // samples x rays
  };
  std::vector<Chunk> chunks_;
  int n_samples_ = 0;
};

template <typename Scalar>
BasicRenderTape<Scalar> render_forward(const BasicRadianceField<Scalar>& field, const scene::RayBatch& rays,
                                       const SamplingOptions& opts = {});

/// Accumulates d(loss)/d(params) given d(loss)/d(color) per ray (N x 3).
template <typename Scalar>
void render_backward(const BasicRadianceField<Scalar>& field, const BasicRenderTape<Scalar>& tape,
                     const Eigen::MatrixX3d& d_colors, std::span<Scalar> grad);

using RenderTape = BasicRenderTape<float>;

/// Full-image render with per-pixel depth expectation and accumulated weight.
struct RenderedView {
  ImageBuffer image;
  std::vector<float> depth;
  std::vector<float> weight;
};

RenderedView render_view(const RadianceField& field, const scene::CameraPose& pose, int target_h, int target_w,
                         const SamplingOptions& opts = {false, 0}, int view_index = -1);

/// render_rays over generate_rays(pose, target_h, target_w).
ImageBuffer render_image(const RadianceField& field, const scene::CameraPose& pose, int target_h, int target_w,
                         const SamplingOptions& opts = {false, 0}, int view_index = -1);

}  // namespace supernerf::nerf
