#include "supernerf/nerf/render.hpp"

#include <algorithm>
#include <cmath>

#include "supernerf/core/error.hpp"
#include "supernerf/core/random.hpp"

namespace supernerf::nerf {
namespace {

constexpr Eigen::Index kChunkPoints = 16384;

void check_rays(const scene::RayBatch& rays) {
  if (!(rays.near < rays.far)) throw ConfigError("render_rays requires near < far");
  if (rays.directions.rows() != rays.origins.rows()) throw ShapeError("ray batch origins/directions mismatch");
}

// Builds sample points for rays [first, first + n).
void build_points(const scene::RayBatch& rays, Eigen::Index first, Eigen::Index n, int s,
                  const SamplingOptions& opts, Eigen::MatrixX3d& pts, Eigen::MatrixX3d& dirs, Eigen::MatrixXd& ts,
                  Eigen::MatrixXd& deltas) {
  pts.resize(n * s, 3);
  dirs.resize(n * s, 3);
  ts.resize(s, n);
  deltas.resize(s, n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const Eigen::Index ray = first + r;
    const double u = rays.pixel_coords.rows() ? rays.pixel_coords(ray, 0) : static_cast<double>(ray);
    const double v = rays.pixel_coords.rows() ? rays.pixel_coords(ray, 1) : 0.0;
    ray_samples(rays.near, rays.far, s, opts, rays.view_index, u, v, ts.col(r).data(), deltas.col(r).data());
    const Eigen::RowVector3d o = rays.origins.row(ray);
    const Eigen::RowVector3d d = rays.directions.row(ray);
    for (int k = 0; k < s; ++k) {
      pts.row(r * s + k) = o + ts(k, r) * d;
      dirs.row(r * s + k) = d;
    }
  }
}

}  // namespace

void ray_samples(double near, double far, int n_samples, const SamplingOptions& opts, int view_index, double u,
                 double v, double* t, double* delta) {
  const double bin = (far - near) / n_samples;
  std::uint64_t state = 0;
  if (opts.jitter) {
    const auto ku = static_cast<std::uint64_t>(static_cast<std::int64_t>(std::floor(u * 8.0)));
    const auto kv = static_cast<std::uint64_t>(static_cast<std::int64_t>(std::floor(v * 8.0)));
    state = splitmix64(splitmix64(splitmix64(opts.seed) ^ static_cast<std::uint64_t>(view_index + 1)) ^
                       (ku << 32) ^ kv);
  }
  for (int k = 0; k < n_samples; ++k) {
    double j = 0.5;
    if (opts.jitter) {
      state = splitmix64(state);
      j = static_cast<double>(state >> 11) * 0x1.0p-53;
    }
    t[k] = near + (k + j) * bin;
  }
  for (int k = 0; k + 1 < n_samples; ++k) delta[k] = t[k + 1] - t[k];
  delta[n_samples - 1] = far - t[n_samples - 1];
}

CompositeResult composite(std::span<const double> sigma, std::span<const Eigen::Vector3d> colors,
                          std::span<const double> deltas, std::span<const double> t) {
  const std::size_t n = sigma.size();
  if (colors.size() != n || deltas.size() != n || t.size() != n) throw ShapeError("composite: length mismatch");
  CompositeResult out;
  out.weights.resize(n);
  out.transmittance.resize(n);
  double optical = 0.0;
  double depth_acc = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double tk = std::exp(-optical);
    const double sd = sigma[k] * deltas[k];
    const double w = tk * -std::expm1(-sd);
    out.transmittance[k] = tk;
    out.weights[k] = w;
    out.color += w * colors[k];
    out.total_weight += w;
    depth_acc += w * t[k];
    optical += sd;
  }
  out.depth = depth_acc / std::max(out.total_weight, 1e-10);
  return out;
}

template <typename Scalar>
BasicRenderTape<Scalar> render_forward(const BasicRadianceField<Scalar>& field, const scene::RayBatch& rays,
                                       const SamplingOptions& opts) {
  check_rays(rays);
  field.check_finite();
  const int s = field.config().n_samples_per_ray;
  const Eigen::Index n = rays.size();
  const Eigen::Index per_chunk = std::max<Eigen::Index>(1, kChunkPoints / s);
  BasicRenderTape<Scalar> tape;
  tape.n_samples_ = s;
  tape.result.colors.setZero(n, 3);
  tape.result.depth.setZero(n);
  tape.result.total_weight.setZero(n);
  Eigen::MatrixX3d pts, dirs;
  Eigen::MatrixXd ts;
  for (Eigen::Index first = 0; first < n; first += per_chunk) {
    const Eigen::Index m = std::min(per_chunk, n - first);
    auto& chunk = tape.chunks_.emplace_back();
    chunk.first_ray = first;
    chunk.n_rays = m;
    typename BasicRadianceField<Scalar>::Matrix color;
    build_points(rays, first, m, s, opts, pts, dirs, ts, chunk.deltas);
    field.forward(pts, dirs, chunk.density, color, &chunk.tape);
    for (Eigen::Index r = 0; r < m; ++r) {
      double optical = 0.0, depth = 0.0, total = 0.0;
      Eigen::Vector3d c = Eigen::Vector3d::Zero();
      for (int k = 0; k < s; ++k) {
        const Eigen::Index p = r * s + k;
        const double sd = static_cast<double>(chunk.density(p)) * chunk.deltas(k, r);
        const double w = std::exp(-optical) * -std::expm1(-sd);
        c += w * color.col(p).template cast<double>();
        total += w;
        depth += w * ts(k, r);
        optical += sd;
      }
      tape.result.colors.row(first + r) = c.transpose();
      tape.result.total_weight(first + r) = total;
      tape.result.depth(first + r) = depth / std::max(total, 1e-10);
    }
  }
  return tape;
}

template <typename Scalar>
void render_backward(const BasicRadianceField<Scalar>& field, const BasicRenderTape<Scalar>& tape,
                     const Eigen::MatrixX3d& d_colors, std::span<Scalar> grad) {
  const int s = tape.n_samples_;
  using RowArray = typename BasicRadianceField<Scalar>::RowArray;
  using Matrix = typename BasicRadianceField<Scalar>::Matrix;
  for (const auto& chunk : tape.chunks_) {
    const Eigen::Index m = chunk.n_rays;
    RowArray d_density(m * s);
    Matrix d_color(3, m * s);
    std::vector<double> w(s), trans_after(s), gc(s);
    for (Eigen::Index r = 0; r < m; ++r) {
      const Eigen::Vector3d g = d_colors.row(chunk.first_ray + r).transpose();
      double optical = 0.0;
      for (int k = 0; k < s; ++k) {
        const Eigen::Index p = r * s + k;
        const double sd = static_cast<double>(chunk.density(p)) * chunk.deltas(k, r);
        const double tk = std::exp(-optical);
        w[k] = tk * -std::expm1(-sd);
        optical += sd;
        trans_after[k] = std::exp(-optical);
        gc[k] = g.dot(chunk.tape.color.col(p).template cast<double>());
        d_color.col(p) = (w[k] * g).template cast<Scalar>();
      }
      // dC/dsigma_k = delta_k (T_{k+1} c_k - sum_{j>k} w_j c_j)
      double suffix = 0.0;
      for (int k = s - 1; k >= 0; --k) {
        const Eigen::Index p = r * s + k;
        d_density(p) = static_cast<Scalar>(chunk.deltas(k, r) * (trans_after[k] * gc[k] - suffix));
        suffix += w[k] * gc[k];
      }
    }
    field.backward(chunk.tape, d_density, d_color, grad);
  }
}

template <typename Scalar>
RenderResult render_rays(const BasicRadianceField<Scalar>& field, const scene::RayBatch& rays,
                         const SamplingOptions& opts) {
  check_rays(rays);
  field.check_finite();
  const int s = field.config().n_samples_per_ray;
  const Eigen::Index n = rays.size();
  const Eigen::Index per_chunk = std::max<Eigen::Index>(1, kChunkPoints / s);
  RenderResult out;
  out.colors.setZero(n, 3);
  out.depth.setZero(n);
  out.total_weight.setZero(n);
  Eigen::MatrixX3d pts, dirs;
  Eigen::MatrixXd ts, deltas;
  typename BasicRadianceField<Scalar>::RowArray density;
  typename BasicRadianceField<Scalar>::Matrix color;
  for (Eigen::Index first = 0; first < n; first += per_chunk) {
    const Eigen::Index m = std::min(per_chunk, n - first);
    build_points(rays, first, m, s, opts, pts, dirs, ts, deltas);
    field.forward(pts, dirs, density, color, nullptr);
    for (Eigen::Index r = 0; r < m; ++r) {
      double optical = 0.0, depth = 0.0, total = 0.0;
      Eigen::Vector3d c = Eigen::Vector3d::Zero();
      for (int k = 0; k < s; ++k) {
        const Eigen::Index p = r * s + k;
        const double sd = static_cast<double>(density(p)) * deltas(k, r);
        const double w = std::exp(-optical) * -std::expm1(-sd);
        c += w * color.col(p).template cast<double>();
        total += w;
        depth += w * ts(k, r);
        optical += sd;
      }
      out.colors.row(first + r) = c.transpose();
      out.total_weight(first + r) = total;
      out.depth(first + r) = depth / std::max(total, 1e-10);
    }
  }
  return out;
}

template RenderResult render_rays(const BasicRadianceField<float>&, const scene::RayBatch&, const SamplingOptions&);
template RenderResult render_rays(const BasicRadianceField<double>&, const scene::RayBatch&, const SamplingOptions&);
template BasicRenderTape<float> render_forward(const BasicRadianceField<float>&, const scene::RayBatch&,
                                               const SamplingOptions&);
template BasicRenderTape<double> render_forward(const BasicRadianceField<double>&, const scene::RayBatch&,
                                                const SamplingOptions&);
template void render_backward(const BasicRadianceField<float>&, const BasicRenderTape<float>&,
                              const Eigen::MatrixX3d&, std::span<float>);
template void render_backward(const BasicRadianceField<double>&, const BasicRenderTape<double>&,
                              const Eigen::MatrixX3d&, std::span<double>);

RenderedView render_view(const RadianceField& field, const scene::CameraPose& pose, int target_h, int target_w,
                         const SamplingOptions& opts, int view_index) {
  const auto rays = scene::generate_rays(pose, target_h, target_w, view_index);
  const auto res = render_rays(field, rays, opts);
  RenderedView out;
  out.image = ImageBuffer(target_h, target_w);
  out.depth.resize(static_cast<std::size_t>(target_h) * target_w);
  out.weight.resize(out.depth.size());
  for (Eigen::Index i = 0; i < rays.size(); ++i) {
    for (int c = 0; c < 3; ++c) out.image.pixels[i * 3 + c] = static_cast<float>(res.colors(i, c));
    out.depth[i] = static_cast<float>(res.depth(i));
    out.weight[i] = static_cast<float>(res.total_weight(i));
  }
  return out;
}

ImageBuffer render_image(const RadianceField& field, const scene::CameraPose& pose, int target_h, int target_w,
                         const SamplingOptions& opts, int view_index) {
  return render_view(field, pose, target_h, target_w, opts, view_index).image;
}

}  // namespace supernerf::nerf
