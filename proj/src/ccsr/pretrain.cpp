#include "supernerf/ccsr/pretrain.hpp"

#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <random>

#include "supernerf/ccsr/cem.hpp"
#include "supernerf/core/adam.hpp"
#include "supernerf/core/error.hpp"
#include "supernerf/core/random.hpp"

namespace supernerf::ccsr {
namespace {

using Rng = std::mt19937_64;

double uni(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

Eigen::Vector3d random_color(Rng& rng) { return {uni(rng, 0.15, 0.95), uni(rng, 0.15, 0.95), uni(rng, 0.15, 0.95)}; }

// A shape returns coverage plus color at a continuous pixel position.
struct Shape {
  int kind = 0;
  Eigen::Vector2d center;
  double radius = 0.0;
  Eigen::Vector2d half;
  double angle = 0.0;
  double period = 0.0;
  double amplitude = 0.0;
  Eigen::Vector3d color_a, color_b;
  Eigen::Vector2d light;

  [[nodiscard]] std::optional<Eigen::Vector3d> sample(const Eigen::Vector2d& p) const {
    const Eigen::Vector2d d = p - center;
    const double ca = std::cos(angle), sa = std::sin(angle);
    const Eigen::Vector2d r(ca * d.x() + sa * d.y(), -sa * d.x() + ca * d.y());
    switch (kind) {
      case 0: {  // shaded sphere with stripes
        const double q = d.squaredNorm() / (radius * radius);
        if (q > 1.0) return std::nullopt;
        const double nz = std::sqrt(1.0 - q);
        const Eigen::Vector3d n(d.x() / radius, d.y() / radius, nz);
        const double lambert = std::max(0.0, n.dot(Eigen::Vector3d(light.x(), light.y(), 0.8).normalized()));
        Eigen::Vector3d c = color_a;
        if (period > 0.0 && std::sin(2.0 * std::numbers::pi * (r.x() + r.y()) / period) < 0.0) c *= 1.0 - amplitude;
        return c * (0.25 + 0.75 * lambert);
      }
      case 1: {  // checkered box
        if (std::abs(r.x()) > half.x() || std::abs(r.y()) > half.y()) return std::nullopt;
        const auto cell = [&](double v) { return static_cast<long long>(std::floor(v / period)); };
        const bool alt = ((cell(r.x() + half.x()) + cell(r.y() + half.y())) & 1LL) != 0;
        return alt ? color_b : color_a;
      }
      case 2: {  // stripe band
        if (std::abs(r.y()) > half.y()) return std::nullopt;
        return std::sin(2.0 * std::numbers::pi * r.x() / period) < 0.0 ? color_b : color_a;
      }
      default: {  // perspective-ish checker ground covering the lower part
        if (p.y() < center.y()) return std::nullopt;
        const double depth = 1.0 + (p.y() - center.y()) / radius;
        const double u = (p.x() - center.x()) * depth / period;
        const double v = std::log(depth) * radius / period;
        const bool alt = ((static_cast<long long>(std::floor(u)) + static_cast<long long>(std::floor(v))) & 1LL) != 0;
        return alt ? color_b : color_a;
      }
    }
  }
};

ImageBuffer make_texture(int size, Rng& rng) {
  std::vector<Shape> shapes;
  const bool ground = uniform01(rng) < 0.35;
  if (ground) {
    Shape g;
    g.kind = 3;
    g.center = Eigen::Vector2d(uni(rng, 0, size), uni(rng, 0.3, 0.7) * size);
    g.radius = uni(rng, 0.2, 0.6) * size;
    g.period = uni(rng, 2.5, 8.0);
    g.color_a = random_color(rng);
    g.color_b = random_color(rng) * 0.5;
    shapes.push_back(g);
  }
  const int n = 1 + static_cast<int>(uniform01(rng) * 3.0);
  for (int i = 0; i < n; ++i) {
    Shape s;
    s.kind = static_cast<int>(uniform01(rng) * 3.0);
    s.center = Eigen::Vector2d(uni(rng, 0, size), uni(rng, 0, size));
    s.radius = uni(rng, 0.12, 0.45) * size;
    s.half = Eigen::Vector2d(uni(rng, 0.08, 0.35) * size, uni(rng, 0.08, 0.35) * size);
    s.angle = uni(rng, 0.0, std::numbers::pi);
    s.period = uni(rng, 2.0, 10.0);
    s.amplitude = uni(rng, 0.3, 0.6);
    s.color_a = random_color(rng);
    s.color_b = random_color(rng);
    s.light = Eigen::Vector2d(uni(rng, -0.7, 0.7), uni(rng, -0.7, 0.7));
    if (s.kind == 0 && uniform01(rng) < 0.3) s.period = 0.0;
    shapes.push_back(s);
  }
  const bool gradient_bg = uniform01(rng) < 0.3;
  const Eigen::Vector3d bg_a = gradient_bg ? Eigen::Vector3d(random_color(rng) * 0.4) : Eigen::Vector3d::Zero();
  const Eigen::Vector3d bg_b = gradient_bg ? Eigen::Vector3d(random_color(rng) * 0.4) : Eigen::Vector3d::Zero();

  constexpr int kSuper = 3;
  ImageBuffer img(size, size);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      Eigen::Vector3d acc = Eigen::Vector3d::Zero();
      for (int sy = 0; sy < kSuper; ++sy) {
        for (int sx = 0; sx < kSuper; ++sx) {
          const Eigen::Vector2d p(x + (sx + 0.5) / kSuper, y + (sy + 0.5) / kSuper);
          Eigen::Vector3d c = bg_a + (bg_b - bg_a) * (p.y() / size);
          for (const auto& s : shapes) {
            if (auto v = s.sample(p)) c = *v;  // later shapes occlude earlier ones
          }
          acc += c;
        }
      }
      acc /= kSuper * kSuper;
      for (int c = 0; c < 3; ++c) img.at(y, x, c) = static_cast<float>(std::clamp(acc(c), 0.0, 1.0));
    }
  }
  return img;
}

using PlanesF = Planes<float>;

ImageBuffer crop(const ImageBuffer& img, int y0, int x0, int size) {
  ImageBuffer out(size, size);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x)
      for (int c = 0; c < 3; ++c) out.at(y, x, c) = img.at(y0 + y, x0 + x, c);
  return out;
}

PlanesF random_code(int h, int w, double sigma, Rng& rng) {
  std::normal_distribution<double> dist(0.0, sigma);
  PlanesF code(3, h, w);
  for (Eigen::Index i = 0; i < code.data.size(); ++i) code.data.data()[i] = static_cast<float>(dist(rng));
  return code;
}

}  // namespace

std::vector<ImageBuffer> make_texture_corpus(int count, int size, std::uint64_t seed) {
  if (count < 1 || size < 4) throw ConfigError("texture corpus needs count >= 1 and size >= 4");
  std::vector<ImageBuffer> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    auto rng = make_rng(seed, 0x7E97, static_cast<std::uint64_t>(i));
    out.push_back(make_texture(size, rng));
  }
  return out;
}

void SrPretrainConfig::validate() const {
  if (steps < 0) throw ConfigError("SR pretraining steps must be >= 0");
  if (batch < 1) throw ConfigError("SR pretraining batch must be >= 1");
  if (!(learning_rate > 0.0f)) throw ConfigError("SR pretraining learning rate must be positive");
  if (!(code_sigma >= 0.0)) throw ConfigError("SR code sigma must be >= 0");
}

SrBackbone pretrain_sr_backbone(const std::vector<ImageBuffer>& corpus, const SrConfig& cfg,
                                const SrPretrainConfig& train, std::uint64_t seed,
                                const std::function<void(const SrPretrainStep&)>& on_step) {
  if (corpus.empty()) throw ConfigError("SR pretraining corpus is empty");
  train.validate();
  const int s = cfg.scale;
  if (train.patch % s != 0) throw ConfigError("SR patch size must be divisible by the scale");
  for (const auto& img : corpus) {
    if (img.height % s != 0 || img.width % s != 0 || img.height < train.patch || img.width < train.patch) {
      throw ConfigError("SR corpus image size incompatible with the scale or patch size");
    }
  }
  SrBackbone net(cfg, seed);
  Adam opt(net.parameter_count(), {train.learning_rate});
  std::vector<float> grad(net.parameter_count());
  std::vector<float> sample_grad(net.parameter_count());
  const int ph = train.patch;
  const double n_entries = 3.0 * ph * ph;
  const double n_pixels = static_cast<double>(ph) * ph;

  for (int step = 0; step < train.steps; ++step) {
    auto rng = make_rng(seed, 0x5B7A, static_cast<std::uint64_t>(step));
    std::fill(grad.begin(), grad.end(), 0.0f);
    SrPretrainStep rep;
    rep.step = step;
    for (int b = 0; b < train.batch; ++b) {
      const auto& img = corpus[static_cast<std::size_t>(uniform01(rng) * corpus.size()) % corpus.size()];
      const int y0 = s * static_cast<int>(uniform01(rng) * ((img.height - ph) / s + 1));
      const int x0 = s * static_cast<int>(uniform01(rng) * ((img.width - ph) / s + 1));
      const ImageBuffer hr_img = crop(img, y0, x0, ph);
      const PlanesF hr = to_planes<float>(hr_img);
      const PlanesF lr = to_planes<float>(box_downsample(hr_img, s));

      SrBackbone::Tape tape[2];
      PlanesF out[2], proj[2], d_proj[2];
      for (int k = 0; k < 2; ++k) {
        const PlanesF code = random_code(ph, ph, train.code_sigma, rng);
        out[k] = net.forward(lr, code, &tape[k]);
        proj[k] = cem_project(out[k], lr, s);
        const Eigen::ArrayXXf diff = proj[k].data.array() - hr.data.array();
        rep.reconstruction += diff.abs().sum() / n_entries / 2.0;
        d_proj[k] = PlanesF(3, ph, ph);
        d_proj[k].data = (diff.sign() / static_cast<float>(2.0 * n_entries)).matrix();
      }
      const Eigen::ArrayXXf pair = proj[0].data.array() - proj[1].data.array();
      const double div = pair.abs().sum() / n_entries;
      rep.diversity += div;
      if (div < train.diversity_margin) {
        rep.total += train.diversity_weight * (train.diversity_margin - div);
        const Eigen::ArrayXXf g = pair.sign() * static_cast<float>(train.diversity_weight / n_entries);
        d_proj[0].data.array() -= g;
        d_proj[1].data.array() += g;
      }
      for (int k = 0; k < 2; ++k) {
        remove_block_means(d_proj[k], s);
        const Eigen::ArrayXXf x = out[k].data.array();
        const Eigen::ArrayXXf over = (x - x.max(0.0f).min(1.0f));
        rep.total += train.range_weight * over.abs().sum() / n_pixels;
        d_proj[k].data.array() += over.sign() * static_cast<float>(train.range_weight / n_pixels);
        net.backward(tape[k], d_proj[k], nullptr, grad);
      }
    }
    const float inv = 1.0f / static_cast<float>(train.batch);
    for (auto& g : grad) g *= inv;
    opt.step(net.parameters(), grad);
    rep.reconstruction /= train.batch;
    rep.diversity /= train.batch;
    rep.total = rep.total / train.batch + rep.reconstruction;
    if (on_step) on_step(rep);
  }
  net.check_finite();
  return net;
}

}  // namespace supernerf::ccsr
