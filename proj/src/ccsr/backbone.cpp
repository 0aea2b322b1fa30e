#include "supernerf/ccsr/backbone.hpp"

#include <cmath>
#include <random>

#include "supernerf/core/error.hpp"
#include "supernerf/core/random.hpp"

namespace supernerf::ccsr {
namespace {

// cols is (9 * C) x (H * W); column p holds the 3x3 neighbourhood of pixel p,
// tap-major, zero outside the image.
template <typename Matrix>
void im2col(const Matrix& x, int h, int w, Matrix& cols) {
  const auto c = x.rows();
  cols.setZero(9 * c, static_cast<Eigen::Index>(h) * w);
  for (int y = 0; y < h; ++y) {
    for (int xx = 0; xx < w; ++xx) {
      const Eigen::Index p = static_cast<Eigen::Index>(y) * w + xx;
      for (int k = 0; k < 9; ++k) {
        const int sy = y + k / 3 - 1;
        const int sx = xx + k % 3 - 1;
        if (sy < 0 || sy >= h || sx < 0 || sx >= w) continue;
        cols.col(p).segment(k * c, c) = x.col(static_cast<Eigen::Index>(sy) * w + sx);
      }
    }
  }
}

template <typename Matrix>
void col2im(const Matrix& cols, int h, int w, Eigen::Index c, Matrix& x) {
  x.setZero(c, static_cast<Eigen::Index>(h) * w);
  for (int y = 0; y < h; ++y) {
    for (int xx = 0; xx < w; ++xx) {
      const Eigen::Index p = static_cast<Eigen::Index>(y) * w + xx;
      for (int k = 0; k < 9; ++k) {
        const int sy = y + k / 3 - 1;
        const int sx = xx + k % 3 - 1;
        if (sy < 0 || sy >= h || sx < 0 || sx >= w) continue;
        x.col(static_cast<Eigen::Index>(sy) * w + sx) += cols.col(p).segment(k * c, c);
      }
    }
  }
}

}  // namespace

void SrConfig::validate() const {
  if (scale < 1) throw ConfigError("SR scale must be positive");
  if (channels < 1) throw ConfigError("SR channels must be positive");
  if (blocks < 0) throw ConfigError("SR blocks must be nonnegative");
  if (!(tail_init > 0.0)) throw ConfigError("SR tail_init must be positive");
}

std::size_t parameter_count(const SrConfig& cfg) {
  const auto conv = [](std::size_t cin, std::size_t cout) { return cout * 9 * cin + cout; };
  const std::size_t c = cfg.channels;
  return conv(6, c) + 2 * static_cast<std::size_t>(cfg.blocks) * conv(c, c) + conv(c, 3);
}

template <typename Scalar>
void BasicSrBackbone<Scalar>::layout() {
  convs_.clear();
  std::size_t off = 0;
  auto add = [&](int cin, int cout) {
    Conv cv{off, off + static_cast<std::size_t>(cout) * 9 * cin, cin, cout};
    off = cv.bias + cout;
    convs_.push_back(cv);
  };
  add(6, config_.channels);
  for (int b = 0; b < config_.blocks; ++b) {
    add(config_.channels, config_.channels);
    add(config_.channels, config_.channels);
  }
  add(config_.channels, 3);
}

template <typename Scalar>
BasicSrBackbone<Scalar>::BasicSrBackbone(SrConfig cfg, std::uint64_t seed) : config_(cfg) {
  config_.validate();
  params_.assign(ccsr::parameter_count(config_), Scalar(0));
  layout();
  auto rng = make_rng(seed, 0x5B0B);
  for (std::size_t i = 0; i < convs_.size(); ++i) {
    const auto& cv = convs_[i];
    double bound = std::sqrt(6.0 / (9.0 * cv.cin));
    const bool second_in_block = i > 0 && i + 1 < convs_.size() && (i % 2 == 0);
    if (second_in_block) bound *= 0.1;
    if (i + 1 == convs_.size()) bound *= config_.tail_init;
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (std::size_t k = 0; k < static_cast<std::size_t>(cv.cout) * 9 * cv.cin; ++k)
      params_[cv.weight + k] = static_cast<Scalar>(dist(rng));
  }
}

template <typename Scalar>
void BasicSrBackbone<Scalar>::assign(SrConfig cfg, std::vector<Scalar> params) {
  cfg.validate();
  if (params.size() != ccsr::parameter_count(cfg)) throw ShapeError("SR backbone parameter count mismatch");
  config_ = cfg;
  params_.assign(params.begin(), params.end());
  layout();
}

template <typename Scalar>
void BasicSrBackbone<Scalar>::check_finite() const {
  for (Scalar p : params_) {
    if (!std::isfinite(static_cast<double>(p))) throw NumericalError("SR backbone holds non-finite parameters");
  }
}

template <typename Scalar>
void BasicSrBackbone<Scalar>::conv_forward(const Conv& cv, const Matrix& x, int h, int w, Matrix& out) const {
  using Map = Eigen::Map<const Matrix>;
  using VecMap = Eigen::Map<const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>;
  Matrix cols;
  im2col(x, h, w, cols);
  Map W(params_.data() + cv.weight, cv.cout, 9 * cv.cin);
  out.noalias() = W * cols;
  out.colwise() += VecMap(params_.data() + cv.bias, cv.cout);
}

template <typename Scalar>
void BasicSrBackbone<Scalar>::conv_backward(const Conv& cv, const Matrix& x, int h, int w, const Matrix& d_out,
                                            Matrix* d_x, std::span<Scalar> d_params) const {
  using Map = Eigen::Map<const Matrix>;
  Map W(params_.data() + cv.weight, cv.cout, 9 * cv.cin);
  if (!d_params.empty()) {
    Matrix cols;
    im2col(x, h, w, cols);
    Eigen::Map<Matrix> gW(d_params.data() + cv.weight, cv.cout, 9 * cv.cin);
    gW.noalias() += d_out * cols.transpose();
    Eigen::Map<Eigen::Matrix<Scalar, Eigen::Dynamic, 1>> gb(d_params.data() + cv.bias, cv.cout);
    gb += d_out.rowwise().sum();
  }
  if (d_x) {
    const Matrix d_cols = W.transpose() * d_out;
    col2im(d_cols, h, w, cv.cin, *d_x);
  }
}

template <typename Scalar>
Planes<Scalar> BasicSrBackbone<Scalar>::forward(const Planes<Scalar>& lr, const Planes<Scalar>& code,
                                                Tape* tape) const {
  const int s = config_.scale;
  if (lr.channels() != 3 || code.channels() != 3) throw ShapeError("SR backbone expects 3-channel inputs");
  if (code.height != lr.height * s || code.width != lr.width * s) {
    throw ShapeError("latent code is " + std::to_string(code.height) + "x" + std::to_string(code.width) +
                     ", expected " + std::to_string(lr.height * s) + "x" + std::to_string(lr.width * s));
  }
  const int h = code.height;
  const int w = code.width;
  Tape local;
  Tape& t = tape ? *tape : local;
  t.height = h;
  t.width = w;
  t.input.resize(6, static_cast<Eigen::Index>(h) * w);
  Planes<Scalar> out(3, h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const Eigen::Index p = static_cast<Eigen::Index>(y) * w + x;
      const Eigen::Index q = static_cast<Eigen::Index>(y / s) * lr.width + x / s;
      t.input.col(p).template head<3>() = lr.data.col(q);
      out.data.col(p) = lr.data.col(q);
    }
  }
  t.input.bottomRows(3) = code.data;

  const std::size_t nb = static_cast<std::size_t>(config_.blocks);
  t.trunk.assign(tape ? nb + 1 : 1, Matrix());
  t.inner.assign(tape ? nb : 1, Matrix());
  conv_forward(convs_[0], t.input, h, w, t.trunk[0]);
  Matrix tmp;
  for (std::size_t b = 0; b < nb; ++b) {
    const Matrix& in = tape ? t.trunk[b] : t.trunk[0];
    Matrix& a = tape ? t.inner[b] : t.inner[0];
    conv_forward(convs_[1 + 2 * b], in, h, w, a);
    a = a.cwiseMax(Scalar(0));
    conv_forward(convs_[2 + 2 * b], a, h, w, tmp);
    if (tape) {
      t.trunk[b + 1] = t.trunk[b] + tmp;
    } else {
      t.trunk[0] += tmp;
    }
  }
  conv_forward(convs_.back(), t.trunk.back(), h, w, tmp);
  out.data += tmp;
  return out;
}

template <typename Scalar>
void BasicSrBackbone<Scalar>::backward(const Tape& t, const Planes<Scalar>& d_out, Planes<Scalar>* d_code,
                                       std::span<Scalar> out_params) const {
  if (!out_params.empty() && out_params.size() != params_.size()) throw ShapeError("SR gradient buffer size mismatch");
  // Products accumulate into aligned scratch so rounding does not depend on where `out_params` lives.
  AlignedVector<Scalar> scratch(out_params.empty() ? 0 : params_.size(), Scalar(0));
  const std::span<Scalar> d_params(scratch);
  const std::size_t nb = static_cast<std::size_t>(config_.blocks);
  if (t.trunk.size() != nb + 1) throw ShapeError("SR tape was recorded without activations");
  const int h = t.height;
  const int w = t.width;
  if (d_out.height != h || d_out.width != w || d_out.channels() != 3) throw ShapeError("SR output gradient shape mismatch");

  Matrix d_feat;
  conv_backward(convs_.back(), t.trunk.back(), h, w, d_out.data, &d_feat, d_params);
  Matrix d_inner, d_tmp;
  for (std::size_t b = nb; b-- > 0;) {
    conv_backward(convs_[2 + 2 * b], t.inner[b], h, w, d_feat, &d_inner, d_params);
    d_inner = (t.inner[b].array() > Scalar(0)).select(d_inner, Scalar(0));
    conv_backward(convs_[1 + 2 * b], t.trunk[b], h, w, d_inner, &d_tmp, d_params);
    d_feat += d_tmp;
  }
  Matrix d_input;
  conv_backward(convs_[0], t.input, h, w, d_feat, d_code ? &d_input : nullptr, d_params);
  if (d_code) {
    *d_code = Planes<Scalar>(3, h, w);
    d_code->data = d_input.bottomRows(3);
  }
  for (std::size_t i = 0; i < scratch.size(); ++i) out_params[i] += scratch[i];
}

template <typename Scalar>
void BasicSrBackbone<Scalar>::save(Container& c, const std::string& prefix) const {
  const std::int64_t cfg[3] = {config_.scale, config_.channels, config_.blocks};
  c.put(prefix + ".config", std::span<const std::int64_t>(cfg));
  c.put_double(prefix + ".tail_init", config_.tail_init);
  std::vector<float> p(params_.begin(), params_.end());
  c.put(prefix + ".params", std::span<const float>(p));
}

template <typename Scalar>
BasicSrBackbone<Scalar> BasicSrBackbone<Scalar>::load(const Container& c, const std::string& prefix) {
  const auto& cfg = c.ints(prefix + ".config");
  if (cfg.size() != 3) throw IoError("backbone record '" + prefix + ".config' malformed");
  SrConfig sc{static_cast<int>(cfg[0]), static_cast<int>(cfg[1]), static_cast<int>(cfg[2]),
              c.get_double(prefix + ".tail_init")};
  const auto& p = c.floats(prefix + ".params");
  BasicSrBackbone out;
  try {
    out.assign(sc, std::vector<Scalar>(p.begin(), p.end()));
  } catch (const std::exception& e) {
    throw IoError("backbone record '" + prefix + "': " + e.what());
  }
  return out;
}

template class BasicSrBackbone<float>;
template class BasicSrBackbone<double>;

ImageBuffer sr_generate(const SrBackbone& backbone, const ImageBuffer& lr, const ImageBuffer& code) {
  lr.check_shape();
  code.check_shape();
  return to_image(backbone.forward(to_planes<float>(lr), to_planes<float>(code)));
}

void save_backbone(const SrBackbone& backbone, const std::filesystem::path& path) {
  Container c;
  c.put_string("kind", "sr_backbone");
  backbone.save(c, "backbone");
  c.write(path);
}

SrBackbone load_backbone(const std::filesystem::path& path) {
  const auto c = Container::read(path);
  if (!c.has("kind") || c.get_string("kind") != "sr_backbone") {
    throw IoError(path.string() + ": not an SR backbone checkpoint (field 'kind')");
  }
  return SrBackbone::load(c, "backbone");
}

}  // namespace supernerf::ccsr
