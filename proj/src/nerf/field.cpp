#include "supernerf/nerf/field.hpp"

#include <cmath>
#include <random>

#include "supernerf/core/error.hpp"
#include "supernerf/core/random.hpp"
#include "supernerf/nerf/encoding.hpp"

namespace supernerf::nerf {

const char* to_string(FieldRole role) { return role == FieldRole::LR ? "LR" : "HR"; }

void FieldConfig::validate() const {
  if (n_frequencies < 0) throw ConfigError("field n_frequencies must be >= 0");
  if (hidden_width < 1 || n_layers < 1) throw ConfigError("field needs at least one hidden layer");
  if (n_samples_per_ray < 1) throw ConfigError("field needs at least one sample per ray");
  if (!(position_scale > 0.0)) throw ConfigError("field position_scale must be positive");
}

FieldConfig FieldConfig::lr_default() { return {6, 48, 4, 64, FieldRole::LR, 0.5}; }
FieldConfig FieldConfig::hr_default() { return {10, 96, 4, 64, FieldRole::HR, 0.5}; }

std::size_t parameter_count(const FieldConfig& cfg) {
  const std::size_t in = 3 + 6 * static_cast<std::size_t>(cfg.n_frequencies);
  const std::size_t w = cfg.hidden_width;
  std::size_t n = in * w + w;
  n += (cfg.n_layers - 1) * (w * w + w);
  n += w + 1;            // density head
  n += 3 * (w + 3) + 3;  // color head
  return n;
}

template <typename Scalar>
BasicRadianceField<Scalar>::BasicRadianceField(FieldConfig cfg, std::uint64_t seed) : config_(cfg) {
  config_.validate();
  params_.assign(nerf::parameter_count(config_), Scalar(0));
  layout();
  auto rng = make_rng(seed, 0xF1E1D);
  auto fill_uniform = [&](std::size_t off, std::size_t n, double bound) {
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (std::size_t i = 0; i < n; ++i) params_[off + i] = static_cast<Scalar>(dist(rng));
  };
  const int wdt = config_.hidden_width;
  int fan_in = input_dim();
  for (std::size_t l = 0; l < w_.size(); ++l) {
    fill_uniform(w_[l], static_cast<std::size_t>(wdt) * fan_in, std::sqrt(6.0 / fan_in));  // He uniform
    fan_in = wdt;
  }
  fill_uniform(density_w_, wdt, std::sqrt(1.0 / wdt));
  fill_uniform(color_w_, 3 * static_cast<std::size_t>(wdt + 3), std::sqrt(1.0 / (wdt + 3)));
}

template <typename Scalar>
void BasicRadianceField<Scalar>::layout() {
  const std::size_t in = input_dim();
  const std::size_t wdt = config_.hidden_width;
  w_.clear();
  b_.clear();
  std::size_t off = 0;
  std::size_t fan_in = in;
  for (int l = 0; l < config_.n_layers; ++l) {
    w_.push_back(off);
    off += wdt * fan_in;
    b_.push_back(off);
    off += wdt;
    fan_in = wdt;
  }
  density_w_ = off;
  off += wdt;
  density_b_ = off;
  off += 1;
  color_w_ = off;
  off += 3 * (wdt + 3);
  color_b_ = off;
  off += 3;
  if (off != params_.size()) throw ShapeError("field parameter layout mismatch");
}

template <typename Scalar>
void BasicRadianceField<Scalar>::assign(FieldConfig cfg, std::vector<Scalar> params) {
  cfg.validate();
  if (params.size() != nerf::parameter_count(cfg)) {
    throw ShapeError("field parameter vector has " + std::to_string(params.size()) + " entries, expected " +
                     std::to_string(nerf::parameter_count(cfg)));
  }
  config_ = cfg;
  params_.assign(params.begin(), params.end());
  layout();
}

template <typename Scalar>
void BasicRadianceField<Scalar>::check_finite() const {
  for (Scalar p : params_) {
    if (!std::isfinite(static_cast<double>(p))) throw NumericalError("radiance field holds non-finite parameters");
  }
}

template <typename Scalar>
void BasicRadianceField<Scalar>::forward(const Eigen::Ref<const Eigen::MatrixX3d>& points,
                                         const Eigen::Ref<const Eigen::MatrixX3d>& dirs, RowArray& density,
                                         Matrix& color, Tape* tape) const {
  using Map = Eigen::Map<const Matrix>;
  using VecMap = Eigen::Map<const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>;
  const Eigen::Index n = points.rows();
  const int in = input_dim();
  const int wdt = config_.hidden_width;

  Tape local;
  Tape& t = tape ? *tape : local;
  t.input.resize(in, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double p[3] = {points(i, 0) * config_.position_scale, points(i, 1) * config_.position_scale,
                         points(i, 2) * config_.position_scale};
    positional_encode(p, config_.n_frequencies, t.input.col(i).data());
  }
  t.dirs = dirs.transpose().template cast<Scalar>();
  t.hidden.resize(config_.n_layers);
  const Matrix* prev = &t.input;
  int fan_in = in;
  for (int l = 0; l < config_.n_layers; ++l) {
    Map W(params_.data() + w_[l], wdt, fan_in);
    VecMap b(params_.data() + b_[l], wdt);
    Matrix& h = t.hidden[l];
    h.noalias() = W * (*prev);
    h.colwise() += b;
    h = h.cwiseMax(Scalar(0));
    prev = &h;
    fan_in = wdt;
    if (!tape && l > 0) t.hidden[l - 1].resize(0, 0);
  }
  const Matrix& last = t.hidden.back();
  Map dw(params_.data() + density_w_, 1, wdt);
  t.density_logit = (dw * last).array() + params_[density_b_];
  // softplus, stable form
  density = t.density_logit.unaryExpr([](Scalar z) {
    return z > Scalar(20) ? z : static_cast<Scalar>(std::log1p(std::exp(static_cast<double>(z))));
  });

  Map cw(params_.data() + color_w_, 3, wdt + 3);
  VecMap cb(params_.data() + color_b_, 3);
  Matrix z = cw.leftCols(wdt) * last;
  z.noalias() += cw.rightCols(3) * t.dirs;
  z.colwise() += cb;
  t.color = z.unaryExpr([](Scalar v) { return Scalar(1) / (Scalar(1) + std::exp(-v)); });
  color = t.color;
}

template <typename Scalar>
void BasicRadianceField<Scalar>::backward(const Tape& t, const RowArray& d_density, const Matrix& d_color,
                                          std::span<Scalar> out) const {
  using Map = Eigen::Map<const Matrix>;
  using MutMap = Eigen::Map<Matrix>;
  using MutVec = Eigen::Map<Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>;
  if (out.size() != params_.size()) throw ShapeError("gradient buffer size mismatch");
  // Products accumulate into aligned scratch so rounding does not depend on where `out` lives.
  AlignedVector<Scalar> grad(params_.size(), Scalar(0));
  const int wdt = config_.hidden_width;
  const Matrix& last = t.hidden.back();

  // softplus' = sigmoid
  const RowArray dz_density =
      d_density * t.density_logit.unaryExpr([](Scalar z) { return Scalar(1) / (Scalar(1) + std::exp(-z)); });
  const Matrix dz_color = (d_color.array() * t.color.array() * (Scalar(1) - t.color.array())).matrix();

  MutMap g_dw(grad.data() + density_w_, 1, wdt);
  g_dw.noalias() += dz_density.matrix() * last.transpose();
  grad[density_b_] += dz_density.sum();

  MutMap g_cw(grad.data() + color_w_, 3, wdt + 3);
  g_cw.leftCols(wdt).noalias() += dz_color * last.transpose();
  g_cw.rightCols(3).noalias() += dz_color * t.dirs.transpose();
  MutVec g_cb(grad.data() + color_b_, 3);
  g_cb += dz_color.rowwise().sum();

  Map dw(params_.data() + density_w_, 1, wdt);
  Map cw(params_.data() + color_w_, 3, wdt + 3);
  Matrix dh = dw.transpose() * dz_density.matrix();
  dh.noalias() += cw.leftCols(wdt).transpose() * dz_color;

  for (int l = config_.n_layers - 1; l >= 0; --l) {
    const Matrix& h = t.hidden[l];
    dh = (h.array() > Scalar(0)).select(dh, Scalar(0));
    const Matrix& below = l > 0 ? t.hidden[l - 1] : t.input;
    const int fan_in = l > 0 ? wdt : input_dim();
    MutMap gW(grad.data() + w_[l], wdt, fan_in);
    gW.noalias() += dh * below.transpose();
    MutVec gb(grad.data() + b_[l], wdt);
    gb += dh.rowwise().sum();
    if (l > 0) {
      Map W(params_.data() + w_[l], wdt, fan_in);
      Matrix next = W.transpose() * dh;
      dh.swap(next);
    }
  }
  for (std::size_t i = 0; i < grad.size(); ++i) out[i] += grad[i];
}

template <typename Scalar>
void BasicRadianceField<Scalar>::save(Container& c, const std::string& prefix) const {
  const std::int64_t cfg[5] = {config_.n_frequencies, config_.hidden_width, config_.n_layers,
                               config_.n_samples_per_ray, config_.role == FieldRole::HR ? 1 : 0};
  c.put(prefix + ".config", std::span<const std::int64_t>(cfg));
  c.put_double(prefix + ".position_scale", config_.position_scale);
  std::vector<float> p(params_.begin(), params_.end());
  c.put(prefix + ".params", std::span<const float>(p));
}

template <typename Scalar>
BasicRadianceField<Scalar> BasicRadianceField<Scalar>::load(const Container& c, const std::string& prefix) {
  const auto& cfg = c.ints(prefix + ".config");
  if (cfg.size() != 5) throw IoError("field record '" + prefix + ".config' malformed");
  FieldConfig fc{static_cast<int>(cfg[0]), static_cast<int>(cfg[1]), static_cast<int>(cfg[2]),
                 static_cast<int>(cfg[3]), cfg[4] ? FieldRole::HR : FieldRole::LR, c.get_double(prefix + ".position_scale")};
  const auto& p = c.floats(prefix + ".params");
  BasicRadianceField out;
  try {
    out.assign(fc, std::vector<Scalar>(p.begin(), p.end()));
  } catch (const std::exception& e) {
    throw IoError("field record '" + prefix + "': " + e.what());
  }
  return out;
}

template class BasicRadianceField<float>;
template class BasicRadianceField<double>;

std::pair<Eigen::VectorXd, Eigen::MatrixX3d> query_field(const RadianceField& field,
                                                         const Eigen::Ref<const Eigen::MatrixX3d>& points,
                                                         const Eigen::Ref<const Eigen::MatrixX3d>& view_dirs) {
  if (points.rows() != view_dirs.rows()) throw ShapeError("query_field: points/dirs row mismatch");
  field.check_finite();
  RadianceField::RowArray density;
  RadianceField::Matrix color;
  field.forward(points, view_dirs, density, color, nullptr);
  return {density.transpose().cast<double>().matrix(), color.transpose().cast<double>()};
}

void save_field(const RadianceField& field, const std::filesystem::path& path) {
  Container c;
  c.put_string("kind", "radiance_field");
  field.save(c, "field");
  c.write(path);
}

RadianceField load_field(const std::filesystem::path& path) {
  const auto c = Container::read(path);
  if (!c.has("kind") || c.get_string("kind") != "radiance_field") {
    throw IoError(path.string() + ": not a radiance field checkpoint (field 'kind')");
  }
  return RadianceField::load(c, "field");
}

}  // namespace supernerf::nerf
