#include "supernerf/core/adam.hpp"

#include <cmath>

#include "supernerf/core/error.hpp"

namespace supernerf {

void Adam::step(std::span<float> params, std::span<const float> grads) {
  if (params.size() != m_.size() || grads.size() != m_.size()) throw ShapeError("adam: size mismatch");
  ++t_;
  const double bc1 = 1.0 - std::pow(static_cast<double>(opts_.beta1), static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(static_cast<double>(opts_.beta2), static_cast<double>(t_));
  const float step = static_cast<float>(opts_.learning_rate * std::sqrt(bc2) / bc1);
  const float b1 = opts_.beta1, b2 = opts_.beta2;
  const float eps_hat = static_cast<float>(opts_.epsilon * std::sqrt(bc2));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const float g = grads[i];
    m_[i] = b1 * m_[i] + (1.0f - b1) * g;
    v_[i] = b2 * v_[i] + (1.0f - b2) * g * g;
    params[i] -= step * m_[i] / (std::sqrt(v_[i]) + eps_hat);
  }
}

void Adam::save(Container& c, const std::string& prefix) const {
  c.put(prefix + ".m", std::span<const float>(m_));
  c.put(prefix + ".v", std::span<const float>(v_));
  c.put_int(prefix + ".t", t_);
  const double hyper[4] = {opts_.learning_rate, opts_.beta1, opts_.beta2, opts_.epsilon};
  c.put(prefix + ".hyper", std::span<const double>(hyper));
}

void Adam::load(const Container& c, const std::string& prefix) {
  m_ = c.floats(prefix + ".m");
  v_ = c.floats(prefix + ".v");
  if (m_.size() != v_.size()) throw IoError("adam state '" + prefix + "' has inconsistent moment sizes");
  t_ = c.get_int(prefix + ".t");
  const auto& h = c.doubles(prefix + ".hyper");
  if (h.size() != 4) throw IoError("adam state '" + prefix + ".hyper' malformed");
  opts_ = {static_cast<float>(h[0]), static_cast<float>(h[1]), static_cast<float>(h[2]), static_cast<float>(h[3])};
}

}  // namespace supernerf
