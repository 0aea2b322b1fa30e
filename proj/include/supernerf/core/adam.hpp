#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "supernerf/core/container.hpp"

namespace supernerf {

struct AdamOptions {
  float learning_rate = 1e-3f;
  float beta1 = 0.9f;
  float beta2 = 0.999f;
  float epsilon = 1e-8f;

  friend bool operator==(const AdamOptions&, const AdamOptions&) = default;
};

/// Adam over a flat float parameter vector.
class Adam {
 public:
  Adam() = default;
  Adam(std::size_t n, AdamOptions opts) : opts_(opts), m_(n, 0.0f), v_(n, 0.0f) {}

  void step(std::span<float> params, std::span<const float> grads);

  [[nodiscard]] std::int64_t steps() const { return t_; }
  [[nodiscard]] const AdamOptions& options() const { return opts_; }
  void set_learning_rate(float lr) { opts_.learning_rate = lr; }

  void save(Container& c, const std::string& prefix) const;
  void load(const Container& c, const std::string& prefix);

  friend bool operator==(const Adam&, const Adam&) = default;

 private:
  AdamOptions opts_;
  std::vector<float> m_;
  std::vector<float> v_;
  std::int64_t t_ = 0;
};

}  // namespace supernerf
