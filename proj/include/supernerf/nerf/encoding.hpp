#pragma once

#include <Eigen/Core>
#include <cmath>
#include <numbers>
#include <vector>

namespace supernerf::nerf {

inline constexpr int encoded_dim(int n_frequencies) { return 3 + 6 * n_frequencies; }

/// Writes [x, sin(2^0 pi x), cos(2^0 pi x), ..., sin(2^{L-1} pi x), cos(2^{L-1} pi x)]
/// into out[0 .. 3 + 6L). Each sin/cos group holds the three coordinates.
/// Octaves are produced by the double-angle recurrence in double precision.
template <typename T>
void positional_encode(const double* x, int n_frequencies, T* out) {
  double s[3], c[3];
  for (int i = 0; i < 3; ++i) {
    out[i] = static_cast<T>(x[i]);
    s[i] = std::sin(std::numbers::pi * x[i]);
    c[i] = std::cos(std::numbers::pi * x[i]);
  }
  for (int k = 0; k < n_frequencies; ++k) {
    T* o = out + 3 + 6 * k;
    for (int i = 0; i < 3; ++i) {
      o[i] = static_cast<T>(s[i]);
      o[3 + i] = static_cast<T>(c[i]);
      const double s2 = 2.0 * s[i] * c[i];
      const double c2 = c[i] * c[i] - s[i] * s[i];
      s[i] = s2;
      c[i] = c2;
    }
  }
}

/// Convenience form returning a vector of size 3 + 6L. Throws ConfigError for L < 0.
std::vector<double> positional_encode(const Eigen::Vector3d& x, int n_frequencies);

}  // namespace supernerf::nerf
