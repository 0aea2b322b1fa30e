#include "supernerf/nerf/encoding.hpp"

#include "supernerf/core/error.hpp"

namespace supernerf::nerf {

std::vector<double> positional_encode(const Eigen::Vector3d& x, int n_frequencies) {
  if (n_frequencies < 0) throw ConfigError("positional encoding needs L >= 0");
  std::vector<double> out(encoded_dim(n_frequencies));
  const double p[3] = {x.x(), x.y(), x.z()};
  positional_encode(p, n_frequencies, out.data());
  return out;
}

}  // namespace supernerf::nerf
