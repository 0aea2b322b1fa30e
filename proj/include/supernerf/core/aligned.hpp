#pragma once

#include <Eigen/Core>
#include <vector>

namespace supernerf {

/// Vector whose storage starts on Eigen's maximum alignment. Vectorised
/// products over maps into such storage round identically in every process.
template <typename T>
using AlignedVector = std::vector<T, Eigen::aligned_allocator<T>>;

}  // namespace supernerf
