#pragma once

#include <cstdint>
#include <string>

#include "supernerf/core/image.hpp"

namespace supernerf::training {

/// alpha(t) = max(floor, exp(-t / tau)).
struct AlphaSchedule {
  double tau = 1000.0;
  double floor = 0.0;

  void validate() const;
  [[nodiscard]] double operator()(std::int64_t t) const;

  /// tau = iterations / 5.
  static AlphaSchedule for_iterations(int iterations, double floor = 0.0);
};

inline double alpha(const AlphaSchedule& schedule, std::int64_t t) { return schedule(t); }

/// a * mean|C_LN - C_HR| + (1 - a) * mean|C_HN - C_HR|, means over pixels and channels.
double loss_sr(const ImageBuffer& c_ln, const ImageBuffer& c_hn, const ImageBuffer& c_hr, double a);

/// (1 / pixel_count) * sum over entries of |x - clamp(x, 0, 1)|.
double loss_range(const ImageBuffer& x);

/// One mutual-learning step.
struct LossReport {
  std::int64_t t = 0;
  int view_index = 0;
  double alpha_t = 0.0;
  double loss_sr = 0.0;
  double loss_range = 0.0;
  double loss_total = 0.0;
  double wall_ms = 0.0;

  /// "t view alpha loss_sr loss_range loss_total wall_ms", full precision.
  [[nodiscard]] std::string to_line() const;
  static LossReport parse_line(const std::string& line);

  /// Equality ignoring wall-clock time.
  [[nodiscard]] bool same_values(const LossReport& o) const {
    return t == o.t && view_index == o.view_index && alpha_t == o.alpha_t && loss_sr == o.loss_sr &&
           loss_range == o.loss_range && loss_total == o.loss_total;
  }
};

inline constexpr const char* kLossLogHeader = "# t view alpha loss_sr loss_range loss_total wall_ms";

}  // namespace supernerf::training
