#include "supernerf/training/losses.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "supernerf/core/error.hpp"

namespace supernerf::training {

void AlphaSchedule::validate() const {
  if (!(tau > 0.0)) throw ConfigError("alpha schedule tau must be positive");
  if (!(floor >= 0.0 && floor <= 1.0)) throw ConfigError("alpha schedule floor must lie in [0, 1]");
}

double AlphaSchedule::operator()(std::int64_t t) const {
  if (t < 0) throw ConfigError("alpha schedule needs t >= 0");
  return std::max(floor, std::exp(-static_cast<double>(t) / tau));
}

AlphaSchedule AlphaSchedule::for_iterations(int iterations, double floor) {
  AlphaSchedule s{std::max(1, iterations) / 5.0, floor};
  s.validate();
  return s;
}

double loss_sr(const ImageBuffer& c_ln, const ImageBuffer& c_hn, const ImageBuffer& c_hr, double a) {
  require_same_shape(c_ln, c_hr, "loss_sr (C_LN vs C_HR)");
  require_same_shape(c_hn, c_hr, "loss_sr (C_HN vs C_HR)");
  if (!(a >= 0.0 && a <= 1.0)) throw ConfigError("loss_sr weight must lie in [0, 1]");
  double ln = 0.0, hn = 0.0;
  for (std::size_t i = 0; i < c_hr.size(); ++i) {
    ln += std::abs(double(c_ln.pixels[i]) - c_hr.pixels[i]);
    hn += std::abs(double(c_hn.pixels[i]) - c_hr.pixels[i]);
  }
  const double n = static_cast<double>(c_hr.size());
  return a * (ln / n) + (1.0 - a) * (hn / n);
}

double loss_range(const ImageBuffer& x) {
  x.check_shape();
  if (x.pixel_count() == 0) return 0.0;
  double acc = 0.0;
  for (float v : x.pixels) acc += std::abs(double(v) - std::clamp(double(v), 0.0, 1.0));
  return acc / static_cast<double>(x.pixel_count());
}

std::string LossReport::to_line() const {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%lld %d %.17g %.17g %.17g %.17g %.3f", static_cast<long long>(t), view_index,
                alpha_t, loss_sr, loss_range, loss_total, wall_ms);
  return buf;
}

LossReport LossReport::parse_line(const std::string& line) {
  std::istringstream in(line);
  LossReport r;
  long long t = 0;
  if (!(in >> t >> r.view_index >> r.alpha_t >> r.loss_sr >> r.loss_range >> r.loss_total >> r.wall_ms)) {
    throw IoError("malformed loss log line: '" + line + "'");
  }
  r.t = t;
  return r;
}

}  // namespace supernerf::training
