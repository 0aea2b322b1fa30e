#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "supernerf/eval/metrics.hpp"

namespace supernerf::eval {

/// Warped consistency of one ordered view pair for the Super-NeRF renders and
/// the independent-SR baseline, both through the same warp.
struct PairConsistency {
  int view_i = 0;
  int view_j = 0;
  double mean_displacement = 0.0;
  double valid_fraction = 0.0;
  std::optional<double> supernerf;
  std::optional<double> baseline;

  [[nodiscard]] std::string bucket() const { return disparity_bucket(mean_displacement); }
};

struct BucketSummary {
  std::string name;
  int pairs = 0;
  std::optional<double> supernerf;
  std::optional<double> baseline;
};

struct MetricReport {
  std::string run_id;
  std::string config_hash;
  std::vector<PsnrValue> heldout_psnr;
  double lr_residual = 0.0;
  std::vector<PairConsistency> pairs;
  /// Additional named scalars, emitted in insertion order.
  std::vector<std::pair<std::string, double>> extras;

  /// Pairs with both values present.
  [[nodiscard]] int compared_pairs() const;
  [[nodiscard]] std::optional<double> supernerf_mean() const;
  [[nodiscard]] std::optional<double> baseline_mean() const;
  /// Fraction of compared pairs where Super-NeRF is strictly lower.
  [[nodiscard]] double fraction_better() const;
  [[nodiscard]] std::vector<BucketSummary> buckets() const;
};

/// metrics.json key order, one level per line of this list.
std::string report_json(const MetricReport& report);
std::string report_table(const MetricReport& report);

/// Writes metrics.json, metrics.txt, plots/consistency_buckets.png and, when
/// `loss_log` names a readable log, plots/loss_curve.png. Throws IoError when
/// out_dir cannot be written.
void emit_report(const MetricReport& report, const std::filesystem::path& out_dir,
                 const std::filesystem::path& loss_log = {});

/// Exponential moving average used for loss curves (first value seeds it).
std::vector<double> smooth(const std::vector<double>& values, double beta);

}  // namespace supernerf::eval
