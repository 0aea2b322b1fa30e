#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "supernerf/core/container.hpp"
#include "supernerf/core/image.hpp"

namespace supernerf::ccsr {

/// Per-view latent code. `height` x `width` is the full HR size; values are
/// stored at (height / downsample) x (width / downsample), HWC order, and
/// expanded by nearest-neighbour replication before injection.
struct LatentCode {
  int view_index = 0;
  int height = 0;
  int width = 0;
  int downsample = 1;
  bool learnable = true;
  std::vector<float> values;

  /// (channels, rows, cols) of the stored array.
  [[nodiscard]] std::array<int, 3> shape() const { return {3, height / downsample, width / downsample}; }

  /// Code at full HR resolution.
  [[nodiscard]] ImageBuffer expand() const;

  /// Folds a full-resolution gradient onto the stored entries (sum over each block).
  [[nodiscard]] std::vector<float> reduce(const ImageBuffer& full_grad) const;

  friend bool operator==(const LatentCode&, const LatentCode&) = default;
};

/// Per-axis factor for an entry-count reduction of 1, 4 or 16.
int latent_axis_factor(int reduction);

/// Gaussian(0, 0.1^2) entries, deterministic in (view_index, seed).
/// `downsample` is the per-axis factor (1, 2 or 4).
LatentCode init_latent(int view_index, int lr_h, int lr_w, int s, std::uint64_t seed, int downsample = 1);

/// One code per LR training view.
class LatentCodeStore {
 public:
  void add(LatentCode code);
  [[nodiscard]] bool contains(int view_index) const { return codes_.contains(view_index); }
  [[nodiscard]] LatentCode& at(int view_index);
  [[nodiscard]] const LatentCode& at(int view_index) const;
  [[nodiscard]] std::size_t size() const { return codes_.size(); }
  [[nodiscard]] bool empty() const { return codes_.empty(); }
  [[nodiscard]] const std::map<int, LatentCode>& codes() const { return codes_; }

  void save(Container& c, const std::string& prefix) const;
  static LatentCodeStore load(const Container& c, const std::string& prefix);

  friend bool operator==(const LatentCodeStore&, const LatentCodeStore&) = default;

 private:
  std::map<int, LatentCode> codes_;
};

}  // namespace supernerf::ccsr
