#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "supernerf/core/image.hpp"
#include "supernerf/scene/camera.hpp"

namespace supernerf::scene {

enum class ResolutionTag { LR, HR };

const char* to_string(ResolutionTag tag);
ResolutionTag parse_resolution_tag(const std::string& s);

/// One posed image. The pose's width/height match the image.
struct View {
  int index = 0;
  ResolutionTag tag = ResolutionTag::LR;
  CameraPose pose;
  ImageBuffer image;

  friend bool operator==(const View&, const View&) = default;
};

/// Posed images at one or two resolutions related by the integer `scale`.
struct MultiViewDataset {
  std::vector<View> views;
  int scale = 4;

  /// Throws ConfigError when sizes, tags or indices are inconsistent.
  void validate() const;

  /// LR image size (H, W); derived from HR views when no LR view exists.
  [[nodiscard]] std::pair<int, int> lr_size() const;
  [[nodiscard]] std::pair<int, int> hr_size() const { auto [h, w] = lr_size(); return {h * scale, w * scale}; }

  [[nodiscard]] const View& view(int index) const;
  [[nodiscard]] int count(ResolutionTag tag) const;

  friend bool operator==(const MultiViewDataset&, const MultiViewDataset&) = default;
};

/// Indices (positions in `views`) of the round(fraction * n) views kept at high
/// resolution, spread evenly over the view list.
std::vector<int> select_hr_views(int n_views, double fraction_hr);

/// Degrades an all-HR ground-truth dataset: every view not listed in
/// `hr_positions` is box-downsampled by `scale` and tagged LR.
MultiViewDataset degrade(const MultiViewDataset& hr_truth, const std::vector<int>& hr_positions);

/// Low-resolution version of a view regardless of its tag.
ImageBuffer lr_image(const View& v, int scale);

/// Directory layout: poses.txt plus view_<i>.png. `bit_depth` is 8 or 16.
void save_dataset(const MultiViewDataset& ds, const std::filesystem::path& dir, int bit_depth = 16);
MultiViewDataset load_dataset(const std::filesystem::path& dir);

}  // namespace supernerf::scene
