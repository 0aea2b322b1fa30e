#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "supernerf/core/aligned.hpp"
#include "supernerf/core/container.hpp"
#include "supernerf/core/image.hpp"

namespace supernerf::ccsr {

/// Channel-major image: data is C x (H * W), pixels row-major.
template <typename Scalar>
struct Planes {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  int height = 0;
  int width = 0;
  Matrix data;

  Planes() = default;
  Planes(int channels, int h, int w) : height(h), width(w), data(Matrix::Zero(channels, static_cast<Eigen::Index>(h) * w)) {}

  [[nodiscard]] int channels() const { return static_cast<int>(data.rows()); }
  [[nodiscard]] Eigen::Index pixels() const { return data.cols(); }
};

template <typename Scalar>
Planes<Scalar> to_planes(const ImageBuffer& img) {
  Planes<Scalar> p(3, img.height, img.width);
  for (Eigen::Index i = 0; i < p.pixels(); ++i)
    for (int c = 0; c < 3; ++c) p.data(c, i) = static_cast<Scalar>(img.pixels[static_cast<std::size_t>(i) * 3 + c]);
  return p;
}

template <typename Scalar>
ImageBuffer to_image(const Planes<Scalar>& p) {
  ImageBuffer img(p.height, p.width);
  for (Eigen::Index i = 0; i < p.pixels(); ++i)
    for (int c = 0; c < 3; ++c) img.pixels[static_cast<std::size_t>(i) * 3 + c] = static_cast<float>(p.data(c, i));
  return img;
}

/// Residual convolutional SR generator.
///
/// Input is the replicate-upsampled LR image concatenated with the latent
/// code (6 channels at HR size). A 3x3 head conv lifts it to `channels`
/// features, `blocks` residual blocks (conv, ReLU, conv, skip) follow, and a
/// tail conv maps back to 3 channels that are added to the upsampled LR.
struct SrConfig {
  int scale = 4;
  int channels = 16;
  int blocks = 8;
  double tail_init = 0.1;

  void validate() const;
  friend bool operator==(const SrConfig&, const SrConfig&) = default;
};

std::size_t parameter_count(const SrConfig& cfg);

template <typename Scalar>
class BasicSrBackbone {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  struct Tape {
    int height = 0;
    int width = 0;
    Matrix input;                 // 6 x HW
    std::vector<Matrix> trunk;    // block inputs, then the final features
    std::vector<Matrix> inner;    // post-ReLU activation inside each block
  };

  BasicSrBackbone() = default;
  BasicSrBackbone(SrConfig cfg, std::uint64_t seed);

  [[nodiscard]] const SrConfig& config() const { return config_; }
  [[nodiscard]] std::span<Scalar> parameters() { return params_; }
  [[nodiscard]] std::span<const Scalar> parameters() const { return params_; }
  [[nodiscard]] std::size_t parameter_count() const { return params_.size(); }

  /// lr is 3 x (H x W); code is 3 x (sH x sW). Returns 3 x (sH x sW).
  /// Throws ShapeError on mismatched sizes.
  Planes<Scalar> forward(const Planes<Scalar>& lr, const Planes<Scalar>& code, Tape* tape = nullptr) const;

  /// Back-propagates d_out. Writes d(loss)/d(code) into d_code when given and
  /// accumulates parameter gradients into d_params when it is non-empty.
  void backward(const Tape& tape, const Planes<Scalar>& d_out, Planes<Scalar>* d_code,
                std::span<Scalar> d_params) const;

  void check_finite() const;

  template <typename Other>
  [[nodiscard]] BasicSrBackbone<Other> cast() const {
    BasicSrBackbone<Other> out;
    out.assign(config_, std::vector<Other>(params_.begin(), params_.end()));
    return out;
  }
  void assign(SrConfig cfg, std::vector<Scalar> params);

  void save(Container& c, const std::string& prefix) const;
  static BasicSrBackbone load(const Container& c, const std::string& prefix);

  friend bool operator==(const BasicSrBackbone&, const BasicSrBackbone&) = default;

 private:
  struct Conv {
    std::size_t weight = 0;  // cout x (9 * cin), column-major
    std::size_t bias = 0;
    int cin = 0;
    int cout = 0;
    friend bool operator==(const Conv&, const Conv&) = default;
  };
  void layout();
  void conv_forward(const Conv& conv, const Matrix& x, int h, int w, Matrix& out) const;
  void conv_backward(const Conv& conv, const Matrix& x, int h, int w, const Matrix& d_out, Matrix* d_x,
                     std::span<Scalar> d_params) const;

  SrConfig config_;
  AlignedVector<Scalar> params_;
  std::vector<Conv> convs_;  // head, (conv1, conv2) per block, tail
};

using SrBackbone = BasicSrBackbone<float>;

/// Pre-projection SR output for one LR image and a full-resolution code.
ImageBuffer sr_generate(const SrBackbone& backbone, const ImageBuffer& lr, const ImageBuffer& code);

void save_backbone(const SrBackbone& backbone, const std::filesystem::path& path);
SrBackbone load_backbone(const std::filesystem::path& path);

}  // namespace supernerf::ccsr
