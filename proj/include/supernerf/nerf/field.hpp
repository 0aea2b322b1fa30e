#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "supernerf/core/aligned.hpp"
#include "supernerf/core/container.hpp"

namespace supernerf::nerf {

enum class FieldRole { LR, HR };

const char* to_string(FieldRole role);

/// Architecture of a radiance field MLP.
///
/// Points are scaled by `position_scale`, encoded with `n_frequencies`
/// octaves and fed through `n_layers` ReLU layers of `hidden_width` units.
/// Density is softplus(linear(h)); color is sigmoid(linear([h, view_dir])).
struct FieldConfig {
  int n_frequencies = 6;
  int hidden_width = 64;
  int n_layers = 4;
  int n_samples_per_ray = 64;
  FieldRole role = FieldRole::LR;
  double position_scale = 0.5;

  void validate() const;

  /// Shipped defaults. The HR field has more octaves and about 4x the parameters.
  static FieldConfig lr_default();
  static FieldConfig hr_default();

  friend bool operator==(const FieldConfig&, const FieldConfig&) = default;
};

/// Number of learnable parameters for a configuration.
std::size_t parameter_count(const FieldConfig& cfg);

/// Radiance field with a flat parameter vector. Scalar is float for
/// training and double for derivative checks.
template <typename Scalar>
class BasicRadianceField {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using RowArray = Eigen::Array<Scalar, 1, Eigen::Dynamic>;

  /// Activations kept by forward() for backward().
  struct Tape {
    Matrix input;                // encoded points, in_dim x N
    std::vector<Matrix> hidden;  // post-ReLU activations, one per layer
    Matrix dirs;                 // 3 x N
    RowArray density_logit;      // 1 x N
    Matrix color;                // 3 x N, post-sigmoid
  };

  BasicRadianceField() = default;
  BasicRadianceField(FieldConfig cfg, std::uint64_t seed);

  [[nodiscard]] const FieldConfig& config() const { return config_; }
  [[nodiscard]] std::span<Scalar> parameters() { return params_; }
  [[nodiscard]] std::span<const Scalar> parameters() const { return params_; }
  [[nodiscard]] std::size_t parameter_count() const { return params_.size(); }
  [[nodiscard]] int input_dim() const { return 3 + 6 * config_.n_frequencies; }

  /// Throws NumericalError when a parameter is NaN or infinite.
  void check_finite() const;

  /// points and dirs are N x 3 (world units, unit directions).
  void forward(const Eigen::Ref<const Eigen::MatrixX3d>& points, const Eigen::Ref<const Eigen::MatrixX3d>& dirs,
               RowArray& density, Matrix& color, Tape* tape) const;

  /// Accumulates d(loss)/d(params) into grad given d(loss)/d(density) (1 x N)
  /// and d(loss)/d(color) (3 x N).
  void backward(const Tape& tape, const RowArray& d_density, const Matrix& d_color, std::span<Scalar> grad) const;

  /// Offset and size of the density head bias (used to build empty fields in tests).
  [[nodiscard]] std::size_t density_bias_offset() const { return density_b_; }

  template <typename Other>
  [[nodiscard]] BasicRadianceField<Other> cast() const {
    BasicRadianceField<Other> out;
    out.assign(config_, std::vector<Other>(params_.begin(), params_.end()));
    return out;
  }

  /// Replaces config and parameters; throws ShapeError on a size mismatch.
  void assign(FieldConfig cfg, std::vector<Scalar> params);

  void save(Container& c, const std::string& prefix) const;
  static BasicRadianceField load(const Container& c, const std::string& prefix);

  friend bool operator==(const BasicRadianceField&, const BasicRadianceField&) = default;

 private:
  void layout();

  FieldConfig config_;
  AlignedVector<Scalar> params_;
  // Offsets into params_. Weights are column-major (out x in).
  std::vector<std::size_t> w_, b_;
  std::size_t density_w_ = 0, density_b_ = 0, color_w_ = 0, color_b_ = 0;
};

using RadianceField = BasicRadianceField<float>;

/// Densities (N) and colors (N x 3) at the given points. Throws NumericalError
/// if the field holds non-finite parameters.
std::pair<Eigen::VectorXd, Eigen::MatrixX3d> query_field(const RadianceField& field,
                                                         const Eigen::Ref<const Eigen::MatrixX3d>& points,
                                                         const Eigen::Ref<const Eigen::MatrixX3d>& view_dirs);

void save_field(const RadianceField& field, const std::filesystem::path& path);
RadianceField load_field(const std::filesystem::path& path);

}  // namespace supernerf::nerf
