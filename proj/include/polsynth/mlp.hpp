#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "polsynth/env.hpp"

namespace polsynth {

/// Fully connected network with tanh hidden layers and a linear output.
/// Inputs are divided element-wise by `input_scale` before the first layer.
class Mlp {
 public:
  /// `layer_sizes` lists input, hidden..., output widths. Weights start
  /// uniform in +-1/sqrt(fan_in); the output layer is further multiplied by
  /// `output_gain`.
  Mlp(std::vector<std::size_t> layer_sizes, Rng& rng, std::vector<double> input_scale = {},
      double output_gain = 1.0);

  std::size_t input_dim() const noexcept { return sizes_.front(); }
  std::size_t output_dim() const noexcept { return sizes_.back(); }
  std::size_t parameter_count() const noexcept { return static_cast<std::size_t>(params_.size()); }

  Eigen::VectorXd forward(std::span<const double> x) const;

  /// Adds d(output_grad . f(x))/d(theta) into `grad`.
  void backward(std::span<const double> x, std::span<const double> output_grad,
                std::span<double> grad) const;

  std::span<const double> parameters() const noexcept {
    return {params_.data(), static_cast<std::size_t>(params_.size())};
  }
  void set_parameters(std::span<const double> theta);

 private:
  Eigen::VectorXd scaled_input(std::span<const double> x) const;

  std::vector<std::size_t> sizes_;
  std::vector<std::size_t> offsets_;  // start of each layer's weights; biases follow
  Eigen::VectorXd params_;
  Eigen::VectorXd inv_scale_;
};

}  // namespace polsynth
