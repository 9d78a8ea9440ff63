#include "polsynth/mlp.hpp"

#include <cmath>
#include <stdexcept>

#include "polsynth/error.hpp"

namespace polsynth {

namespace {

using ConstMatrixMap = Eigen::Map<const Eigen::MatrixXd>;
using MatrixMap = Eigen::Map<Eigen::MatrixXd>;

}  // namespace

Mlp::Mlp(std::vector<std::size_t> layer_sizes, Rng& rng, std::vector<double> input_scale,
         double output_gain)
    : sizes_(std::move(layer_sizes)) {
  if (sizes_.size() < 2) throw std::invalid_argument("an MLP needs at least two layer sizes");
  std::size_t total = 0;
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    offsets_.push_back(total);
    total += sizes_[l + 1] * sizes_[l] + sizes_[l + 1];
  }
  params_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(total));
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(sizes_[l]));
    const double gain = l + 2 == sizes_.size() ? output_gain : 1.0;
    std::uniform_real_distribution<double> init(-bound, bound);
    const std::size_t count = sizes_[l + 1] * sizes_[l];
    for (std::size_t i = 0; i < count; ++i) {
      params_[static_cast<Eigen::Index>(offsets_[l] + i)] = gain * init(rng);
    }
  }
  if (input_scale.empty()) input_scale.assign(sizes_.front(), 1.0);
  if (input_scale.size() != sizes_.front()) {
    throw DimensionMismatch("input scale length does not match the input width");
  }
  inv_scale_.resize(static_cast<Eigen::Index>(input_scale.size()));
  for (std::size_t i = 0; i < input_scale.size(); ++i) {
    inv_scale_[static_cast<Eigen::Index>(i)] = 1.0 / input_scale[i];
  }
}

Eigen::VectorXd Mlp::scaled_input(std::span<const double> x) const {
  if (x.size() != input_dim()) {
    throw DimensionMismatch("MLP input has " + std::to_string(x.size()) + " features, expected " +
                            std::to_string(input_dim()));
  }
  Eigen::Map<const Eigen::VectorXd> raw(x.data(), static_cast<Eigen::Index>(x.size()));
  return raw.cwiseProduct(inv_scale_);
}

Eigen::VectorXd Mlp::forward(std::span<const double> x) const {
  Eigen::VectorXd a = scaled_input(x);
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    const auto rows = static_cast<Eigen::Index>(sizes_[l + 1]);
    const auto cols = static_cast<Eigen::Index>(sizes_[l]);
    ConstMatrixMap w(params_.data() + offsets_[l], rows, cols);
    Eigen::Map<const Eigen::VectorXd> b(params_.data() + offsets_[l] + rows * cols, rows);
    Eigen::VectorXd z = w * a + b;
    a = l + 2 == sizes_.size() ? z : Eigen::VectorXd(z.array().tanh());
  }
  return a;
}

void Mlp::backward(std::span<const double> x, std::span<const double> output_grad,
                   std::span<double> grad) const {
  if (output_grad.size() != output_dim()) {
    throw DimensionMismatch("MLP output gradient has the wrong length");
  }
  if (grad.size() != parameter_count()) {
    throw DimensionMismatch("MLP gradient buffer has the wrong length");
  }
  std::vector<Eigen::VectorXd> activations{scaled_input(x)};
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    const auto rows = static_cast<Eigen::Index>(sizes_[l + 1]);
    const auto cols = static_cast<Eigen::Index>(sizes_[l]);
    ConstMatrixMap w(params_.data() + offsets_[l], rows, cols);
    Eigen::Map<const Eigen::VectorXd> b(params_.data() + offsets_[l] + rows * cols, rows);
    Eigen::VectorXd z = w * activations.back() + b;
    activations.push_back(l + 2 == sizes_.size() ? z : Eigen::VectorXd(z.array().tanh()));
  }

  Eigen::VectorXd delta =
      Eigen::Map<const Eigen::VectorXd>(output_grad.data(), static_cast<Eigen::Index>(output_grad.size()));
  for (std::size_t l = sizes_.size() - 1; l-- > 0;) {
    const auto rows = static_cast<Eigen::Index>(sizes_[l + 1]);
    const auto cols = static_cast<Eigen::Index>(sizes_[l]);
    MatrixMap gw(grad.data() + offsets_[l], rows, cols);
    Eigen::Map<Eigen::VectorXd> gb(grad.data() + offsets_[l] + rows * cols, rows);
    gw.noalias() += delta * activations[l].transpose();
    gb += delta;
    if (l == 0) break;
    ConstMatrixMap w(params_.data() + offsets_[l], rows, cols);
    const Eigen::VectorXd& a = activations[l];
    delta = (w.transpose() * delta).cwiseProduct((1.0 - a.array().square()).matrix());
  }
}

void Mlp::set_parameters(std::span<const double> theta) {
  if (theta.size() != parameter_count()) {
    throw DimensionMismatch("MLP parameter vector has the wrong length");
  }
  params_ = Eigen::Map<const Eigen::VectorXd>(theta.data(), static_cast<Eigen::Index>(theta.size()));
}

}  // namespace polsynth
