#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "polsynth/ddt.hpp"
#include "polsynth/env.hpp"
#include "polsynth/mlp.hpp"

namespace polsynth {

/// Stochastic policy over a discrete action set with a flat parameter vector.
class Policy {
 public:
  virtual ~Policy() = default;

  virtual std::size_t observation_dim() const = 0;
  virtual std::size_t action_count() const = 0;
  virtual std::vector<double> probabilities(std::span<const double> x) const = 0;

  /// Adds d(sum_a g[a] * pi(a|x))/d(theta) into `grad`.
  virtual void accumulate_gradient(std::span<const double> x, std::span<const double> g,
                                   std::span<double> grad) const = 0;

  virtual std::vector<double> parameters() const = 0;
  virtual void set_parameters(std::span<const double> theta) = 0;
  virtual std::unique_ptr<Policy> clone() const = 0;
  virtual std::string kind() const = 0;
};

class DdtPolicy final : public Policy {
 public:
  explicit DdtPolicy(DdtParams params);

  const DdtParams& params() const noexcept { return params_; }

  std::size_t observation_dim() const override { return params_.observation_dim; }
  std::size_t action_count() const override { return params_.action_count; }
  std::vector<double> probabilities(std::span<const double> x) const override;
  void accumulate_gradient(std::span<const double> x, std::span<const double> g,
                           std::span<double> grad) const override;
  std::vector<double> parameters() const override;
  void set_parameters(std::span<const double> theta) override;
  std::unique_ptr<Policy> clone() const override;
  std::string kind() const override { return "ddt"; }

 private:
  DdtParams params_;
};

/// Three fully connected layers with a softmax over actions.
class MlpPolicy final : public Policy {
 public:
  MlpPolicy(std::size_t observation_dim, std::size_t action_count, std::uint64_t seed,
            std::vector<double> input_scale = {}, std::size_t hidden = 64);

  std::size_t observation_dim() const override { return net_.input_dim(); }
  std::size_t action_count() const override { return net_.output_dim(); }
  std::vector<double> probabilities(std::span<const double> x) const override;
  void accumulate_gradient(std::span<const double> x, std::span<const double> g,
                           std::span<double> grad) const override;
  std::vector<double> parameters() const override;
  void set_parameters(std::span<const double> theta) override;
  std::unique_ptr<Policy> clone() const override;
  std::string kind() const override { return "mlp"; }

 private:
  Mlp net_;
};

/// Balanced DDT with `leaves` leaves (a power of two). Weights and
/// comparators are drawn from N(0, 1), leaf logits from N(0, 0.1).
DdtParams random_ddt(Domain domain, std::size_t leaves, std::uint64_t seed);

/// Inverse-CDF draw from `probs` using one uniform variate.
std::size_t sample_action(std::span<const double> probs, Rng& rng);

class Adam {
 public:
  explicit Adam(double learning_rate, double beta1 = 0.9, double beta2 = 0.999,
                double epsilon = 1e-8);

  /// Gradient-descent step on `params`.
  void step(std::span<double> params, std::span<const double> grad);

  double learning_rate() const noexcept { return learning_rate_; }

 private:
  double learning_rate_;
  double beta1_;
  double beta2_;
  double epsilon_;
  std::vector<double> m_;
  std::vector<double> v_;
  std::size_t t_ = 0;
};

}  // namespace polsynth
