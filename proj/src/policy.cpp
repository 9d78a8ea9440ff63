#include "polsynth/policy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "polsynth/error.hpp"

namespace polsynth {

// ---- DDT --------------------------------------------------------------------

DdtPolicy::DdtPolicy(DdtParams params) : params_(std::move(params)) { check_params(params_); }

std::vector<double> DdtPolicy::probabilities(std::span<const double> x) const {
  return forward(params_, x);
}

void DdtPolicy::accumulate_gradient(std::span<const double> x, std::span<const double> g,
                                    std::span<double> grad) const {
  const auto flat = pack_gradient(backward(params_, x, g), params_);
  if (flat.size() != grad.size()) throw DimensionMismatch("gradient buffer has the wrong length");
  for (std::size_t i = 0; i < flat.size(); ++i) grad[i] += flat[i];
}

std::vector<double> DdtPolicy::parameters() const { return pack_parameters(params_); }

void DdtPolicy::set_parameters(std::span<const double> theta) {
  unpack_parameters(theta, params_);
  if (params_.alpha_learnable) params_.alpha = std::max(params_.alpha, 1e-6);
}

std::unique_ptr<Policy> DdtPolicy::clone() const { return std::make_unique<DdtPolicy>(*this); }

// ---- MLP --------------------------------------------------------------------

namespace {

Mlp make_policy_net(std::size_t observation_dim, std::size_t action_count, std::uint64_t seed,
                    std::vector<double> input_scale, std::size_t hidden) {
  Rng rng(seed);
  return Mlp({observation_dim, hidden, hidden, action_count}, rng, std::move(input_scale), 0.01);
}

std::vector<double> softmax(const Eigen::VectorXd& logits) {
  const double top = logits.maxCoeff();
  std::vector<double> out(static_cast<std::size_t>(logits.size()));
  double total = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = std::exp(logits[static_cast<Eigen::Index>(i)] - top);
    total += out[i];
  }
  for (double& v : out) v /= total;
  return out;
}

}  // namespace

MlpPolicy::MlpPolicy(std::size_t observation_dim, std::size_t action_count, std::uint64_t seed,
                     std::vector<double> input_scale, std::size_t hidden)
    : net_(make_policy_net(observation_dim, action_count, seed, std::move(input_scale), hidden)) {}

std::vector<double> MlpPolicy::probabilities(std::span<const double> x) const {
  return softmax(net_.forward(x));
}

void MlpPolicy::accumulate_gradient(std::span<const double> x, std::span<const double> g,
                                    std::span<double> grad) const {
  const auto pi = probabilities(x);
  double mean = 0.0;
  for (std::size_t k = 0; k < pi.size(); ++k) mean += g[k] * pi[k];
  std::vector<double> logit_grad(pi.size());
  for (std::size_t k = 0; k < pi.size(); ++k) logit_grad[k] = pi[k] * (g[k] - mean);
  net_.backward(x, logit_grad, grad);
}

std::vector<double> MlpPolicy::parameters() const {
  const auto p = net_.parameters();
  return {p.begin(), p.end()};
}

void MlpPolicy::set_parameters(std::span<const double> theta) { net_.set_parameters(theta); }

std::unique_ptr<Policy> MlpPolicy::clone() const { return std::make_unique<MlpPolicy>(*this); }

// ---- helpers ----------------------------------------------------------------

DdtParams random_ddt(Domain domain, std::size_t leaves, std::uint64_t seed) {
  if (leaves == 0 || (leaves & (leaves - 1)) != 0) {
    throw std::invalid_argument("random DDTs need a power-of-two leaf count");
  }
  std::size_t levels = 0;
  while ((std::size_t{1} << levels) < leaves) ++levels;
  DdtParams params = balanced_ddt(levels, observation_dim(domain), action_count(domain));
  Rng rng(seed);
  std::normal_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> small(0.0, 0.1);
  for (auto& d : params.decisions) {
    for (double& w : d.weights) w = unit(rng);
    d.comparator = unit(rng);
  }
  for (auto& leaf : params.leaves) {
    for (double& z : leaf) z = small(rng);
  }
  return params;
}

std::size_t sample_action(std::span<const double> probs, Rng& rng) {
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  double cumulative = 0.0;
  for (std::size_t a = 0; a < probs.size(); ++a) {
    cumulative += probs[a];
    if (u < cumulative) return a;
  }
  // Rounding can leave the total just below one; fall back to the last
  // action with positive mass.
  for (std::size_t a = probs.size(); a-- > 0;) {
    if (probs[a] > 0) return a;
  }
  return probs.size() - 1;
}

Adam::Adam(double learning_rate, double beta1, double beta2, double epsilon)
    : learning_rate_(learning_rate), beta1_(beta1), beta2_(beta2), epsilon_(epsilon) {}

void Adam::step(std::span<double> params, std::span<const double> grad) {
  if (params.size() != grad.size()) throw DimensionMismatch("Adam: gradient length mismatch");
  if (m_.empty()) {
    m_.assign(params.size(), 0.0);
    v_.assign(params.size(), 0.0);
  }
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
    params[i] -= learning_rate_ * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + epsilon_);
  }
}

}  // namespace polsynth
