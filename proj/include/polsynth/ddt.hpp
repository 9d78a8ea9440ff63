#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "json.hpp"
#include "polsynth/dictionary.hpp"
#include "polsynth/tree.hpp"

namespace polsynth {

/// How leaf vectors are read. `logits` passes them through a softmax;
/// `probabilities` uses them as the action distribution directly.
enum class LeafMode { logits, probabilities };

struct DdtNode {
  bool is_leaf;
  std::size_t index;     // into DdtParams::decisions or DdtParams::leaves
  std::size_t on_true;   // node indices, unused for leaves
  std::size_t on_false;

  friend bool operator==(const DdtNode&, const DdtNode&) = default;
};

struct DecisionParams {
  std::vector<double> weights;
  double comparator = 0.0;

  friend bool operator==(const DecisionParams&, const DecisionParams&) = default;
};

/// Differentiable decision tree. Decision n is taken with probability
/// sigmoid(alpha * (weights_n . x - comparator_n)); a leaf's weight is the
/// product of its path's branch probabilities and the policy is the
/// leaf-weighted sum of leaf distributions. Decisions and leaves are stored
/// in pre-order, true branch first. An infinite alpha gives hard decisions.
struct DdtParams {
  std::size_t observation_dim = 0;
  std::size_t action_count = 0;
  std::vector<DdtNode> nodes;  // nodes[0] is the root
  std::vector<DecisionParams> decisions;
  std::vector<std::vector<double>> leaves;
  double alpha = 1.0;
  bool alpha_learnable = false;
  LeafMode leaf_mode = LeafMode::logits;

  friend bool operator==(const DdtParams&, const DdtParams&) = default;
};

using ActionDistribution = std::vector<double>;

/// Complete tree with `levels` decision levels (2^levels leaves), all
/// parameters zero.
DdtParams balanced_ddt(std::size_t levels, std::size_t observation_dim,
                       std::size_t action_count);

/// Throws std::invalid_argument when shapes are inconsistent.
void check_params(const DdtParams& params);

struct InitConfig {
  double leaf_concentration = 0.9;  // mass on the specified action
  double alpha = 1.0;
  bool alpha_learnable = false;
  LeafMode leaf_mode = LeafMode::logits;
};

/// Encodes a lexical tree as a DDT with the same topology. A "greater"
/// predicate on feature j with threshold t becomes weights e_j, comparator t;
/// "less" becomes -e_j, -t.
DdtParams init_from_lexical(const LexicalTree& tree, const PredicateDictionary& dict,
                            const InitConfig& config = {});

std::vector<double> leaf_distribution(const DdtParams& params, std::size_t leaf);
/// Probability of the true branch at every decision.
std::vector<double> decision_probabilities(const DdtParams& params, std::span<const double> x);
std::vector<double> leaf_weights(const DdtParams& params, std::span<const double> x);
ActionDistribution forward(const DdtParams& params, std::span<const double> x);

struct DdtGradient {
  std::vector<std::vector<double>> weights;
  std::vector<double> comparators;
  std::vector<std::vector<double>> leaves;
  double alpha = 0.0;  // stays zero unless alpha is learnable
  std::vector<double> input;
};

/// Gradient of sum_a output_grad[a] * pi(a|x) with respect to every
/// parameter and the input.
DdtGradient backward(const DdtParams& params, std::span<const double> x,
                     std::span<const double> output_grad);

struct LogProbResult {
  double log_prob;
  DdtGradient grad;
};

/// Throws std::domain_error when pi(action|x) is zero.
LogProbResult log_prob_and_grads(const DdtParams& params, std::span<const double> x,
                                 std::size_t action);

struct Discretized {
  DdtParams hard;
  LexicalTree tree;
};

/// Crisp version of a DDT: each decision keeps its largest-magnitude weight
/// (as a signed one-hot, comparator rescaled by that weight's magnitude),
/// each leaf becomes one-hot at its best action and alpha becomes infinite.
/// The lexical tree names each decision by its dictionary predicate,
/// annotated with the learned threshold where it differs.
Discretized discretize(const DdtParams& params, const PredicateDictionary& dict);

// Flat parameter layout for optimizers: per decision its weights then its
// comparator, then every leaf vector, then alpha when learnable.
std::size_t parameter_count(const DdtParams& params);
std::vector<double> pack_parameters(const DdtParams& params);
void unpack_parameters(std::span<const double> flat, DdtParams& params);
std::vector<double> pack_gradient(const DdtGradient& grad, const DdtParams& params);

nlohmann::json ddt_to_json(const DdtParams& params);
DdtParams ddt_from_json(const nlohmann::json& doc);

}  // namespace polsynth
