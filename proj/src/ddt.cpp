#include "polsynth/ddt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "polsynth/error.hpp"

namespace polsynth {

namespace {

double sigmoid(double s) {
  if (s >= 0) return 1.0 / (1.0 + std::exp(-s));
  const double e = std::exp(s);
  return e / (1.0 + e);
}

std::vector<double> softmax(std::span<const double> z) {
  std::vector<double> out(z.begin(), z.end());
  const double top = *std::max_element(out.begin(), out.end());
  double total = 0.0;
  for (double& v : out) {
    v = std::exp(v - top);
    total += v;
  }
  for (double& v : out) v /= total;
  return out;
}

std::size_t argmax_abs(std::span<const double> v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (std::abs(v[i]) > std::abs(v[best])) best = i;
  }
  return best;
}

std::size_t argmax(std::span<const double> v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

double dot(std::span<const double> a, std::span<const double> b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

void check_input(const DdtParams& params, std::span<const double> x) {
  if (x.size() != params.observation_dim) {
    throw DimensionMismatch("observation has " + std::to_string(x.size()) +
                            " features, tree expects " + std::to_string(params.observation_dim));
  }
  for (double v : x) {
    if (!std::isfinite(v)) throw std::domain_error("observation contains a non-finite value");
  }
}

double branch_probability(const DdtParams& params, const DecisionParams& d,
                          std::span<const double> x) {
  const double s = dot(d.weights, x) - d.comparator;
  if (std::isinf(params.alpha)) return s > 0 ? 1.0 : 0.0;
  return sigmoid(params.alpha * s);
}

// Builds nodes in pre-order, true branch first.
std::size_t append_balanced(DdtParams& params, std::size_t levels) {
  const std::size_t id = params.nodes.size();
  if (levels == 0) {
    params.nodes.push_back({true, params.leaves.size(), 0, 0});
    params.leaves.emplace_back(params.action_count, 0.0);
    return id;
  }
  params.nodes.push_back({false, params.decisions.size(), 0, 0});
  params.decisions.push_back({std::vector<double>(params.observation_dim, 0.0), 0.0});
  const std::size_t t = append_balanced(params, levels - 1);
  const std::size_t f = append_balanced(params, levels - 1);
  params.nodes[id].on_true = t;
  params.nodes[id].on_false = f;
  return id;
}

}  // namespace

DdtParams balanced_ddt(std::size_t levels, std::size_t observation_dim,
                       std::size_t action_count) {
  DdtParams params;
  params.observation_dim = observation_dim;
  params.action_count = action_count;
  append_balanced(params, levels);
  return params;
}

void check_params(const DdtParams& params) {
  if (params.nodes.empty()) throw std::invalid_argument("DDT has no nodes");
  if (!(params.alpha > 0)) throw std::invalid_argument("alpha must be positive");
  std::size_t decisions = 0;
  std::size_t leaves = 0;
  for (const auto& node : params.nodes) {
    if (node.is_leaf) {
      if (node.index >= params.leaves.size()) throw std::invalid_argument("leaf index out of range");
      ++leaves;
    } else {
      if (node.index >= params.decisions.size() || node.on_true >= params.nodes.size() ||
          node.on_false >= params.nodes.size()) {
        throw std::invalid_argument("decision node refers outside the tree");
      }
      ++decisions;
    }
  }
  if (decisions != params.decisions.size() || leaves != params.leaves.size() ||
      leaves != decisions + 1) {
    throw std::invalid_argument("DDT topology is not a binary tree");
  }
  for (const auto& d : params.decisions) {
    if (d.weights.size() != params.observation_dim) {
      throw std::invalid_argument("decision weight vector has the wrong length");
    }
  }
  for (const auto& leaf : params.leaves) {
    if (leaf.size() != params.action_count) {
      throw std::invalid_argument("leaf vector has the wrong length");
    }
  }
}

// ---- construction from a lexical tree ----------------------------------------

namespace {

std::size_t encode_node(const Node& node, const PredicateDictionary& dict,
                        const InitConfig& config, DdtParams& params) {
  const std::size_t id = params.nodes.size();
  if (node.is_leaf()) {
    const auto* action = dict.find_action(node.token);
    if (!action) throw UnknownToken("unknown action '" + node.token + "'");
    const std::size_t n = dict.action_count();
    const double rest = n > 1 ? (1.0 - config.leaf_concentration) / static_cast<double>(n - 1) : 0.0;
    std::vector<double> leaf(n, rest);
    leaf[action->action] = n > 1 ? config.leaf_concentration : 1.0;
    if (config.leaf_mode == LeafMode::logits) {
      for (double& v : leaf) v = std::log(v);
    }
    params.nodes.push_back({true, params.leaves.size(), 0, 0});
    params.leaves.push_back(std::move(leaf));
    return id;
  }
  const auto cmp = resolve_comparison(node, dict);
  if (!cmp) throw UnknownToken("cannot resolve predicate '" + node.token + "'");
  DecisionParams decision{std::vector<double>(dict.observation_dim(), 0.0), 0.0};
  const double sign = cmp->direction == Direction::greater ? 1.0 : -1.0;
  decision.weights[cmp->feature] = sign;
  decision.comparator = sign * cmp->threshold;

  params.nodes.push_back({false, params.decisions.size(), 0, 0});
  params.decisions.push_back(std::move(decision));
  const std::size_t t = encode_node(*node.on_true, dict, config, params);
  const std::size_t f = encode_node(*node.on_false, dict, config, params);
  params.nodes[id].on_true = t;
  params.nodes[id].on_false = f;
  return id;
}

}  // namespace

DdtParams init_from_lexical(const LexicalTree& tree, const PredicateDictionary& dict,
                            const InitConfig& config) {
  require_valid(tree, dict);
  const double n = static_cast<double>(dict.action_count());
  if (dict.action_count() > 1 &&
      !(config.leaf_concentration > 1.0 / n && config.leaf_concentration < 1.0)) {
    throw std::invalid_argument("leaf concentration must lie strictly between 1/|A| and 1");
  }
  if (!(config.alpha > 0)) throw std::invalid_argument("alpha must be positive");
  DdtParams params;
  params.observation_dim = dict.observation_dim();
  params.action_count = dict.action_count();
  params.alpha = config.alpha;
  params.alpha_learnable = config.alpha_learnable;
  params.leaf_mode = config.leaf_mode;
  encode_node(tree.root(), dict, config, params);
  return params;
}

// ---- forward ----------------------------------------------------------------

std::vector<double> leaf_distribution(const DdtParams& params, std::size_t leaf) {
  const auto& values = params.leaves.at(leaf);
  if (params.leaf_mode == LeafMode::logits) return softmax(values);
  return values;
}

std::vector<double> decision_probabilities(const DdtParams& params, std::span<const double> x) {
  check_input(params, x);
  std::vector<double> out;
  out.reserve(params.decisions.size());
  for (const auto& d : params.decisions) out.push_back(branch_probability(params, d, x));
  return out;
}

std::vector<double> leaf_weights(const DdtParams& params, std::span<const double> x) {
  const auto probs = decision_probabilities(params, x);
  std::vector<double> weights(params.leaves.size(), 0.0);
  std::vector<std::pair<std::size_t, double>> stack{{0, 1.0}};
  while (!stack.empty()) {
    const auto [id, w] = stack.back();
    stack.pop_back();
    const auto& node = params.nodes[id];
    if (node.is_leaf) {
      weights[node.index] = w;
      continue;
    }
    const double d = probs[node.index];
    stack.push_back({node.on_false, w * (1.0 - d)});
    stack.push_back({node.on_true, w * d});
  }
  return weights;
}

ActionDistribution forward(const DdtParams& params, std::span<const double> x) {
  const auto weights = leaf_weights(params, x);
  ActionDistribution out(params.action_count, 0.0);
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] == 0.0) continue;
    const auto dist = leaf_distribution(params, i);
    for (std::size_t a = 0; a < out.size(); ++a) out[a] += weights[i] * dist[a];
  }
  return out;
}

// ---- gradients --------------------------------------------------------------

namespace {

struct Backprop {
  const DdtParams& params;
  std::span<const double> x;
  std::span<const double> g;
  std::vector<double> probs;
  DdtGradient grad;

  // Returns the subtree value sum over leaves of (relative path weight) * g.q
  // and accumulates gradients scaled by `prefix`, the path weight into `id`.
  double visit(std::size_t id, double prefix) {
    const auto& node = params.nodes[id];
    if (node.is_leaf) {
      const auto q = leaf_distribution(params, node.index);
      const double value = dot(g, q);
      auto& out = grad.leaves[node.index];
      for (std::size_t k = 0; k < q.size(); ++k) {
        out[k] += params.leaf_mode == LeafMode::logits ? prefix * q[k] * (g[k] - value)
                                                       : prefix * g[k];
      }
      return value;
    }
    const auto& decision = params.decisions[node.index];
    const double d = probs[node.index];
    const double v_true = visit(node.on_true, prefix * d);
    const double v_false = visit(node.on_false, prefix * (1.0 - d));
    const double dv_dd = prefix * (v_true - v_false);

    if (!std::isinf(params.alpha)) {
      const double slope = d * (1.0 - d);
      const double dv_ds = dv_dd * slope * params.alpha;
      auto& w = grad.weights[node.index];
      for (std::size_t j = 0; j < x.size(); ++j) {
        w[j] += dv_ds * x[j];
        grad.input[j] += dv_ds * decision.weights[j];
      }
      grad.comparators[node.index] -= dv_ds;
      if (params.alpha_learnable) {
        grad.alpha += dv_dd * slope * (dot(decision.weights, x) - decision.comparator);
      }
    }
    return d * v_true + (1.0 - d) * v_false;
  }
};

}  // namespace

DdtGradient backward(const DdtParams& params, std::span<const double> x,
                     std::span<const double> output_grad) {
  if (output_grad.size() != params.action_count) {
    throw DimensionMismatch("output gradient length does not match the action count");
  }
  Backprop bp{params, x, output_grad, decision_probabilities(params, x), {}};
  bp.grad.weights.assign(params.decisions.size(), std::vector<double>(params.observation_dim, 0.0));
  bp.grad.comparators.assign(params.decisions.size(), 0.0);
  bp.grad.leaves.assign(params.leaves.size(), std::vector<double>(params.action_count, 0.0));
  bp.grad.input.assign(params.observation_dim, 0.0);
  bp.visit(0, 1.0);
  return std::move(bp.grad);
}

LogProbResult log_prob_and_grads(const DdtParams& params, std::span<const double> x,
                                 std::size_t action) {
  if (action >= params.action_count) throw std::out_of_range("action index out of range");
  const auto pi = forward(params, x);
  if (!(pi[action] > 0.0)) {
    throw std::domain_error("action " + std::to_string(action) +
                            " has zero probability; a leaf is degenerate");
  }
  std::vector<double> g(params.action_count, 0.0);
  g[action] = 1.0 / pi[action];
  return {std::log(pi[action]), backward(params, x, g)};
}

// ---- discretization ----------------------------------------------------------

namespace {

NodePtr crisp_node(const DdtParams& soft, DdtParams& hard, std::size_t id,
                   const PredicateDictionary& dict) {
  const auto& node = soft.nodes[id];
  if (node.is_leaf) {
    const std::size_t best = argmax(soft.leaves[node.index]);
    auto& leaf = hard.leaves[node.index];
    std::fill(leaf.begin(), leaf.end(), 0.0);
    leaf[best] = 1.0;
    return make_leaf(dict.action_at(best).token);
  }
  const auto& decision = soft.decisions[node.index];
  const std::size_t j = argmax_abs(decision.weights);
  const double w = decision.weights[j];
  const double magnitude = std::abs(w);

  auto& out = hard.decisions[node.index];
  std::fill(out.weights.begin(), out.weights.end(), 0.0);
  out.weights[j] = w < 0 ? -1.0 : 1.0;
  double threshold = 0.0;
  if (magnitude > 0) {
    out.comparator = decision.comparator / magnitude;
    threshold = decision.comparator / w;
  } else {
    // Constant decision: true iff the comparator is negative.
    out.weights[j] = 1.0;
    out.comparator = decision.comparator < 0 ? -std::numeric_limits<double>::infinity()
                                             : std::numeric_limits<double>::infinity();
    threshold = out.comparator;
  }
  const Direction direction = w < 0 ? Direction::less : Direction::greater;
  auto t = crisp_node(soft, hard, node.on_true, dict);
  auto f = crisp_node(soft, hard, node.on_false, dict);
  return make_learned_decision(dict, j, direction, threshold, std::move(t), std::move(f));
}

}  // namespace

Discretized discretize(const DdtParams& params, const PredicateDictionary& dict) {
  check_params(params);
  if (params.observation_dim != dict.observation_dim() ||
      params.action_count != dict.action_count()) {
    throw DictionaryMismatch("DDT shape does not match the " +
                             std::string(to_string(dict.domain())) + " dictionary");
  }
  DdtParams hard = params;
  hard.alpha = std::numeric_limits<double>::infinity();
  hard.alpha_learnable = false;
  hard.leaf_mode = LeafMode::probabilities;
  auto root = crisp_node(params, hard, 0, dict);
  return {std::move(hard), LexicalTree(std::move(root))};
}

// ---- flat parameter packing -------------------------------------------------

std::size_t parameter_count(const DdtParams& params) {
  return params.decisions.size() * (params.observation_dim + 1) +
         params.leaves.size() * params.action_count + (params.alpha_learnable ? 1 : 0);
}

std::vector<double> pack_parameters(const DdtParams& params) {
  std::vector<double> flat;
  flat.reserve(parameter_count(params));
  for (const auto& d : params.decisions) {
    flat.insert(flat.end(), d.weights.begin(), d.weights.end());
    flat.push_back(d.comparator);
  }
  for (const auto& leaf : params.leaves) flat.insert(flat.end(), leaf.begin(), leaf.end());
  if (params.alpha_learnable) flat.push_back(params.alpha);
  return flat;
}

void unpack_parameters(std::span<const double> flat, DdtParams& params) {
  if (flat.size() != parameter_count(params)) {
    throw DimensionMismatch("flat parameter vector has the wrong length");
  }
  auto it = flat.begin();
  for (auto& d : params.decisions) {
    std::copy_n(it, d.weights.size(), d.weights.begin());
    it += static_cast<std::ptrdiff_t>(d.weights.size());
    d.comparator = *it++;
  }
  for (auto& leaf : params.leaves) {
    std::copy_n(it, leaf.size(), leaf.begin());
    it += static_cast<std::ptrdiff_t>(leaf.size());
  }
  if (params.alpha_learnable) params.alpha = *it;
}

std::vector<double> pack_gradient(const DdtGradient& grad, const DdtParams& params) {
  std::vector<double> flat;
  flat.reserve(parameter_count(params));
  for (std::size_t i = 0; i < grad.weights.size(); ++i) {
    flat.insert(flat.end(), grad.weights[i].begin(), grad.weights[i].end());
    flat.push_back(grad.comparators[i]);
  }
  for (const auto& leaf : grad.leaves) flat.insert(flat.end(), leaf.begin(), leaf.end());
  if (params.alpha_learnable) flat.push_back(grad.alpha);
  return flat;
}

// ---- JSON -------------------------------------------------------------------

namespace {

using nlohmann::json;

json node_json(const DdtParams& params, std::size_t id) {
  const auto& node = params.nodes[id];
  if (node.is_leaf) return json{{"leaf", params.leaves[node.index]}};
  const auto& d = params.decisions[node.index];
  return json{{"weights", d.weights},
              {"comparator", d.comparator},
              {"true", node_json(params, node.on_true)},
              {"false", node_json(params, node.on_false)}};
}

std::size_t node_from(const json& doc, DdtParams& params) {
  if (!doc.is_object()) throw SchemaError("DDT node must be an object");
  const std::size_t id = params.nodes.size();
  if (doc.contains("leaf")) {
    params.nodes.push_back({true, params.leaves.size(), 0, 0});
    params.leaves.push_back(doc.at("leaf").get<std::vector<double>>());
    return id;
  }
  if (!doc.contains("weights") || !doc.contains("comparator") || !doc.contains("true") ||
      !doc.contains("false")) {
    throw SchemaError("DDT decision node needs weights, comparator, true and false");
  }
  params.nodes.push_back({false, params.decisions.size(), 0, 0});
  params.decisions.push_back(
      {doc.at("weights").get<std::vector<double>>(), doc.at("comparator").get<double>()});
  const std::size_t t = node_from(doc.at("true"), params);
  const std::size_t f = node_from(doc.at("false"), params);
  params.nodes[id].on_true = t;
  params.nodes[id].on_false = f;
  return id;
}

}  // namespace

nlohmann::json ddt_to_json(const DdtParams& params) {
  json doc{{"v", 1},
           {"observation_dim", params.observation_dim},
           {"action_count", params.action_count},
           {"alpha_learnable", params.alpha_learnable},
           {"leaf_mode", params.leaf_mode == LeafMode::logits ? "logits" : "probabilities"},
           {"root", node_json(params, 0)}};
  if (std::isinf(params.alpha)) {
    doc["alpha"] = "inf";
  } else {
    doc["alpha"] = params.alpha;
  }
  return doc;
}

DdtParams ddt_from_json(const nlohmann::json& doc) {
  try {
    if (doc.at("v").get<int>() != 1) throw SchemaError("unsupported DDT schema version");
    DdtParams params;
    params.observation_dim = doc.at("observation_dim").get<std::size_t>();
    params.action_count = doc.at("action_count").get<std::size_t>();
    params.alpha_learnable = doc.at("alpha_learnable").get<bool>();
    const auto mode = doc.at("leaf_mode").get<std::string>();
    if (mode != "logits" && mode != "probabilities") throw SchemaError("unknown leaf_mode");
    params.leaf_mode = mode == "logits" ? LeafMode::logits : LeafMode::probabilities;
    const auto& alpha = doc.at("alpha");
    params.alpha = alpha.is_string() && alpha.get<std::string>() == "inf"
                       ? std::numeric_limits<double>::infinity()
                       : alpha.get<double>();
    node_from(doc.at("root"), params);
    check_params(params);
    return params;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("malformed DDT document: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw SchemaError(std::string("inconsistent DDT document: ") + e.what());
  }
}

}  // namespace polsynth
