#include "polsynth/tree.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

#include "polsynth/error.hpp"

namespace polsynth {

NodePtr make_leaf(std::string action) {
  return std::make_shared<const Node>(Node{std::move(action), std::nullopt, nullptr, nullptr});
}

NodePtr make_decision(std::string predicate, NodePtr on_true, NodePtr on_false,
                      std::optional<Threshold> threshold) {
  return std::make_shared<const Node>(
      Node{std::move(predicate), threshold, std::move(on_true), std::move(on_false)});
}

LexicalTree::LexicalTree(NodePtr root) : root_(std::move(root)) {
  if (!root_) throw std::invalid_argument("tree root must not be null");
}

namespace {

std::size_t depth_of(const Node* node) {
  if (!node) return 0;
  return 1 + std::max(depth_of(node->on_true.get()), depth_of(node->on_false.get()));
}

std::size_t count_nodes(const Node* node, bool leaves_only) {
  if (!node) return 0;
  if (node->is_leaf()) return 1;
  return (leaves_only ? 0 : 1) + count_nodes(node->on_true.get(), leaves_only) +
         count_nodes(node->on_false.get(), leaves_only);
}

bool nodes_equal(const Node* a, const Node* b) {
  if (a == b) return true;
  if (!a || !b) return false;
  return a->token == b->token && a->threshold == b->threshold &&
         nodes_equal(a->on_true.get(), b->on_true.get()) &&
         nodes_equal(a->on_false.get(), b->on_false.get());
}

}  // namespace

std::size_t LexicalTree::depth() const { return depth_of(root_.get()); }
std::size_t LexicalTree::node_count() const { return count_nodes(root_.get(), false); }
std::size_t LexicalTree::leaf_count() const { return count_nodes(root_.get(), true); }

bool operator==(const LexicalTree& a, const LexicalTree& b) {
  return nodes_equal(a.root_.get(), b.root_.get());
}

std::optional<Comparison> resolve_comparison(const Node& node,
                                             const PredicateDictionary& dict) {
  if (node.is_leaf()) return std::nullopt;
  if (const auto* entry = dict.find_decision(node.token)) {
    if (node.threshold) {
      if (node.threshold->direction != entry->direction) return std::nullopt;
      return Comparison{entry->feature, entry->direction, node.threshold->value};
    }
    return Comparison{entry->feature, entry->direction, entry->threshold};
  }
  if (node.threshold) {
    if (auto feature = dict.find_feature(node.token)) {
      return Comparison{*feature, node.threshold->direction, node.threshold->value};
    }
  }
  return std::nullopt;
}

NodePtr make_learned_decision(const PredicateDictionary& dict, std::size_t feature,
                              Direction direction, double value, NodePtr on_true,
                              NodePtr on_false) {
  if (feature >= dict.observation_dim()) {
    throw std::out_of_range("feature index " + std::to_string(feature) + " out of range");
  }
  if (const auto* entry = dict.closest_decision(feature, direction, value)) {
    const double tolerance = 1e-9 * std::max(1.0, std::abs(entry->threshold));
    std::optional<Threshold> annotation;
    if (std::abs(value - entry->threshold) > tolerance) annotation = Threshold{direction, value};
    return make_decision(entry->token, std::move(on_true), std::move(on_false), annotation);
  }
  return make_decision(dict.features()[feature].name, std::move(on_true), std::move(on_false),
                       Threshold{direction, value});
}

// ---- validation -------------------------------------------------------------

namespace {

void validate_node(const Node& node, const PredicateDictionary& dict, std::size_t depth,
                   const std::string& path, ValidationReport& report) {
  auto add = [&](ViolationKind kind, std::string message) {
    report.violations.push_back({kind, path, std::move(message)});
  };
  if (depth > kMaxTreeDepth) {
    add(ViolationKind::depth_exceeded,
        "node at depth " + std::to_string(depth) + " exceeds the maximum of " +
            std::to_string(kMaxTreeDepth));
  }
  const TokenRole role = dict.role(node.token);
  if (node.is_leaf()) {
    if (role == TokenRole::unknown) {
      add(ViolationKind::unknown_token, "unknown action token '" + node.token + "'");
    } else if (role != TokenRole::action) {
      add(ViolationKind::role_mismatch, "leaf holds non-action token '" + node.token + "'");
    }
    if (node.threshold) add(ViolationKind::bad_threshold, "leaf carries a threshold");
    return;
  }

  if (!node.on_true || !node.on_false) {
    add(ViolationKind::missing_branch,
        "decision '" + node.token + "' is missing its " +
            (node.on_true ? "false" : "true") + " branch");
  }
  if (role == TokenRole::decision) {
    if (node.threshold && node.threshold->direction != dict.find_decision(node.token)->direction) {
      add(ViolationKind::bad_threshold,
          "threshold direction disagrees with predicate '" + node.token + "'");
    }
  } else if (node.threshold && dict.find_feature(node.token)) {
    // Learned comparison on a feature no predicate covers.
  } else if (role == TokenRole::unknown) {
    add(ViolationKind::unknown_token, "unknown predicate token '" + node.token + "'");
  } else {
    add(ViolationKind::role_mismatch,
        "decision holds non-predicate token '" + node.token + "'");
  }
  if (node.threshold && !std::isfinite(node.threshold->value)) {
    add(ViolationKind::bad_threshold, "threshold is not finite");
  }
  if (node.on_true) validate_node(*node.on_true, dict, depth + 1, path + "/true", report);
  if (node.on_false) validate_node(*node.on_false, dict, depth + 1, path + "/false", report);
}

}  // namespace

ValidationReport validate(const LexicalTree& tree, const PredicateDictionary& dict) {
  ValidationReport report;
  validate_node(tree.root(), dict, 1, "root", report);
  return report;
}

void require_valid(const LexicalTree& tree, const PredicateDictionary& dict) {
  const auto report = validate(tree, dict);
  if (report.ok()) return;
  std::string message = "invalid tree:";
  for (const auto& v : report.violations) message += "\n  " + v.path + ": " + v.message;
  throw std::invalid_argument(message);
}

// ---- token sequences --------------------------------------------------------

namespace {

void flatten(const Node& node, std::vector<std::string>& out) {
  if (node.is_leaf()) {
    out.push_back(node.token);
    out.emplace_back(kEos);
    return;
  }
  const bool raw_feature = node.threshold &&
                           !PredicateDictionary::taxi().find_decision(node.token) &&
                           !PredicateDictionary::highway().find_decision(node.token);
  out.push_back(raw_feature ? std::string(kUnk) : node.token);
  if (!node.on_true || !node.on_false) {
    throw std::invalid_argument("decision '" + node.token + "' is missing a branch");
  }
  flatten(*node.on_true, out);
  flatten(*node.on_false, out);
}

NodePtr unflatten(std::span<const std::string> tokens, std::size_t& pos,
                  const PredicateDictionary& dict, std::size_t depth) {
  if (pos >= tokens.size()) throw SchemaError("token sequence ends early");
  if (depth > kMaxTreeDepth) throw SchemaError("token sequence exceeds maximum depth");
  const std::string& token = tokens[pos++];
  switch (dict.role(token)) {
    case TokenRole::decision: {
      auto on_true = unflatten(tokens, pos, dict, depth + 1);
      auto on_false = unflatten(tokens, pos, dict, depth + 1);
      return make_decision(token, std::move(on_true), std::move(on_false));
    }
    case TokenRole::action:
      if (pos >= tokens.size() || tokens[pos] != kEos) {
        throw SchemaError("action '" + token + "' is not followed by EOS");
      }
      ++pos;
      return make_leaf(token);
    default:
      throw SchemaError("unexpected token '" + token + "' at position " +
                        std::to_string(pos - 1));
  }
}

}  // namespace

std::vector<std::string> tokenize(const LexicalTree& tree) {
  std::vector<std::string> out;
  flatten(tree.root(), out);
  return out;
}

LexicalTree detokenize(std::span<const std::string> tokens, const PredicateDictionary& dict) {
  std::size_t pos = 0;
  auto root = unflatten(tokens, pos, dict, 1);
  if (pos != tokens.size()) throw SchemaError("trailing tokens after a complete tree");
  return LexicalTree(std::move(root));
}

// ---- comparison -------------------------------------------------------------

std::optional<Domain> infer_domain(const LexicalTree& tree) {
  for (Domain domain : {Domain::taxi, Domain::highway}) {
    const auto& dict = PredicateDictionary::for_domain(domain);
    bool all_known = true;
    std::function<void(const Node&)> visit = [&](const Node& node) {
      if (!all_known) return;
      if (dict.role(node.token) == TokenRole::unknown &&
          !(node.threshold && dict.find_feature(node.token))) {
        all_known = false;
        return;
      }
      if (node.on_true) visit(*node.on_true);
      if (node.on_false) visit(*node.on_false);
    };
    visit(tree.root());
    if (all_known) return domain;
  }
  return std::nullopt;
}

double token_accuracy(std::span<const std::string> predicted,
                      std::span<const std::string> target) {
  const std::size_t longer = std::max(predicted.size(), target.size());
  if (longer == 0) return 1.0;
  const std::size_t shorter = std::min(predicted.size(), target.size());
  std::size_t correct = 0;
  for (std::size_t i = 0; i < shorter; ++i) {
    if (predicted[i] == target[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(longer);
}

TreeComparison compare_trees(const LexicalTree& predicted, const LexicalTree& target) {
  const auto pd = infer_domain(predicted);
  const auto td = infer_domain(target);
  if (!pd || !td || *pd != *td) {
    throw DictionaryMismatch("trees are not expressed over the same predicate dictionary");
  }
  const auto p = tokenize(predicted);
  const auto t = tokenize(target);
  return {predicted == target, token_accuracy(p, t)};
}

// ---- crisp evaluation -------------------------------------------------------

std::size_t select_action(const LexicalTree& tree, const PredicateDictionary& dict,
                          std::span<const double> x) {
  if (x.size() != dict.observation_dim()) {
    throw DimensionMismatch("observation has " + std::to_string(x.size()) +
                            " features, dictionary expects " +
                            std::to_string(dict.observation_dim()));
  }
  const Node* node = &tree.root();
  while (!node->is_leaf()) {
    const auto cmp = resolve_comparison(*node, dict);
    if (!cmp) throw UnknownToken("cannot resolve decision '" + node->token + "'");
    const double value = x[cmp->feature];
    const bool holds =
        cmp->direction == Direction::greater ? value > cmp->threshold : value < cmp->threshold;
    node = holds ? node->on_true.get() : node->on_false.get();
  }
  const auto* action = dict.find_action(node->token);
  if (!action) throw UnknownToken("unknown action '" + node->token + "'");
  return action->action;
}

}  // namespace polsynth
