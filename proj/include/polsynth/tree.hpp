#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "polsynth/dictionary.hpp"

namespace polsynth {

/// Learned comparison attached to a decision after discretization. The value
/// is in feature units and replaces the dictionary threshold.
struct Threshold {
  Direction direction;
  double value;

  friend bool operator==(const Threshold&, const Threshold&) = default;
};

struct Node;
using NodePtr = std::shared_ptr<const Node>;

/// Immutable tree node. A leaf has no children and carries an action token.
/// A decision carries a predicate token, or a feature name when `threshold`
/// is set and no dictionary predicate covers the learned comparison.
struct Node {
  std::string token;
  std::optional<Threshold> threshold;
  NodePtr on_true;
  NodePtr on_false;

  bool is_leaf() const noexcept { return !on_true && !on_false; }
};

NodePtr make_leaf(std::string action);
NodePtr make_decision(std::string predicate, NodePtr on_true, NodePtr on_false,
                      std::optional<Threshold> threshold = std::nullopt);

/// Binary decision tree over dictionary tokens.
class LexicalTree {
 public:
  explicit LexicalTree(NodePtr root);

  const Node& root() const noexcept { return *root_; }
  const NodePtr& root_ptr() const noexcept { return root_; }

  /// Root counts as depth 1.
  std::size_t depth() const;
  std::size_t node_count() const;
  std::size_t leaf_count() const;

  friend bool operator==(const LexicalTree& a, const LexicalTree& b);

 private:
  NodePtr root_;
};

inline constexpr std::size_t kMaxTreeDepth = 4;

/// The comparison a decision node performs, resolved through the dictionary.
struct Comparison {
  std::size_t feature;
  Direction direction;
  double threshold;
};

/// nullopt for leaves and for decisions that do not resolve.
std::optional<Comparison> resolve_comparison(const Node& node,
                                             const PredicateDictionary& dict);

/// Decision node for a learned comparison. Uses the dictionary predicate on
/// the same feature and direction with the nearest threshold; the learned
/// value is kept as an annotation unless it equals that predicate's
/// threshold. Falls back to the feature name when no predicate applies.
NodePtr make_learned_decision(const PredicateDictionary& dict, std::size_t feature,
                              Direction direction, double value, NodePtr on_true,
                              NodePtr on_false);

// ---- validation -------------------------------------------------------------

enum class ViolationKind {
  depth_exceeded,
  missing_branch,
  unknown_token,
  role_mismatch,
  bad_threshold,
};

struct Violation {
  ViolationKind kind;
  std::string path;  // e.g. "root/true/false"
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool ok() const noexcept { return violations.empty(); }
};

ValidationReport validate(const LexicalTree& tree, const PredicateDictionary& dict);

/// Throws std::invalid_argument listing every violation.
void require_valid(const LexicalTree& tree, const PredicateDictionary& dict);

// ---- token sequences --------------------------------------------------------

/// Pre-order flattening: decision -> predicate, true part, false part;
/// leaf -> action, EOS. Annotated decisions emit their predicate token and
/// lose the learned value; feature-name decisions emit UNK.
std::vector<std::string> tokenize(const LexicalTree& tree);

/// Inverse of tokenize. Throws SchemaError on malformed sequences.
LexicalTree detokenize(std::span<const std::string> tokens, const PredicateDictionary& dict);

// ---- comparison -------------------------------------------------------------

struct TreeComparison {
  bool exact_match;
  double token_accuracy;
};

/// Domain of the first dictionary in which every token of the tree resolves.
std::optional<Domain> infer_domain(const LexicalTree& tree);

/// Throws DictionaryMismatch when the trees do not share a domain.
TreeComparison compare_trees(const LexicalTree& predicted, const LexicalTree& target);

/// Token accuracy of two flattened trees: matching positions over the
/// longer length.
double token_accuracy(std::span<const std::string> predicted,
                      std::span<const std::string> target);

// ---- crisp evaluation -------------------------------------------------------

/// Action index the discrete tree selects for observation `x`.
std::size_t select_action(const LexicalTree& tree, const PredicateDictionary& dict,
                          std::span<const double> x);

}  // namespace polsynth
