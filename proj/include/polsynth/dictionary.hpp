#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace polsynth {

enum class Domain { taxi, highway };
enum class Direction { greater, less };

std::string_view to_string(Domain domain);
std::string_view to_string(Direction direction);
/// Throws std::invalid_argument for unknown names.
Domain parse_domain(std::string_view name);

inline constexpr std::string_view kNonTerminal = "NONTERM";
inline constexpr std::string_view kEos = "EOS";
inline constexpr std::string_view kPad = "PAD";
inline constexpr std::string_view kUnk = "UNK";

struct DecisionEntry {
  std::string token;
  std::size_t feature;
  double threshold;  // feature units
  Direction direction;
};

struct ActionEntry {
  std::string token;
  std::size_t action;
};

/// Named observation slot. `display_scale` converts feature units into the
/// units a person reads (taxi wait time is observed in tens of steps).
struct FeatureInfo {
  std::string name;
  double display_scale = 1.0;
};

enum class TokenRole { decision, action, special, unknown };

/// Per-domain vocabulary of decision predicates and actions.
class PredicateDictionary {
 public:
  PredicateDictionary(Domain domain, std::vector<FeatureInfo> features,
                      std::vector<DecisionEntry> decisions,
                      std::vector<ActionEntry> actions);

  static const PredicateDictionary& taxi();
  static const PredicateDictionary& highway();
  static const PredicateDictionary& for_domain(Domain domain);

  Domain domain() const noexcept { return domain_; }
  std::size_t observation_dim() const noexcept { return features_.size(); }
  std::size_t action_count() const noexcept { return actions_.size(); }

  std::span<const FeatureInfo> features() const noexcept { return features_; }
  std::span<const DecisionEntry> decisions() const noexcept { return decisions_; }
  std::span<const ActionEntry> actions() const noexcept { return actions_; }
  std::span<const std::string> specials() const noexcept { return specials_; }

  TokenRole role(std::string_view token) const;
  const DecisionEntry* find_decision(std::string_view token) const;
  const ActionEntry* find_action(std::string_view token) const;
  const ActionEntry& action_at(std::size_t index) const;
  std::optional<std::size_t> find_feature(std::string_view name) const;

  /// Dictionary predicate on `feature` with `direction` whose threshold is
  /// nearest `threshold` (ties resolve to the earliest entry). nullptr when
  /// the dictionary has no predicate on that feature and direction.
  const DecisionEntry* closest_decision(std::size_t feature, Direction direction,
                                        double threshold) const;

  /// Decision, action and special tokens in dictionary order.
  std::vector<std::string> all_tokens() const;

 private:
  Domain domain_;
  std::vector<FeatureInfo> features_;
  std::vector<DecisionEntry> decisions_;
  std::vector<ActionEntry> actions_;
  std::vector<std::string> specials_;
};

}  // namespace polsynth
