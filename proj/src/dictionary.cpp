#include "polsynth/dictionary.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace polsynth {

std::string_view to_string(Domain domain) {
  return domain == Domain::taxi ? "taxi" : "highway";
}

std::string_view to_string(Direction direction) {
  return direction == Direction::greater ? ">" : "<";
}

Domain parse_domain(std::string_view name) {
  if (name == "taxi") return Domain::taxi;
  if (name == "highway") return Domain::highway;
  throw std::invalid_argument("unknown domain '" + std::string(name) + "'");
}

PredicateDictionary::PredicateDictionary(Domain domain, std::vector<FeatureInfo> features,
                                         std::vector<DecisionEntry> decisions,
                                         std::vector<ActionEntry> actions)
    : domain_(domain),
      features_(std::move(features)),
      decisions_(std::move(decisions)),
      actions_(std::move(actions)),
      specials_{std::string(kNonTerminal), std::string(kEos), std::string(kPad),
                std::string(kUnk)} {
  std::set<std::string> seen;
  for (const auto& token : all_tokens()) {
    if (!seen.insert(token).second) {
      throw std::invalid_argument("duplicate dictionary token '" + token + "'");
    }
  }
  if (seen.size() > 20) throw std::invalid_argument("dictionary exceeds 20 tokens");
  for (const auto& d : decisions_) {
    if (d.feature >= features_.size()) {
      throw std::invalid_argument("predicate '" + d.token + "' refers to feature " +
                                  std::to_string(d.feature) + " outside the observation");
    }
  }
  for (std::size_t i = 0; i < actions_.size(); ++i) {
    if (actions_[i].action != i) {
      throw std::invalid_argument("action indices must be contiguous from 0");
    }
  }
  for (const auto& f : features_) {
    if (std::find(seen.begin(), seen.end(), f.name) != seen.end()) {
      throw std::invalid_argument("feature name '" + f.name + "' collides with a token");
    }
  }
}

const PredicateDictionary& PredicateDictionary::taxi() {
  static const PredicateDictionary dict(
      Domain::taxi,
      {{"location_airport"}, {"location_city"}, {"location_village"}, {"traffic"},
       {"wait_time", 10.0}},
      {
          {"at_airport", 0, 0.5, Direction::greater},
          {"at_city", 1, 0.5, Direction::greater},
          {"at_village", 2, 0.5, Direction::greater},
          {"traffic_jam", 3, 0.5, Direction::greater},
          {"wait_gt_2", 4, 0.2, Direction::greater},
          {"wait_gt_5", 4, 0.5, Direction::greater},
      },
      {{"drive_airport", 0}, {"drive_city", 1}, {"drive_village", 2}, {"wait", 3}});
  return dict;
}

const PredicateDictionary& PredicateDictionary::highway() {
  static const PredicateDictionary dict = [] {
    std::vector<FeatureInfo> features{{"ego_y"}, {"ego_speed"}};
    for (const char* slot : {"ahead", "left", "right", "other"}) {
      for (const char* quantity : {"dx", "dy", "dvx", "dvy"}) {
        features.push_back({std::string(slot) + "_" + quantity});
      }
    }
    return PredicateDictionary(
        Domain::highway, std::move(features),
        {
            {"car_ahead_close", 2, 15.0, Direction::less},
            {"car_left_close", 6, 10.0, Direction::less},
            {"car_right_close", 10, 10.0, Direction::less},
            {"in_left_lane", 0, 2.0, Direction::less},
            {"in_right_lane", 0, 6.0, Direction::greater},
            {"speed_high", 1, 25.0, Direction::greater},
        },
        {{"lane_left", 0}, {"idle", 1}, {"lane_right", 2}, {"faster", 3}, {"slower", 4}});
  }();
  return dict;
}

const PredicateDictionary& PredicateDictionary::for_domain(Domain domain) {
  return domain == Domain::taxi ? taxi() : highway();
}

TokenRole PredicateDictionary::role(std::string_view token) const {
  if (find_decision(token)) return TokenRole::decision;
  if (find_action(token)) return TokenRole::action;
  if (std::find(specials_.begin(), specials_.end(), token) != specials_.end()) {
    return TokenRole::special;
  }
  return TokenRole::unknown;
}

const DecisionEntry* PredicateDictionary::find_decision(std::string_view token) const {
  auto it = std::find_if(decisions_.begin(), decisions_.end(),
                         [&](const DecisionEntry& d) { return d.token == token; });
  return it == decisions_.end() ? nullptr : &*it;
}

const ActionEntry* PredicateDictionary::find_action(std::string_view token) const {
  auto it = std::find_if(actions_.begin(), actions_.end(),
                         [&](const ActionEntry& a) { return a.token == token; });
  return it == actions_.end() ? nullptr : &*it;
}

const ActionEntry& PredicateDictionary::action_at(std::size_t index) const {
  if (index >= actions_.size()) {
    throw std::out_of_range("action index " + std::to_string(index) + " out of range");
  }
  return actions_[index];
}

std::optional<std::size_t> PredicateDictionary::find_feature(std::string_view name) const {
  for (std::size_t i = 0; i < features_.size(); ++i) {
    if (features_[i].name == name) return i;
  }
  return std::nullopt;
}

const DecisionEntry* PredicateDictionary::closest_decision(std::size_t feature,
                                                           Direction direction,
                                                           double threshold) const {
  const DecisionEntry* best = nullptr;
  double best_gap = 0.0;
  for (const auto& d : decisions_) {
    if (d.feature != feature || d.direction != direction) continue;
    const double gap = std::abs(d.threshold - threshold);
    if (!best || gap < best_gap) {
      best = &d;
      best_gap = gap;
    }
  }
  return best;
}

std::vector<std::string> PredicateDictionary::all_tokens() const {
  std::vector<std::string> out;
  for (const auto& d : decisions_) out.push_back(d.token);
  for (const auto& a : actions_) out.push_back(a.token);
  out.insert(out.end(), specials_.begin(), specials_.end());
  return out;
}

}  // namespace polsynth
