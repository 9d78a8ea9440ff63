#include "polsynth/explain.hpp"

#include <charconv>
#include <cmath>
#include <mutex>
#include <random>
#include <stdexcept>

#include "polsynth/format.hpp"

namespace polsynth {

ExplanationStyle parse_style(std::string_view name) {
  if (name == "tree" || name == "tree_text") return ExplanationStyle::tree_text;
  if (name == "program") return ExplanationStyle::program;
  if (name == "text" || name == "basic_text") return ExplanationStyle::basic_text;
  if (name == "modified" || name == "modified_text") return ExplanationStyle::modified_text;
  throw std::invalid_argument("unknown explanation style '" + std::string(name) + "'");
}

std::string_view to_string(ExplanationStyle style) {
  switch (style) {
    case ExplanationStyle::tree_text: return "tree";
    case ExplanationStyle::program: return "program";
    case ExplanationStyle::basic_text: return "text";
    case ExplanationStyle::modified_text: return "modified";
  }
  return "?";
}

// ---- phrase tables ----------------------------------------------------------

namespace {

PhraseTable build_taxi_table() {
  PhraseTable t;
  t.predicates["at_airport"] = {
      {"the taxi is at the airport", "you are at the airport", "the cab is at the airport"},
      {"the taxi is not at the airport", "you are not at the airport",
       "the cab is not at the airport"}};
  t.predicates["at_city"] = {
      {"the taxi is in the city", "you are in the city", "the cab is in the city"},
      {"the taxi is not in the city", "you are not in the city", "the cab is not in the city"}};
  t.predicates["at_village"] = {
      {"the taxi is in the village", "you are in the village", "the cab is in the village"},
      {"the taxi is not in the village", "you are not in the village",
       "the cab is not in the village"}};
  t.predicates["traffic_jam"] = {
      {"there is a traffic jam", "the traffic is heavy", "the roads are congested"},
      {"there is no traffic jam", "the traffic is not heavy", "the roads are not congested"}};
  t.predicates["wait_gt_2"] = {
      {"the wait time is greater than 2", "the village wait is longer than 2",
       "the passenger wait is more than 2"},
      {"the wait time is not greater than 2", "the village wait is not longer than 2",
       "the passenger wait is at most 2"}};
  t.predicates["wait_gt_5"] = {
      {"the wait time is greater than 5", "the village wait is longer than 5",
       "the passenger wait is more than 5"},
      {"the wait time is not greater than 5", "the village wait is not longer than 5",
       "the passenger wait is at most 5"}};
  t.actions["drive_airport"] = {"drive to the airport", "head to the airport",
                                "take the road to the airport"};
  t.actions["drive_city"] = {"drive to the city", "head to the city",
                             "take the road to the city"};
  t.actions["drive_village"] = {"drive to the village", "head to the village",
                                "take the road to the village"};
  t.actions["wait"] = {"wait for a passenger", "stay put and wait for a passenger",
                       "wait where you are for a passenger"};
  t.feature_nouns = {"the airport indicator", "the city indicator", "the village indicator",
                     "the traffic level", "the wait time"};
  return t;
}

PhraseTable build_highway_table() {
  PhraseTable t;
  t.predicates["car_ahead_close"] = {
      {"there is a car close ahead", "a car is close in front of you",
       "the car ahead is close"},
      {"there is no car close ahead", "no car is close in front of you",
       "the car ahead is not close"}};
  t.predicates["car_left_close"] = {
      {"there is a car close on the left", "a car is close in the left lane",
       "the car on your left is close"},
      {"there is no car close on the left", "no car is close in the left lane",
       "the car on your left is not close"}};
  t.predicates["car_right_close"] = {
      {"there is a car close on the right", "a car is close in the right lane",
       "the car on your right is close"},
      {"there is no car close on the right", "no car is close in the right lane",
       "the car on your right is not close"}};
  t.predicates["in_left_lane"] = {
      {"you are in the left lane", "the car is in the left lane",
       "you are driving in the left lane"},
      {"you are not in the left lane", "the car is not in the left lane",
       "you are not driving in the left lane"}};
  t.predicates["in_right_lane"] = {
      {"you are in the right lane", "the car is in the right lane",
       "you are driving in the right lane"},
      {"you are not in the right lane", "the car is not in the right lane",
       "you are not driving in the right lane"}};
  t.predicates["speed_high"] = {
      {"you are driving fast", "your speed is high", "the car is going fast"},
      {"you are not driving fast", "your speed is not high", "the car is not going fast"}};
  t.actions["lane_left"] = {"change to the left lane", "move into the left lane",
                            "switch to the left lane"};
  t.actions["idle"] = {"keep your lane and speed", "stay in your lane at the same speed",
                       "keep going as you are"};
  t.actions["lane_right"] = {"change to the right lane", "move into the right lane",
                             "switch to the right lane"};
  t.actions["faster"] = {"speed up", "accelerate", "go faster"};
  t.actions["slower"] = {"slow down", "decelerate", "go slower"};
  t.feature_nouns = {"your lateral position", "your speed"};
  const char* slots[] = {"the car ahead", "the car on your left", "the car on your right",
                         "the nearest other car"};
  for (const char* slot : slots) {
    t.feature_nouns.push_back(std::string("the gap to ") + slot);
    t.feature_nouns.push_back(std::string("the lateral offset of ") + slot);
    t.feature_nouns.push_back(std::string("the relative speed of ") + slot);
    t.feature_nouns.push_back(std::string("the lateral relative speed of ") + slot);
  }
  return t;
}

const PhraseTable& checked(const PhraseTable& table, const PredicateDictionary& dict) {
  const auto problems = phrase_table_problems(table, dict);
  if (!problems.empty()) {
    std::string message = "incomplete phrase table:";
    for (const auto& p : problems) message += " " + p + ";";
    throw std::logic_error(message);
  }
  return table;
}

}  // namespace

std::vector<std::string> phrase_table_problems(const PhraseTable& table,
                                               const PredicateDictionary& dict) {
  std::vector<std::string> problems;
  for (const auto& d : dict.decisions()) {
    auto it = table.predicates.find(d.token);
    if (it == table.predicates.end()) {
      problems.push_back("no phrase for predicate '" + d.token + "'");
    } else if (it->second.positive.size() < 3 ||
               it->second.positive.size() != it->second.negative.size()) {
      problems.push_back("predicate '" + d.token + "' needs three paired variants");
    }
  }
  for (const auto& a : dict.actions()) {
    auto it = table.actions.find(a.token);
    if (it == table.actions.end()) {
      problems.push_back("no phrase for action '" + a.token + "'");
    } else if (it->second.size() < 3) {
      problems.push_back("action '" + a.token + "' needs three variants");
    }
  }
  for (const auto& [token, _] : table.predicates) {
    if (!dict.find_decision(token)) problems.push_back("stray predicate phrase '" + token + "'");
  }
  for (const auto& [token, _] : table.actions) {
    if (!dict.find_action(token)) problems.push_back("stray action phrase '" + token + "'");
  }
  if (table.feature_nouns.size() != dict.observation_dim()) {
    problems.push_back("feature noun count does not match the observation width");
  }
  return problems;
}

const PhraseTable& phrase_table(const PredicateDictionary& dict) {
  static const PhraseTable& taxi = checked(*new PhraseTable(build_taxi_table()),
                                           PredicateDictionary::taxi());
  static const PhraseTable& highway = checked(*new PhraseTable(build_highway_table()),
                                              PredicateDictionary::highway());
  return dict.domain() == Domain::taxi ? taxi : highway;
}

// ---- shared helpers ---------------------------------------------------------

namespace {

double parse_literal(const std::string& text) {
  double out = 0.0;
  std::from_chars(text.data(), text.data() + text.size(), out);
  return out;
}

// Shortest display-unit literal that the DSL parser divides back into
// exactly `value`.
std::string display_literal(double value, double scale) {
  if (scale == 1.0 || !std::isfinite(value)) return format_number(value);
  const double centre = value * scale;
  double up = centre;
  double down = centre;
  for (int step = 0; step < 8; ++step) {
    for (double candidate : {up, down}) {
      const std::string text = format_number(candidate);
      if (parse_literal(text) / scale == value) return text;
    }
    up = std::nextafter(up, HUGE_VAL);
    down = std::nextafter(down, -HUGE_VAL);
  }
  return format_number(centre);
}

std::size_t feature_of(const Node& node, const PredicateDictionary& dict) {
  if (const auto* d = dict.find_decision(node.token)) return d->feature;
  if (auto f = dict.find_feature(node.token)) return *f;
  throw std::invalid_argument("'" + node.token + "' is neither a predicate nor a feature");
}

std::string comparison_text(const Node& node, const PredicateDictionary& dict) {
  const std::size_t f = feature_of(node, dict);
  const auto& info = dict.features()[f];
  return info.name + (node.threshold->direction == Direction::greater ? " > " : " < ") +
         display_literal(node.threshold->value, info.display_scale);
}

std::string node_label(const Node& node, const PredicateDictionary& dict) {
  return node.threshold ? comparison_text(node, dict) : node.token;
}

std::string capitalize(std::string s) {
  if (!s.empty() && s[0] >= 'a' && s[0] <= 'z') s[0] = static_cast<char>(s[0] - 'a' + 'A');
  return s;
}

// Chooses a variant index: canonical unless the draw falls under `variation`.
class Chooser {
 public:
  Chooser(Rng* rng, double variation) : rng_(rng), variation_(variation) {}

  std::size_t pick(std::size_t count) {
    if (!rng_ || variation_ <= 0.0 || count <= 1) return 0;
    if (!flip(variation_)) return 0;
    return std::uniform_int_distribution<std::size_t>(0, count - 1)(*rng_);
  }

  bool flip(double p) {
    if (!rng_ || p <= 0.0) return false;
    return std::uniform_real_distribution<double>(0.0, 1.0)(*rng_) < p;
  }

  double variation() const { return rng_ ? variation_ : 0.0; }

 private:
  Rng* rng_;
  double variation_;
};

class LanguageRenderer {
 public:
  LanguageRenderer(const PredicateDictionary& dict, Chooser chooser)
      : dict_(dict), table_(phrase_table(dict)), choose_(chooser) {}

  std::string condition(const Node& node, bool positive) {
    if (node.threshold) {
      const std::size_t f = feature_of(node, dict_);
      const auto& info = dict_.features()[f];
      static const std::vector<std::string> greater_pos{"is greater than", "is above",
                                                        "is more than"};
      static const std::vector<std::string> greater_neg{"is not greater than", "is not above",
                                                        "is at most"};
      static const std::vector<std::string> less_pos{"is less than", "is below", "is under"};
      static const std::vector<std::string> less_neg{"is not less than", "is not below",
                                                     "is at least"};
      const bool greater = node.threshold->direction == Direction::greater;
      const auto& verbs = greater ? (positive ? greater_pos : greater_neg)
                                  : (positive ? less_pos : less_neg);
      return table_.feature_nouns[f] + " " + verbs[choose_.pick(verbs.size())] + " " +
             display_literal(node.threshold->value, info.display_scale);
    }
    auto it = table_.predicates.find(node.token);
    if (it == table_.predicates.end()) {
      throw std::invalid_argument("no phrase for predicate '" + node.token + "'");
    }
    const auto& variants = positive ? it->second.positive : it->second.negative;
    return variants[choose_.pick(variants.size())];
  }

  std::string action(const Node& leaf) {
    auto it = table_.actions.find(leaf.token);
    if (it == table_.actions.end()) {
      throw std::invalid_argument("no phrase for action '" + leaf.token + "'");
    }
    return it->second[choose_.pick(it->second.size())];
  }

  std::string basic(const LexicalTree& tree) {
    const Node& root = tree.root();
    if (root.is_leaf()) {
      static const std::vector<std::string> always{"Always", "At all times,",
                                                   "In every situation,"};
      return finish(always[choose_.pick(always.size())] + " " + action(root) + ".");
    }
    std::vector<std::string> sentences;
    std::vector<std::string> context;
    sentences_for(root, context, true, sentences);
    std::string out;
    for (const auto& s : sentences) {
      if (!out.empty()) out += ' ';
      out += s;
    }
    return out;
  }

  void modified(const Node& node, std::size_t indent, std::string& out) {
    const std::string pad(indent, ' ');
    if (node.is_leaf()) {
      if (!out.empty()) out += '\n';
      out += pad + capitalize(action(node)) + ".";
      return;
    }
    if (!out.empty()) out += '\n';
    out += pad + "If " + condition(node, true) + ":";
    modified(*node.on_true, indent + 2, out);
    out += '\n' + pad + "Otherwise:";
    modified(*node.on_false, indent + 2, out);
  }

 private:
  void sentences_for(const Node& node, std::vector<std::string>& context, bool at_root,
                     std::vector<std::string>& out) {
    if (node.is_leaf()) {
      static const std::vector<std::string> openers{"If", "When", "Whenever"};
      std::string conditions;
      for (std::size_t i = 0; i < context.size(); ++i) {
        if (i > 0) conditions += " and ";
        conditions += context[i];
      }
      out.push_back(finish(openers[choose_.pick(openers.size())] + " " + conditions + ", " +
                           action(node) + "."));
      return;
    }
    std::vector<std::string> true_part;
    context.push_back(condition(node, true));
    sentences_for(*node.on_true, context, false, true_part);
    context.pop_back();

    std::vector<std::string> false_part;
    const bool otherwise = at_root && node.on_false->is_leaf();
    if (otherwise) {
      static const std::vector<std::string> elses{"Otherwise,", "If not,", "Else,"};
      false_part.push_back(
          finish(elses[choose_.pick(elses.size())] + " " + action(*node.on_false) + "."));
    } else {
      context.push_back(condition(node, false));
      sentences_for(*node.on_false, context, false, false_part);
      context.pop_back();
    }

    // Every sentence states its full condition, so sibling blocks may trade
    // places unless one of them leans on "Otherwise".
    const bool swap = !otherwise && choose_.flip(0.5 * choose_.variation());
    auto& first = swap ? false_part : true_part;
    auto& second = swap ? true_part : false_part;
    out.insert(out.end(), first.begin(), first.end());
    out.insert(out.end(), second.begin(), second.end());
  }

  std::string finish(std::string sentence) {
    if (choose_.flip(0.5 * choose_.variation())) {
      sentence = replace_all(std::move(sentence), " is not ", " isn't ");
      sentence = replace_all(std::move(sentence), " are not ", " aren't ");
    }
    return capitalize(std::move(sentence));
  }

  static std::string replace_all(std::string text, std::string_view from, std::string_view to) {
    std::size_t pos = 0;
    while ((pos = text.find(from, pos)) != std::string::npos) {
      text.replace(pos, from.size(), to);
      pos += to.size();
    }
    return text;
  }

  const PredicateDictionary& dict_;
  const PhraseTable& table_;
  Chooser choose_;
};

void tree_lines(const Node& node, const PredicateDictionary& dict, const std::string& prefix,
                std::string& out) {
  if (node.is_leaf()) return;
  out += '\n' + prefix + "├── True: " + node_label(*node.on_true, dict);
  tree_lines(*node.on_true, dict, prefix + "│   ", out);
  out += '\n' + prefix + "└── False: " + node_label(*node.on_false, dict);
  tree_lines(*node.on_false, dict, prefix + "    ", out);
}

void program_lines(const Node& node, const PredicateDictionary& dict, std::size_t indent,
                   std::string& out) {
  const std::string pad(indent, ' ');
  if (!out.empty()) out += '\n';
  if (node.is_leaf()) {
    out += pad + node.token;
    return;
  }
  out += pad + "if " + node_label(node, dict) + ":";
  program_lines(*node.on_true, dict, indent + 2, out);
  out += '\n' + pad + "else:";
  program_lines(*node.on_false, dict, indent + 2, out);
}

}  // namespace

// ---- renderers --------------------------------------------------------------

std::string render_tree_text(const LexicalTree& tree, const PredicateDictionary& dict) {
  std::string out = node_label(tree.root(), dict);
  tree_lines(tree.root(), dict, "", out);
  return out;
}

std::string render_program(const LexicalTree& tree, const PredicateDictionary& dict) {
  std::string out;
  program_lines(tree.root(), dict, 0, out);
  return out;
}

std::string render_language(const LexicalTree& tree, ExplanationStyle style,
                            const PredicateDictionary& dict) {
  LanguageRenderer renderer(dict, Chooser(nullptr, 0.0));
  if (style == ExplanationStyle::basic_text) return renderer.basic(tree);
  if (style == ExplanationStyle::modified_text) {
    if (tree.root().is_leaf()) return renderer.basic(tree);
    std::string out;
    renderer.modified(tree.root(), 0, out);
    return out;
  }
  throw std::invalid_argument("render_language handles the text styles only");
}

std::string render(const LexicalTree& tree, ExplanationStyle style,
                   const PredicateDictionary& dict) {
  switch (style) {
    case ExplanationStyle::tree_text: return render_tree_text(tree, dict);
    case ExplanationStyle::program: return render_program(tree, dict);
    default: return render_language(tree, style, dict);
  }
}

std::string render_description(const LexicalTree& tree, const PredicateDictionary& dict,
                               Rng& rng, double variation) {
  LanguageRenderer renderer(dict, Chooser(&rng, variation));
  return renderer.basic(tree);
}

}  // namespace polsynth
