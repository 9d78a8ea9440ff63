#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "polsynth/dictionary.hpp"
#include "polsynth/env.hpp"
#include "polsynth/tree.hpp"

namespace polsynth {

enum class ExplanationStyle { tree_text, program, basic_text, modified_text };

/// Accepts the CLI names (tree, program, text, modified) and the enum names.
ExplanationStyle parse_style(std::string_view name);
std::string_view to_string(ExplanationStyle style);

/// Surface forms for one predicate. Index 0 of each list is canonical; the
/// others are used only when descriptions are varied.
struct PredicatePhrase {
  std::vector<std::string> positive;  // "there is a traffic jam"
  std::vector<std::string> negative;  // "there is no traffic jam"
};

struct PhraseTable {
  std::map<std::string, PredicatePhrase> predicates;
  std::map<std::string, std::vector<std::string>> actions;  // imperative clauses
  std::vector<std::string> feature_nouns;  // per observation slot, for learned thresholds
};

/// Phrase table for the dictionary's domain. The table is checked against
/// the dictionary on first use and std::logic_error is thrown if any token
/// lacks an entry or has fewer than three variants.
const PhraseTable& phrase_table(const PredicateDictionary& dict);

/// Problems found when matching `table` against `dict`; empty when complete.
std::vector<std::string> phrase_table_problems(const PhraseTable& table,
                                               const PredicateDictionary& dict);

/// Box-drawing outline, one node per line. No trailing newline.
std::string render_tree_text(const LexicalTree& tree, const PredicateDictionary& dict);

/// Policy-language text that parse_dsl maps back to `tree`. No trailing newline.
std::string render_program(const LexicalTree& tree, const PredicateDictionary& dict);

/// basic_text: one sentence per leaf in pre-order, true branch first.
/// modified_text: one clause per line, indented two spaces per level.
/// Throws std::invalid_argument for the other styles and for tokens without
/// a phrase.
std::string render_language(const LexicalTree& tree, ExplanationStyle style,
                            const PredicateDictionary& dict);

std::string render(const LexicalTree& tree, ExplanationStyle style,
                   const PredicateDictionary& dict);

/// Basic text with stochastic surface variation: phrase variants,
/// connectives, contractions, and swapping of sibling sentence blocks.
/// Each choice departs from the canonical form with probability
/// `variation`; variation 0 reproduces render_language(basic_text).
std::string render_description(const LexicalTree& tree, const PredicateDictionary& dict,
                               Rng& rng, double variation = 1.0);

}  // namespace polsynth
