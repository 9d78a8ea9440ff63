#pragma once

#include <string_view>

#include "polsynth/dictionary.hpp"
#include "polsynth/tree.hpp"

namespace polsynth {

/// Parses the indentation-based policy language:
///
///   policy := node
///   node   := action
///           | "if" pred ":" NL INDENT node DEDENT "else:" NL INDENT node DEDENT
///   pred   := predicate_token | feature_name (">" | "<") number
///
/// Indentation is two spaces per level. A comparison on a feature name
/// yields a learned-threshold decision, with the number in display units.
/// Throws ParseError (with 1-based line/column) on any syntax, token, depth
/// or missing-branch problem.
LexicalTree parse_dsl(std::string_view text, const PredicateDictionary& dict);

}  // namespace polsynth
