#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "polsynth/dictionary.hpp"
#include "polsynth/env.hpp"
#include "polsynth/tree.hpp"

namespace polsynth {

enum class Split { train, validation, test };
enum class Provenance { base, synonym_augmented };

std::string_view to_string(Split split);
std::string_view to_string(Provenance provenance);
Split parse_split(std::string_view name);
Provenance parse_provenance(std::string_view name);

struct CorpusExample {
  std::string id;
  Domain domain;
  std::string text;
  std::vector<std::string> target_tokens;
  LexicalTree tree;
  Split split;
  Provenance provenance;
};

nlohmann::json to_json(const CorpusExample& example);
CorpusExample corpus_example_from_json(const nlohmann::json& doc);

/// Random tree whose depth is drawn uniformly from [min_depth, max_depth].
/// One root-to-leaf path is forced to the target depth; other branches stop
/// early at random. No predicate repeats along a path and sibling leaves
/// never share an action.
LexicalTree sample_tree(const PredicateDictionary& dict, std::size_t min_depth,
                        std::size_t max_depth, Rng& rng);

/// Replaces each word that has an entry in the domain's synonym lexicon
/// with probability `rate`. Replacements stay within a predicate's meaning.
std::string augment_synonyms(std::string_view text, Domain domain, Rng& rng, double rate);

/// word -> replacements, per domain.
const std::map<std::string, std::vector<std::string>>& synonym_lexicon(Domain domain);

/// Lower-case word and punctuation tokens, as counted for the vocabulary.
std::vector<std::string> tokenize_words(std::string_view text);

struct CorpusConfig {
  std::size_t n_base = 500;
  std::size_t augment_per_example = 1;
  std::uint64_t seed = 0;
  std::array<double, 3> split_ratios{0.8, 0.1, 0.1};  // train, validation, test
  std::size_t min_depth = 2;
  std::size_t max_depth = 4;
  double variation = 1.0;
  double synonym_rate = 0.5;
  std::size_t min_word_count = 5;
};

nlohmann::json to_json(const CorpusConfig& config);
CorpusConfig corpus_config_from_json(const nlohmann::json& doc);

struct Corpus {
  std::vector<CorpusExample> examples;
  std::vector<std::pair<std::string, std::size_t>> vocabulary;  // count-sorted, UNK last
};

/// n_base distinct trees, each described once and then augmented. All
/// variants of a tree land in the same split. Throws std::invalid_argument
/// when the ratios do not sum to one or not enough distinct trees exist.
Corpus build_corpus(const PredicateDictionary& dict, const CorpusConfig& config);

/// Words with count >= min_count, most frequent first (ties alphabetical),
/// followed by UNK carrying the count of everything dropped.
std::vector<std::pair<std::string, std::size_t>> build_vocabulary(
    const std::vector<CorpusExample>& examples, std::size_t min_count);

void write_corpus(std::ostream& out, const std::vector<CorpusExample>& examples);
std::vector<CorpusExample> read_corpus(std::istream& in);
void write_vocabulary(std::ostream& out,
                      const std::vector<std::pair<std::string, std::size_t>>& vocabulary);
std::vector<std::pair<std::string, std::size_t>> read_vocabulary(std::istream& in);

struct IntegrityReport {
  std::vector<std::string> problems;
  bool ok() const noexcept { return problems.empty(); }
};

/// Label integrity (tokens match the tree, trees validate), split leakage
/// (no tree in two splits) and vocabulary counts recomputed from the texts.
IntegrityReport check_corpus(const std::vector<CorpusExample>& examples,
                             const std::vector<std::pair<std::string, std::size_t>>& vocabulary,
                             std::size_t min_count = 5);

}  // namespace polsynth
