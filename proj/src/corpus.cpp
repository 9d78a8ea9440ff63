#include "polsynth/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <regex>
#include <set>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "polsynth/error.hpp"
#include "polsynth/explain.hpp"
#include "polsynth/serialize.hpp"

namespace polsynth {

std::string_view to_string(Split split) {
  switch (split) {
    case Split::train: return "train";
    case Split::validation: return "validation";
    case Split::test: return "test";
  }
  return "?";
}

std::string_view to_string(Provenance provenance) {
  return provenance == Provenance::base ? "base" : "synonym_augmented";
}

Split parse_split(std::string_view name) {
  if (name == "train") return Split::train;
  if (name == "validation") return Split::validation;
  if (name == "test") return Split::test;
  throw SchemaError("unknown split '" + std::string(name) + "'");
}

Provenance parse_provenance(std::string_view name) {
  if (name == "base") return Provenance::base;
  if (name == "synonym_augmented") return Provenance::synonym_augmented;
  throw SchemaError("unknown provenance '" + std::string(name) + "'");
}

nlohmann::json to_json(const CorpusExample& e) {
  return {{"id", e.id},
          {"domain", std::string(to_string(e.domain))},
          {"text", e.text},
          {"target_tokens", e.target_tokens},
          {"tree", tree_to_json(e.tree)},
          {"split", std::string(to_string(e.split))},
          {"provenance", std::string(to_string(e.provenance))}};
}

CorpusExample corpus_example_from_json(const nlohmann::json& doc) {
  try {
    return {doc.at("id").get<std::string>(),
            parse_domain(doc.at("domain").get<std::string>()),
            doc.at("text").get<std::string>(),
            doc.at("target_tokens").get<std::vector<std::string>>(),
            tree_from_json(doc.at("tree")),
            parse_split(doc.at("split").get<std::string>()),
            parse_provenance(doc.at("provenance").get<std::string>())};
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("malformed corpus example: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw SchemaError(std::string("malformed corpus example: ") + e.what());
  }
}

// ---- tree sampling ----------------------------------------------------------

namespace {

std::size_t uniform_index(std::size_t n, Rng& rng) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

class TreeSampler {
 public:
  TreeSampler(const PredicateDictionary& dict, Rng& rng) : dict_(dict), rng_(rng) {}

  NodePtr build(std::size_t depth, std::size_t target, bool forced,
                std::vector<std::string>& used) {
    const bool expand = depth < target && (forced || coin());
    if (!expand) return make_leaf(dict_.actions()[uniform_index(dict_.action_count(), rng_)].token);

    std::vector<std::string> options;
    for (const auto& d : dict_.decisions()) {
      if (std::find(used.begin(), used.end(), d.token) == used.end()) options.push_back(d.token);
    }
    const std::string predicate = options[uniform_index(options.size(), rng_)];
    used.push_back(predicate);
    const bool force_true = forced && coin();
    NodePtr on_true = build(depth + 1, target, forced && force_true, used);
    NodePtr on_false = build(depth + 1, target, forced && !force_true, used);
    used.pop_back();

    // Two identical leaves would make the test meaningless.
    if (on_true->is_leaf() && on_false->is_leaf() && on_true->token == on_false->token) {
      std::size_t index = dict_.find_action(on_false->token)->action;
      index = (index + 1 + uniform_index(dict_.action_count() - 1, rng_)) % dict_.action_count();
      on_false = make_leaf(dict_.action_at(index).token);
    }
    return make_decision(predicate, std::move(on_true), std::move(on_false));
  }

 private:
  bool coin() { return std::uniform_int_distribution<int>(0, 1)(rng_) == 1; }

  const PredicateDictionary& dict_;
  Rng& rng_;
};

}  // namespace

LexicalTree sample_tree(const PredicateDictionary& dict, std::size_t min_depth,
                        std::size_t max_depth, Rng& rng) {
  if (min_depth < 1 || min_depth > max_depth || max_depth > kMaxTreeDepth) {
    throw std::invalid_argument("depth range must satisfy 1 <= min <= max <= " +
                                std::to_string(kMaxTreeDepth));
  }
  if (max_depth - 1 > dict.decisions().size()) {
    throw std::invalid_argument("not enough predicates for the requested depth");
  }
  const std::size_t target =
      std::uniform_int_distribution<std::size_t>(min_depth, max_depth)(rng);
  std::vector<std::string> used;
  TreeSampler sampler(dict, rng);
  return LexicalTree(sampler.build(1, target, true, used));
}

// ---- synonyms ---------------------------------------------------------------

const std::map<std::string, std::vector<std::string>>& synonym_lexicon(Domain domain) {
  static const std::map<std::string, std::vector<std::string>> taxi{
      {"airport", {"airfield", "terminal"}},
      {"cab", {"taxi", "car"}},
      {"city", {"metropolis"}},
      {"congested", {"jammed", "clogged"}},
      {"drive", {"go", "travel"}},
      {"greater", {"larger", "bigger"}},
      {"head", {"go", "proceed"}},
      {"heavy", {"bad", "dense"}},
      {"jam", {"backup", "gridlock"}},
      {"longer", {"greater"}},
      {"passenger", {"customer", "rider", "fare"}},
      {"roads", {"streets"}},
      {"taxi", {"cab", "car"}},
      {"village", {"hamlet"}},
  };
  static const std::map<std::string, std::vector<std::string>> highway{
      {"accelerate", {"hurry"}},
      {"ahead", {"in front"}},
      {"car", {"vehicle", "automobile"}},
      {"change", {"switch", "shift"}},
      {"close", {"near", "nearby"}},
      {"decelerate", {"brake"}},
      {"driving", {"traveling", "cruising"}},
      {"fast", {"quickly", "rapidly"}},
      {"high", {"large"}},
      {"keep", {"maintain"}},
      {"move", {"shift", "pull"}},
  };
  return domain == Domain::taxi ? taxi : highway;
}

std::string augment_synonyms(std::string_view text, Domain domain, Rng& rng, double rate) {
  if (rate < 0.0 || rate > 1.0) throw std::invalid_argument("synonym rate must be in [0, 1]");
  const auto& lexicon = synonym_lexicon(domain);
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  auto is_alpha = [](char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); };
  while (i < text.size()) {
    if (!is_alpha(text[i])) {
      out += text[i++];
      continue;
    }
    std::size_t j = i;
    while (j < text.size() && is_alpha(text[j])) ++j;
    const std::string word(text.substr(i, j - i));
    std::string lower = word;
    for (char& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    auto it = lexicon.find(lower);
    if (rate > 0.0 && it != lexicon.end() &&
        std::uniform_real_distribution<double>(0.0, 1.0)(rng) < rate) {
      std::string replacement = it->second[uniform_index(it->second.size(), rng)];
      if (word[0] >= 'A' && word[0] <= 'Z') {
        replacement[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(replacement[0])));
      }
      out += replacement;
    } else {
      out += word;
    }
    i = j;
  }
  return out;
}

std::vector<std::string> tokenize_words(std::string_view text) {
  static const std::regex pattern(R"([a-z0-9]+(?:['.][a-z0-9]+)*|[^\sa-z0-9])");
  std::string lower(text);
  for (char& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  std::vector<std::string> words;
  for (auto it = std::sregex_iterator(lower.begin(), lower.end(), pattern);
       it != std::sregex_iterator(); ++it) {
    words.push_back(it->str());
  }
  return words;
}

// ---- corpus -----------------------------------------------------------------

nlohmann::json to_json(const CorpusConfig& c) {
  return {{"n_base", c.n_base},
          {"augment_per_example", c.augment_per_example},
          {"seed", c.seed},
          {"split_ratios", c.split_ratios},
          {"min_depth", c.min_depth},
          {"max_depth", c.max_depth},
          {"variation", c.variation},
          {"synonym_rate", c.synonym_rate},
          {"min_word_count", c.min_word_count}};
}

CorpusConfig corpus_config_from_json(const nlohmann::json& doc) {
  CorpusConfig c;
  c.n_base = doc.value("n_base", c.n_base);
  c.augment_per_example = doc.value("augment_per_example", c.augment_per_example);
  c.seed = doc.value("seed", c.seed);
  if (doc.contains("split_ratios")) c.split_ratios = doc["split_ratios"].get<std::array<double, 3>>();
  c.min_depth = doc.value("min_depth", c.min_depth);
  c.max_depth = doc.value("max_depth", c.max_depth);
  c.variation = doc.value("variation", c.variation);
  c.synonym_rate = doc.value("synonym_rate", c.synonym_rate);
  c.min_word_count = doc.value("min_word_count", c.min_word_count);
  return c;
}

Corpus build_corpus(const PredicateDictionary& dict, const CorpusConfig& config) {
  const auto& r = config.split_ratios;
  if (std::any_of(r.begin(), r.end(), [](double v) { return v < 0.0; }) ||
      std::abs(r[0] + r[1] + r[2] - 1.0) > 1e-9) {
    throw std::invalid_argument("split ratios must be non-negative and sum to 1");
  }
  if (config.synonym_rate <= 0.0 && config.augment_per_example > 0) {
    throw std::invalid_argument("augmentation needs a positive synonym rate");
  }
  Rng rng(config.seed);

  std::vector<LexicalTree> bases;
  std::unordered_set<std::string> seen;
  // Give up once this many draws in a row produce nothing new.
  constexpr std::size_t kMaxStale = 20000;
  for (std::size_t stale = 0; bases.size() < config.n_base;) {
    if (stale == kMaxStale) {
      throw std::invalid_argument("could not sample " + std::to_string(config.n_base) +
                                  " distinct trees");
    }
    auto tree = sample_tree(dict, config.min_depth, config.max_depth, rng);
    if (seen.insert(serialize(tree)).second) {
      bases.push_back(std::move(tree));
      stale = 0;
    } else {
      ++stale;
    }
  }

  std::vector<std::size_t> order(bases.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n = static_cast<double>(bases.size());
  const auto n_train = static_cast<std::size_t>(std::lround(n * r[0]));
  const auto n_val = std::min(bases.size() - n_train,
                              static_cast<std::size_t>(std::lround(n * r[1])));
  std::vector<Split> splits(bases.size(), Split::test);
  for (std::size_t k = 0; k < order.size(); ++k) {
    splits[order[k]] = k < n_train ? Split::train
                       : k < n_train + n_val ? Split::validation
                                             : Split::test;
  }

  Corpus corpus;
  const std::string domain(to_string(dict.domain()));
  for (std::size_t b = 0; b < bases.size(); ++b) {
    const auto& tree = bases[b];
    const auto tokens = tokenize(tree);
    char prefix[64];
    std::snprintf(prefix, sizeof prefix, "%s-%05zu-", domain.c_str(), b);
    const std::string text = render_description(tree, dict, rng, config.variation);
    corpus.examples.push_back(
        {prefix + std::string("0"), dict.domain(), text, tokens, tree, splits[b], Provenance::base});
    for (std::size_t k = 1; k <= config.augment_per_example; ++k) {
      std::string augmented = augment_synonyms(text, dict.domain(), rng, config.synonym_rate);
      // A draw that replaced nothing would duplicate the base text.
      for (int retry = 0; retry < 16 && augmented == text; ++retry) {
        augmented = augment_synonyms(text, dict.domain(), rng, config.synonym_rate);
      }
      corpus.examples.push_back({prefix + std::to_string(k), dict.domain(), augmented, tokens,
                                 tree, splits[b], Provenance::synonym_augmented});
    }
  }
  corpus.vocabulary = build_vocabulary(corpus.examples, config.min_word_count);
  return corpus;
}

std::vector<std::pair<std::string, std::size_t>> build_vocabulary(
    const std::vector<CorpusExample>& examples, std::size_t min_count) {
  std::map<std::string, std::size_t> counts;
  for (const auto& e : examples) {
    for (auto& w : tokenize_words(e.text)) ++counts[w];
  }
  std::vector<std::pair<std::string, std::size_t>> vocab;
  std::size_t dropped = 0;
  for (const auto& [word, count] : counts) {
    if (count >= min_count && word != kUnk) {
      vocab.emplace_back(word, count);
    } else {
      dropped += count;
    }
  }
  std::stable_sort(vocab.begin(), vocab.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  vocab.emplace_back(std::string(kUnk), dropped);
  return vocab;
}

void write_corpus(std::ostream& out, const std::vector<CorpusExample>& examples) {
  for (const auto& e : examples) out << to_json(e).dump() << '\n';
}

std::vector<CorpusExample> read_corpus(std::istream& in) {
  std::vector<CorpusExample> examples;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) continue;
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError("corpus line " + std::to_string(number) + ": " + e.what());
    }
    examples.push_back(corpus_example_from_json(doc));
  }
  return examples;
}

void write_vocabulary(std::ostream& out,
                      const std::vector<std::pair<std::string, std::size_t>>& vocabulary) {
  for (const auto& [word, count] : vocabulary) out << word << '\t' << count << '\n';
}

std::vector<std::pair<std::string, std::size_t>> read_vocabulary(std::istream& in) {
  std::vector<std::pair<std::string, std::size_t>> vocab;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw SchemaError("vocabulary line without a tab: " + line);
    try {
      vocab.emplace_back(line.substr(0, tab), std::stoull(line.substr(tab + 1)));
    } catch (const std::logic_error&) {
      throw SchemaError("vocabulary line with a bad count: " + line);
    }
  }
  return vocab;
}

IntegrityReport check_corpus(const std::vector<CorpusExample>& examples,
                             const std::vector<std::pair<std::string, std::size_t>>& vocabulary,
                             std::size_t min_count) {
  IntegrityReport report;
  auto problem = [&](std::string text) { report.problems.push_back(std::move(text)); };

  std::unordered_set<std::string> ids;
  std::unordered_map<std::string, Split> tree_split;
  std::map<std::string, std::size_t> counts;
  for (const auto& e : examples) {
    if (!ids.insert(e.id).second) problem("duplicate id " + e.id);
    if (tokenize(e.tree) != e.target_tokens) problem(e.id + ": target tokens disagree with tree");
    if (!validate(e.tree, PredicateDictionary::for_domain(e.domain)).ok()) {
      problem(e.id + ": tree does not validate");
    }
    const auto key = std::string(to_string(e.domain)) + serialize(e.tree);
    auto [it, inserted] = tree_split.emplace(key, e.split);
    if (!inserted && it->second != e.split) {
      problem(e.id + ": tree appears in both " + std::string(to_string(it->second)) + " and " +
              std::string(to_string(e.split)));
    }
    for (auto& w : tokenize_words(e.text)) ++counts[w];
  }

  bool has_unk = false;
  std::set<std::string> listed;
  for (const auto& [word, count] : vocabulary) {
    if (word == kUnk) {
      has_unk = true;
      continue;
    }
    listed.insert(word);
    auto it = counts.find(word);
    const std::size_t actual = it == counts.end() ? 0 : it->second;
    if (actual != count) {
      problem("vocabulary count for '" + word + "' is " + std::to_string(count) +
              ", recount gives " + std::to_string(actual));
    }
    if (actual < min_count) problem("vocabulary word '" + word + "' occurs fewer than min times");
  }
  if (!has_unk) problem("vocabulary has no UNK entry");
  for (const auto& [word, count] : counts) {
    if (count >= min_count && !listed.count(word)) {
      problem("frequent word '" + word + "' missing from the vocabulary");
    }
  }
  return report;
}

}  // namespace polsynth
