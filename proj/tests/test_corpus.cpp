#include <gtest/gtest.h>

#include <map>
#include <set>
#include <sstream>

#include "polsynth/corpus.hpp"
#include "polsynth/error.hpp"
#include "polsynth/explain.hpp"
#include "polsynth/serialize.hpp"

using namespace polsynth;

namespace {

CorpusConfig small_config(std::size_t n_base, std::uint64_t seed = 0) {
  CorpusConfig c;
  c.n_base = n_base;
  c.seed = seed;
  return c;
}

// Built once; the full 500-tree corpus takes a moment.
const Corpus& taxi_corpus() {
  static const Corpus corpus = build_corpus(PredicateDictionary::taxi(), small_config(500, 7));
  return corpus;
}

}  // namespace

TEST(SampleTree, DepthOneIsLeaf) {
  Rng rng(1);
  for (int i = 0; i < 20; ++i) {
    const auto tree = sample_tree(PredicateDictionary::taxi(), 1, 1, rng);
    EXPECT_TRUE(tree.root().is_leaf());
  }
}

TEST(SampleTree, ValidTreesWithinDepthRange) {
  for (Domain d : {Domain::taxi, Domain::highway}) {
    const auto& dict = PredicateDictionary::for_domain(d);
    Rng rng(2);
    std::set<std::size_t> depths;
    for (int i = 0; i < 1000; ++i) {
      const auto tree = sample_tree(dict, 2, 4, rng);
      ASSERT_TRUE(validate(tree, dict).ok());
      EXPECT_GE(tree.depth(), 2u);
      EXPECT_LE(tree.depth(), 4u);
      depths.insert(tree.depth());
    }
    EXPECT_EQ(depths.size(), 3u);
  }
}

TEST(SampleTree, NoPredicateRepeatsOnAPath) {
  const auto& dict = PredicateDictionary::highway();
  Rng rng(3);
  std::function<void(const Node&, std::set<std::string>)> walk = [&](const Node& n,
                                                                     std::set<std::string> seen) {
    if (n.is_leaf()) return;
    EXPECT_TRUE(seen.insert(n.token).second) << n.token;
    if (n.on_true->is_leaf() && n.on_false->is_leaf()) {
      EXPECT_NE(n.on_true->token, n.on_false->token);
    }
    walk(*n.on_true, seen);
    walk(*n.on_false, seen);
  };
  for (int i = 0; i < 300; ++i) walk(sample_tree(dict, 2, 4, rng).root(), {});
}

TEST(SampleTree, Reproducible) {
  Rng a(5), b(5);
  for (int i = 0; i < 20; ++i) {
    EXPECT_EQ(sample_tree(PredicateDictionary::taxi(), 2, 4, a),
              sample_tree(PredicateDictionary::taxi(), 2, 4, b));
  }
}

TEST(Augment, RateZeroIsIdentity) {
  Rng rng(1);
  const std::string text = "If there is a traffic jam, drive to the airport.";
  EXPECT_EQ(augment_synonyms(text, Domain::taxi, rng, 0.0), text);
}

TEST(Augment, RateOneReplacesEveryLexiconWord) {
  Rng rng(1);
  const std::string text = "If there is a traffic jam, drive to the airport.";
  const auto out = augment_synonyms(text, Domain::taxi, rng, 1.0);
  const auto& lexicon = synonym_lexicon(Domain::taxi);
  for (const auto& w : tokenize_words(out)) EXPECT_EQ(lexicon.count(w), 0u) << w;
  // Capitalisation of the first word survives.
  EXPECT_EQ(out.substr(0, 3), "If ");
}

TEST(Tokenize, Words) {
  EXPECT_EQ(tokenize_words("Don't go, the wait is 2.5!"),
            (std::vector<std::string>{"don't", "go", ",", "the", "wait", "is", "2.5", "!"}));
}

TEST(Corpus, SizesAndSplits) {
  const auto& corpus = taxi_corpus();
  ASSERT_EQ(corpus.examples.size(), 1000u);
  std::map<Split, std::size_t> counts;
  std::map<std::string, Split> by_tree;
  for (const auto& e : corpus.examples) {
    ++counts[e.split];
    const auto [it, fresh] = by_tree.emplace(serialize(e.tree), e.split);
    EXPECT_TRUE(fresh || it->second == e.split);
    EXPECT_EQ(e.target_tokens, tokenize(e.tree));
  }
  EXPECT_EQ(counts[Split::train], 800u);
  EXPECT_EQ(counts[Split::validation], 100u);
  EXPECT_EQ(counts[Split::test], 100u);
  EXPECT_EQ(by_tree.size(), 500u);
}

TEST(Corpus, IntegrityChecksPass) {
  const auto& corpus = taxi_corpus();
  const auto report = check_corpus(corpus.examples, corpus.vocabulary, 5);
  EXPECT_TRUE(report.ok()) << (report.problems.empty() ? "" : report.problems.front());
  EXPECT_EQ(corpus.vocabulary.back().first, "UNK");
  for (std::size_t i = 0; i + 1 < corpus.vocabulary.size(); ++i) {
    EXPECT_GE(corpus.vocabulary[i].second, 5u);
  }
}

TEST(Corpus, IntegrityCheckCatchesLeakageAndLabels) {
  auto examples = taxi_corpus().examples;
  auto leaked = examples;
  leaked[1].split = leaked[0].split == Split::train ? Split::test : Split::train;
  EXPECT_FALSE(check_corpus(leaked, taxi_corpus().vocabulary).ok());
  auto mislabelled = examples;
  mislabelled[0].target_tokens.pop_back();
  EXPECT_FALSE(check_corpus(mislabelled, taxi_corpus().vocabulary).ok());
  auto bad_vocab = taxi_corpus().vocabulary;
  bad_vocab.front().second += 1;
  EXPECT_FALSE(check_corpus(examples, bad_vocab).ok());
}

TEST(Corpus, DepthFourDescriptionsAreLong) {
  double words = 0;
  std::size_t n = 0;
  for (const auto& e : taxi_corpus().examples) {
    if (e.tree.depth() != 4 || e.provenance != Provenance::base) continue;
    std::istringstream s(e.text);
    std::string w;
    while (s >> w) ++words;
    ++n;
  }
  ASSERT_GT(n, 0u);
  EXPECT_GE(words / static_cast<double>(n), 40.0);
}

TEST(Corpus, DeterministicBytes) {
  const auto a = build_corpus(PredicateDictionary::highway(), small_config(60, 3));
  const auto b = build_corpus(PredicateDictionary::highway(), small_config(60, 3));
  std::ostringstream sa, sb;
  write_corpus(sa, a.examples);
  write_corpus(sb, b.examples);
  EXPECT_EQ(sa.str(), sb.str());
  const auto c = build_corpus(PredicateDictionary::highway(), small_config(60, 4));
  std::ostringstream sc;
  write_corpus(sc, c.examples);
  EXPECT_NE(sa.str(), sc.str());
}

TEST(Corpus, FileRoundTrip) {
  const auto corpus = build_corpus(PredicateDictionary::highway(), small_config(40, 1));
  std::stringstream io;
  write_corpus(io, corpus.examples);
  const auto back = read_corpus(io);
  ASSERT_EQ(back.size(), corpus.examples.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    EXPECT_EQ(back[i].id, corpus.examples[i].id);
    EXPECT_EQ(back[i].tree, corpus.examples[i].tree);
    EXPECT_EQ(back[i].text, corpus.examples[i].text);
  }
  std::stringstream vio;
  write_vocabulary(vio, corpus.vocabulary);
  EXPECT_EQ(read_vocabulary(vio), corpus.vocabulary);
  std::stringstream bad("{\"id\":\"x\"}\n");
  EXPECT_THROW(read_corpus(bad), SchemaError);
}

TEST(Corpus, ConfigErrors) {
  auto c = small_config(10);
  c.split_ratios = {0.5, 0.5, 0.5};
  EXPECT_THROW(build_corpus(PredicateDictionary::taxi(), c), std::invalid_argument);
  auto d = small_config(100000);
  d.max_depth = 2;
  EXPECT_THROW(build_corpus(PredicateDictionary::taxi(), d), std::invalid_argument);
}
