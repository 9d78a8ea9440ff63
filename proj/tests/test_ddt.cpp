#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "oracles.hpp"
#include "polsynth/corpus.hpp"
#include "polsynth/ddt.hpp"
#include "polsynth/dsl.hpp"
#include "polsynth/error.hpp"
#include "polsynth/policy.hpp"

using namespace polsynth;

namespace {

// Four anonymous features and two actions, matching the worked example.
const PredicateDictionary& toy_dict() {
  static const PredicateDictionary dict(
      Domain::taxi, {{"f0"}, {"f1"}, {"f2"}, {"f3"}},
      {{"f2_gt_3", 2, 3.0, Direction::greater},
       {"f1_gt_0", 1, 0.0, Direction::greater},
       {"f0_gt_1", 0, 1.0, Direction::greater}},
      {{"left", 0}, {"right", 1}});
  return dict;
}

DdtParams worked_example() {
  DdtParams p = balanced_ddt(2, 4, 2);
  p.alpha = 1.0;
  p.leaf_mode = LeafMode::probabilities;
  p.decisions[0] = {{0, 0, 1, 0}, 3};
  p.decisions[1] = {{0, 0.6, 0, 0.5}, 0};
  p.decisions[2] = {{1, 0.5, 0, 0}, 1};
  p.leaves = {{0, 1}, {1, 0}, {0, 1}, {1, 0}};
  return p;
}

const std::vector<double> kExampleInput{0.1, 0.4, 2.0, -0.3};

}  // namespace

TEST(Ddt, WorkedExampleForward) {
  const auto p = worked_example();
  const auto w = leaf_weights(p, kExampleInput);
  const double expected_w[] = {0.140, 0.129, 0.241, 0.489};
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(w[i], expected_w[i], 5e-3) << "leaf " << i;
  const auto pi = forward(p, kExampleInput);
  EXPECT_NEAR(pi[0], 0.618, 5e-3);
  EXPECT_NEAR(pi[1], 0.382, 5e-3);
  // Closed form of the same quantities.
  const double d1 = oracle::sigmoid(2.0 - 3.0);
  const double d2 = oracle::sigmoid(0.6 * 0.4 + 0.5 * -0.3);
  const double d3 = oracle::sigmoid(0.1 + 0.5 * 0.4 - 1.0);
  EXPECT_NEAR(w[0], d1 * d2, 1e-15);
  EXPECT_NEAR(w[3], (1 - d1) * (1 - d3), 1e-15);
}

TEST(Ddt, WorkedExampleDiscretization) {
  const auto result = discretize(worked_example(), toy_dict());
  const auto& h = result.hard;
  EXPECT_EQ(h.decisions[0].weights, (std::vector<double>{0, 0, 1, 0}));
  EXPECT_EQ(h.decisions[0].comparator, 3.0);
  EXPECT_EQ(h.decisions[1].weights, (std::vector<double>{0, 1, 0, 0}));
  EXPECT_EQ(h.decisions[1].comparator, 0.0);
  EXPECT_EQ(h.decisions[2].weights, (std::vector<double>{1, 0, 0, 0}));
  EXPECT_EQ(h.decisions[2].comparator, 1.0);
  EXPECT_EQ(h.leaves, worked_example().leaves);
  EXPECT_TRUE(std::isinf(h.alpha));

  const auto& root = result.tree.root();
  EXPECT_EQ(root.token, "f2_gt_3");
  EXPECT_FALSE(root.threshold);
  EXPECT_EQ(root.on_true->token, "f1_gt_0");
  EXPECT_EQ(root.on_false->token, "f0_gt_1");
  EXPECT_EQ(root.on_true->on_true->token, "right");
}

TEST(Ddt, NegativeWeightKeepsComparisonDirection) {
  DdtParams p = balanced_ddt(1, 4, 2);
  p.decisions[0] = {{0, -2.0, 0.5, 0}, -1.0};  // -2 x1 > -1  <=>  x1 < 0.5
  p.leaves = {{3, 0}, {0, 3}};
  const auto hard = discretize(p, toy_dict()).hard;
  EXPECT_EQ(hard.decisions[0].weights, (std::vector<double>{0, -1, 0, 0}));
  EXPECT_EQ(hard.decisions[0].comparator, -0.5);
  const std::vector<double> low{0, 0.2, 0, 0}, high{0, 0.8, 0, 0};
  EXPECT_EQ(forward(hard, low)[0], 1.0);
  EXPECT_EQ(forward(hard, high)[1], 1.0);
}

TEST(Ddt, DistributionInvariants) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const auto p = oracle::random_params(3, 5, 4, rng);
    const auto x = oracle::random_input(5, rng);
    const auto w = leaf_weights(p, x);
    double total = 0;
    for (double v : w) {
      EXPECT_GE(v, 0.0);
      total += v;
    }
    EXPECT_NEAR(total, 1.0, 1e-9);
    const auto pi = forward(p, x);
    double sum = 0;
    for (double v : pi) sum += v;
    EXPECT_NEAR(sum, 1.0, 1e-9);
  }
}

TEST(Ddt, MatchesPathEnumerationOracle) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const auto p = oracle::random_params(1 + trial % 3, 6, 3, rng);
    const auto x = oracle::random_input(6, rng);
    const auto got = forward(p, x);
    const auto want = oracle::forward(p, x);
    for (std::size_t a = 0; a < got.size(); ++a) EXPECT_NEAR(got[a], want[a], 1e-12);
  }
}

TEST(Ddt, LogProbGradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(7);
  for (Domain domain : {Domain::taxi, Domain::highway}) {
    const std::size_t obs = observation_dim(domain);
    const std::size_t actions = action_count(domain);
    for (int trial = 0; trial < 20; ++trial) {
      auto p = oracle::random_params(3, obs, actions, rng);
      p.alpha_learnable = trial % 2 == 1;
      const auto x = oracle::random_input(obs, rng, 0.5);
      const std::size_t a = rng() % actions;
      const auto analytic = pack_gradient(log_prob_and_grads(p, x, a).grad, p);
      const auto numeric = oracle::numeric_gradient(
          [&](const std::vector<double>& theta) {
            DdtParams q = p;
            unpack_parameters(theta, q);
            return std::log(oracle::forward(q, x)[a]);
          },
          pack_parameters(p));
      EXPECT_LT(oracle::max_relative_error(analytic, numeric), 1e-4);

      const auto input_grad = log_prob_and_grads(p, x, a).grad.input;
      const auto input_numeric = oracle::numeric_gradient(
          [&](const std::vector<double>& v) { return std::log(oracle::forward(p, v)[a]); }, x);
      EXPECT_LT(oracle::max_relative_error(input_grad, input_numeric), 1e-4);
    }
  }
}

TEST(Ddt, ProbabilityLeafGradients) {
  std::mt19937_64 rng(9);
  auto p = oracle::random_params(2, 3, 3, rng);
  p.leaf_mode = LeafMode::probabilities;
  p.leaves = {{0.2, 0.3, 0.5}, {0.6, 0.1, 0.3}, {0.0, 0.0, 1.0}, {0.4, 0.4, 0.2}};
  const std::vector<double> x{0.3, -0.1, 0.8};
  const std::vector<double> g{0.7, -1.2, 0.4};
  const auto analytic = pack_gradient(backward(p, x, g), p);
  const auto numeric = oracle::numeric_gradient(
      [&](const std::vector<double>& theta) {
        DdtParams q = p;
        unpack_parameters(theta, q);
        const auto pi = oracle::forward(q, x);
        return g[0] * pi[0] + g[1] * pi[1] + g[2] * pi[2];
      },
      pack_parameters(p));
  EXPECT_LT(oracle::max_relative_error(analytic, numeric), 1e-6);
}

TEST(Ddt, ZeroProbabilityActionIsAnError) {
  auto p = worked_example();
  p.alpha = std::numeric_limits<double>::infinity();
  EXPECT_THROW(log_prob_and_grads(p, kExampleInput, 1), std::domain_error);
}

TEST(Ddt, InputChecks) {
  const auto p = worked_example();
  EXPECT_THROW(forward(p, std::vector<double>{1, 2}), DimensionMismatch);
  EXPECT_THROW(forward(p, std::vector<double>{1, 2, NAN, 0}), std::domain_error);
}

TEST(Ddt, InitFromLexicalAgreesWithCrispTree) {
  const auto& dict = PredicateDictionary::taxi();
  const auto tree = parse_dsl(
      "if at_city:\n  drive_airport\nelse:\n  if traffic_jam:\n    drive_village\n  else:\n"
      "    drive_city",
      dict);
  InitConfig config;
  config.alpha = 50.0;
  const auto p = init_from_lexical(tree, dict, config);
  EXPECT_EQ(p.decisions.size(), 2u);
  EXPECT_EQ(p.decisions[0].weights, (std::vector<double>{0, 1, 0, 0, 0}));
  EXPECT_EQ(p.decisions[0].comparator, 0.5);
  std::mt19937_64 rng(1);
  for (int i = 0; i < 50; ++i) {
    std::vector<double> x(5, 0.0);
    x[rng() % 3] = 1.0;
    x[3] = std::uniform_real_distribution<double>(0, 1)(rng);
    if (std::abs(x[3] - 0.5) < 0.1) continue;
    const auto pi = forward(p, x);
    const auto best = static_cast<std::size_t>(std::max_element(pi.begin(), pi.end()) - pi.begin());
    EXPECT_EQ(best, oracle::crisp_action(tree.root(), dict, x));
  }
}

TEST(Ddt, InitLeafConcentration) {
  const auto& dict = PredicateDictionary::taxi();
  const LexicalTree leaf(make_leaf("wait"));
  const auto p = init_from_lexical(leaf, dict);
  const auto q = leaf_distribution(p, 0);
  EXPECT_NEAR(q[3], 0.9, 1e-12);
  EXPECT_NEAR(q[0], 0.1 / 3, 1e-12);
  InitConfig bad;
  bad.leaf_concentration = 0.2;
  EXPECT_THROW(init_from_lexical(leaf, dict, bad), std::invalid_argument);
}

TEST(Ddt, LessPredicateEncodesNegatedWeights) {
  const auto& dict = PredicateDictionary::highway();
  const LexicalTree t(make_decision("car_ahead_close", make_leaf("slower"), make_leaf("faster")));
  const auto p = init_from_lexical(t, dict);
  EXPECT_EQ(p.decisions[0].weights[2], -1.0);
  EXPECT_EQ(p.decisions[0].comparator, -15.0);
}

TEST(Ddt, DiscretizeInvertsInitOnSampledTrees) {
  Rng rng(21);
  for (int i = 0; i < 100; ++i) {
    for (Domain domain : {Domain::taxi, Domain::highway}) {
      const auto& dict = PredicateDictionary::for_domain(domain);
      const auto tree = sample_tree(dict, 1, 4, rng);
      EXPECT_EQ(discretize(init_from_lexical(tree, dict), dict).tree, tree);
    }
  }
}

TEST(Ddt, DiscretizeKeepsLearnedThreshold) {
  const auto& dict = PredicateDictionary::taxi();
  const auto tree = parse_dsl("if wait_time > 4:\n  wait\nelse:\n  drive_airport", dict);
  auto p = init_from_lexical(tree, dict);
  EXPECT_EQ(discretize(p, dict).tree, tree);
  // Shrink the weight: the threshold in feature units is unchanged.
  p.decisions[0].weights[4] = 0.5;
  p.decisions[0].comparator = 0.2;
  EXPECT_EQ(discretize(p, dict).tree, tree);
}

TEST(Ddt, HardTreeMatchesCrispOracle) {
  std::mt19937_64 rng(13);
  for (int t = 0; t < 30; ++t) {
    const auto p = oracle::random_params(3, 5, 4, rng);
    const auto d = discretize(p, PredicateDictionary::taxi());
    for (int i = 0; i < 30; ++i) {
      const auto x = oracle::random_input(5, rng);
      const auto pi = forward(d.hard, x);
      const auto action = oracle::crisp_action(d.tree.root(), PredicateDictionary::taxi(), x);
      EXPECT_EQ(pi[action], 1.0);
    }
  }
}

TEST(Ddt, SharpeningApproachesHardTree) {
  std::mt19937_64 rng(17);
  auto p = oracle::random_params(2, 4, 3, rng);
  const auto x = oracle::random_input(4, rng);
  p.alpha = std::numeric_limits<double>::infinity();
  const auto hard = forward(p, x);
  double previous = 1e9;
  for (double alpha : {1.0, 10.0, 100.0, 1000.0}) {
    p.alpha = alpha;
    const auto soft = forward(p, x);
    double gap = 0;
    for (std::size_t a = 0; a < soft.size(); ++a) gap += std::abs(soft[a] - hard[a]);
    EXPECT_LE(gap, previous + 1e-12);
    previous = gap;
  }
  EXPECT_LT(previous, 1e-3);
}

TEST(Ddt, PackUnpackAndJsonRoundTrip) {
  std::mt19937_64 rng(19);
  auto p = oracle::random_params(3, 5, 4, rng);
  p.alpha_learnable = true;
  const auto flat = pack_parameters(p);
  EXPECT_EQ(flat.size(), parameter_count(p));
  EXPECT_EQ(flat.size(), 7u * 6 + 8u * 4 + 1);
  DdtParams q = balanced_ddt(3, 5, 4);
  q.alpha_learnable = true;
  unpack_parameters(flat, q);
  q.leaf_mode = p.leaf_mode;
  EXPECT_EQ(q, p);
  EXPECT_EQ(ddt_from_json(ddt_to_json(p)), p);
  auto hard = discretize(p, PredicateDictionary::taxi()).hard;
  EXPECT_EQ(ddt_from_json(ddt_to_json(hard)), hard);
  EXPECT_THROW(unpack_parameters(std::vector<double>{1.0}, q), std::exception);
}

TEST(Policy, RandomDdtShape) {
  const auto a = random_ddt(Domain::taxi, 8, 4);
  EXPECT_EQ(a, random_ddt(Domain::taxi, 8, 4));
  EXPECT_EQ(a.decisions.size(), 7u);
  EXPECT_EQ(a.leaves.size(), 8u);
  EXPECT_THROW(random_ddt(Domain::taxi, 6, 4), std::invalid_argument);
  std::mt19937_64 rng(2);
  for (int i = 0; i < 100; ++i) {
    const auto pi = forward(a, oracle::random_input(5, rng));
    double sum = 0;
    for (double v : pi) {
      EXPECT_GE(v, 0.0);
      sum += v;
    }
    EXPECT_NEAR(sum, 1.0, 1e-9);
  }
}
