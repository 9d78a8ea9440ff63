#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <sstream>

#include "oracles.hpp"
#include "polsynth/dsl.hpp"
#include "polsynth/error.hpp"
#include "polsynth/policy.hpp"
#include "polsynth/ppo.hpp"
#include "polsynth/stats.hpp"

using namespace polsynth;

namespace {

std::vector<Sample> random_batch(const Policy& policy, std::size_t n, std::mt19937_64& rng,
                                 bool on_policy) {
  std::vector<Sample> batch;
  std::normal_distribution<double> adv(0.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    auto x = oracle::random_input(policy.observation_dim(), rng);
    const auto pi = policy.probabilities(x);
    const std::size_t a = rng() % policy.action_count();
    // Off-policy samples perturb the behaviour probability so ratios differ from 1
    // without leaving the clip range.
    const double old = on_policy ? pi[a] : pi[a] * (1.0 + 0.1 * (adv(rng) > 0 ? 1 : -1) * 0.5);
    batch.push_back({std::move(x), a, old, adv(rng), 0.0});
  }
  return batch;
}

DdtPolicy small_policy(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return DdtPolicy(oracle::random_params(2, 5, 4, rng));
}

PpoConfig quick_config(std::size_t episodes) {
  PpoConfig c;
  c.total_episodes = episodes;
  c.rollout_steps = 256;
  c.minibatch = 64;
  c.epochs = 2;
  return c;
}

}  // namespace

// ---- advantages -------------------------------------------------------------

TEST(Gae, LambdaOneGammaOneIsReturnMinusValue) {
  const std::vector<double> rewards{1, -2, 3, 0.5, 4, -1};
  const std::vector<double> values{0.3, -0.2, 1.1, 0.0, 2.0, 0.7};
  const bool dones[] = {false, false, true, false, false, false};
  const double bootstrap = 1.5;
  const auto adv = compute_gae(rewards, values, dones, bootstrap, 1.0, 1.0);
  // Empirical returns, cut at the terminal step and bootstrapped at the end.
  const double returns[] = {1 - 2 + 3, -2 + 3, 3, 0.5 + 4 - 1 + bootstrap, 4 - 1 + bootstrap,
                            -1 + bootstrap};
  for (std::size_t t = 0; t < rewards.size(); ++t) {
    EXPECT_NEAR(adv[t], returns[t] - values[t], 1e-12) << t;
  }
}

TEST(Gae, MatchesDiscountedDeltaSum) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0.0, 1.0);
  const std::size_t len = 30;
  std::vector<double> rewards(len), values(len);
  for (auto& r : rewards) r = n(rng);
  for (auto& v : values) v = n(rng);
  const bool dones[len] = {};
  const double gamma = 0.9, lambda = 0.7, last = 0.4;
  const auto adv = compute_gae(rewards, values, std::span<const bool>(dones, len), last, gamma, lambda);
  for (std::size_t t = 0; t < len; ++t) {
    double sum = 0.0;
    for (std::size_t k = t; k < len; ++k) {
      const double next = k + 1 < len ? values[k + 1] : last;
      const double delta = rewards[k] + gamma * next - values[k];
      sum += std::pow(gamma * lambda, static_cast<double>(k - t)) * delta;
    }
    EXPECT_NEAR(adv[t], sum, 1e-12);
  }
}

TEST(Gae, LengthMismatch) {
  const std::vector<double> r{1, 2}, v{1};
  const bool d[] = {false, false};
  EXPECT_THROW(compute_gae(r, v, d, 0, 1, 1), DimensionMismatch);
}

// ---- objective --------------------------------------------------------------

TEST(PpoObjective, ZeroClipSingleEpochIsVanillaPolicyGradient) {
  std::mt19937_64 rng(1);
  auto policy = small_policy(3);
  const auto batch = random_batch(policy, 64, rng, true);
  const auto ppo = ppo_objective(policy, batch, 0.0, 0.0);

  // Vanilla policy gradient loss -mean(A log pi) and its gradient, by finite differences.
  double vanilla_surrogate = 0.0;
  for (const auto& s : batch) vanilla_surrogate -= s.advantage / batch.size();
  EXPECT_NEAR(ppo.loss, vanilla_surrogate, 1e-12);
  const auto numeric = oracle::numeric_gradient(
      [&](const std::vector<double>& theta) {
        auto copy = policy;
        copy.set_parameters(theta);
        double loss = 0.0;
        for (const auto& s : batch) {
          loss -= s.advantage * std::log(copy.probabilities(s.observation)[s.action]);
        }
        return loss / static_cast<double>(batch.size());
      },
      policy.parameters());
  EXPECT_LT(oracle::max_relative_error(ppo.grad, numeric), 1e-5);
}

TEST(PpoObjective, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(2);
  auto policy = small_policy(4);
  const auto batch = random_batch(policy, 32, rng, false);
  const double clip = 0.2, entropy_coef = 0.05;
  const auto analytic = ppo_objective(policy, batch, clip, entropy_coef);
  const auto numeric = oracle::numeric_gradient(
      [&](const std::vector<double>& theta) {
        auto copy = policy;
        copy.set_parameters(theta);
        return ppo_objective(copy, batch, clip, entropy_coef).loss;
      },
      policy.parameters());
  EXPECT_LT(oracle::max_relative_error(analytic.grad, numeric), 1e-4);
}

TEST(PpoObjective, ClippedSamplesContributeNoSurrogateGradient) {
  auto policy = small_policy(5);
  const std::vector<double> x{0.2, 0.1, -0.3, 0.5, 0.0};
  const auto pi = policy.probabilities(x);
  // Ratio 2 with a positive advantage sits above 1 + clip: only entropy remains.
  const std::vector<Sample> batch{{x, 0, pi[0] / 2.0, 1.0, 0.0}};
  const auto out = ppo_objective(policy, batch, 0.2, 0.0);
  for (double g : out.grad) EXPECT_EQ(g, 0.0);
  EXPECT_NEAR(out.loss, -1.2, 1e-12);
}

TEST(PpoObjective, MlpGradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(6);
  MlpPolicy policy(5, 4, 8, {}, 6);
  auto batch = random_batch(policy, 16, rng, false);
  const auto analytic = ppo_objective(policy, batch, 0.2, 0.01);
  const auto numeric = oracle::numeric_gradient(
      [&](const std::vector<double>& theta) {
        auto copy = policy;
        copy.set_parameters(theta);
        return ppo_objective(copy, batch, 0.2, 0.01).loss;
      },
      policy.parameters());
  EXPECT_LT(oracle::max_relative_error(analytic.grad, numeric), 1e-4);
}

// ---- training ---------------------------------------------------------------

TEST(Train, ZeroEpisodesLeavesPolicyUnchanged) {
  DdtPolicy policy(random_ddt(Domain::taxi, 8, 1));
  const auto before = policy.parameters();
  const auto log = train(policy, EnvConfig::defaults(Domain::taxi), quick_config(0));
  EXPECT_TRUE(log.episode_returns.empty());
  EXPECT_TRUE(log.updates.empty());
  EXPECT_EQ(policy.parameters(), before);
}

TEST(Train, SingleLeafOnlyMovesLeafLogits) {
  const auto& dict = PredicateDictionary::taxi();
  DdtPolicy policy(init_from_lexical(LexicalTree(make_leaf("wait")), dict));
  const auto before = policy.params();
  const auto log = train(policy, EnvConfig::defaults(Domain::taxi, 1), quick_config(30));
  EXPECT_EQ(log.episode_returns.size(), 30u);
  EXPECT_EQ(policy.params().nodes, before.nodes);
  EXPECT_TRUE(policy.params().decisions.empty());
  EXPECT_NE(policy.params().leaves, before.leaves);
}

TEST(Train, DistributionStaysValidEveryUpdate) {
  DdtPolicy policy(random_ddt(Domain::highway, 8, 2));
  std::mt19937_64 rng(3);
  std::size_t updates = 0;
  auto observer = [&](const Policy& p, const UpdateStats& stats) {
    ++updates;
    EXPECT_TRUE(std::isfinite(stats.policy_loss));
    const auto& params = dynamic_cast<const DdtPolicy&>(p).params();
    for (int i = 0; i < 20; ++i) {
      const auto x = oracle::random_input(18, rng, 5.0);
      const auto w = leaf_weights(params, x);
      EXPECT_NEAR(std::accumulate(w.begin(), w.end(), 0.0), 1.0, 1e-9);
      const auto pi = p.probabilities(x);
      EXPECT_NEAR(std::accumulate(pi.begin(), pi.end(), 0.0), 1.0, 1e-9);
    }
  };
  const auto log = train(policy, EnvConfig::defaults(Domain::highway, 2), quick_config(40), "t",
                         observer);
  EXPECT_EQ(updates, log.updates.size());
  EXPECT_GT(updates, 1u);
}

TEST(Train, DivergenceIsReported) {
  DdtPolicy policy(random_ddt(Domain::taxi, 4, 1));
  auto config = quick_config(200);
  config.learning_rate = std::nan("");
  EXPECT_THROW(train(policy, EnvConfig::defaults(Domain::taxi), config), TrainingDiverged);
}

TEST(Train, ShapeMismatch) {
  DdtPolicy policy(random_ddt(Domain::taxi, 4, 1));
  EXPECT_THROW(train(policy, EnvConfig::defaults(Domain::highway), quick_config(5)),
               DimensionMismatch);
}

TEST(Train, RunsAreReproducibleAcrossThreadCounts) {
  const DdtPolicy initial(random_ddt(Domain::taxi, 8, 3));
  const std::vector<std::uint64_t> seeds{10, 11, 12};
  const auto one = train_runs(initial, EnvConfig::defaults(Domain::taxi), quick_config(25), seeds,
                              "x", 1);
  const auto three = train_runs(initial, EnvConfig::defaults(Domain::taxi), quick_config(25),
                                seeds, "x", 3);
  ASSERT_EQ(one.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(one[i].log.episode_returns, three[i].log.episode_returns);
    EXPECT_EQ(one[i].policy->parameters(), three[i].policy->parameters());
  }
  EXPECT_NE(one[0].log.episode_returns, one[1].log.episode_returns);
}

TEST(Train, SelectBestPicksHighestScore) {
  const auto& dict = PredicateDictionary::taxi();
  const std::vector<DdtParams> candidates{
      init_from_lexical(LexicalTree(make_leaf("wait")), dict),
      init_from_lexical(parse_dsl("if at_city:\n  drive_airport\nelse:\n  drive_city", dict), dict)};
  const auto selection =
      select_best_initialization(candidates, EnvConfig::defaults(Domain::taxi), quick_config(20), 20);
  ASSERT_EQ(selection.scores.size(), 2u);
  EXPECT_EQ(selection.best, 1u);
  EXPECT_GT(selection.scores[1], selection.scores[0]);
}

TEST(TrainingLog, RoundTrip) {
  DdtPolicy policy(random_ddt(Domain::taxi, 4, 1));
  const auto log = train(policy, EnvConfig::defaults(Domain::taxi, 5), quick_config(12), "demo");
  std::stringstream io;
  write_training_log(io, log);
  const auto back = read_training_log(io);
  EXPECT_EQ(back.label, "demo");
  EXPECT_EQ(back.policy_kind, "ddt");
  EXPECT_EQ(back.episode_returns, log.episode_returns);
  EXPECT_EQ(back.updates.size(), log.updates.size());
  EXPECT_EQ(back.config.total_episodes, 12u);
  EXPECT_EQ(back.env.seed, 5u);

  std::stringstream truncated(io.str().substr(0, io.str().rfind("{\"episodes\"")));
  std::stringstream no_footer;
  {
    std::istringstream lines(io.str());
    std::string line;
    while (std::getline(lines, line)) {
      if (line.find("\"footer\"") == std::string::npos) no_footer << line << '\n';
    }
  }
  EXPECT_THROW(read_training_log(no_footer), SchemaError);
}

TEST(TrainingLog, NaturalLanguageInitImprovesOnTaxi) {
  const auto& dict = PredicateDictionary::taxi();
  const auto tree = parse_dsl(
      "if at_airport:\n  drive_city\nelse:\n  if at_city:\n    drive_airport\n  else:\n"
      "    drive_airport",
      dict);
  InitConfig init;
  init.leaf_concentration = 0.4;
  const DdtPolicy initial(init_from_lexical(tree, dict, init));
  PpoConfig config;
  config.total_episodes = 600;
  const std::vector<std::uint64_t> seeds{1, 2, 3};
  const auto runs = train_runs(initial, EnvConfig::defaults(Domain::taxi), config, seeds, "nl", 1);
  std::vector<double> first, last;
  for (const auto& r : runs) {
    const auto series = rolling_reward(r.log.episode_returns, 100);
    first.push_back(series.front());
    last.push_back(series.back());
  }
  EXPECT_GT(median(last), median(first));
}

// ---- statistics -------------------------------------------------------------

TEST(Stats, RollingReward) {
  const std::vector<double> constant(150, 2.5);
  for (double v : rolling_reward(constant, 100)) EXPECT_DOUBLE_EQ(v, 2.5);
  std::vector<double> ramp(200);
  std::iota(ramp.begin(), ramp.end(), 1.0);
  const auto series = rolling_reward(ramp, 100);
  EXPECT_EQ(series.size(), 101u);
  EXPECT_DOUBLE_EQ(series[0], 50.5);
  EXPECT_DOUBLE_EQ(series.back(), 150.5);
  EXPECT_THROW(rolling_reward(std::vector<double>(50, 1.0), 100), std::invalid_argument);
}

TEST(Stats, SummarizeRuns) {
  std::vector<std::vector<double>> runs;
  for (int k = 1; k <= 5; ++k) {
    std::vector<double> r(100, static_cast<double>(k));
    r.insert(r.end(), 50, 10.0 * k);
    runs.push_back(r);
  }
  const auto s = summarize_runs(runs, 100);
  EXPECT_DOUBLE_EQ(s.median_initial, 3.0);
  EXPECT_DOUBLE_EQ(s.median_max_rolling, (50 * 3.0 + 50 * 30.0) / 100);
  // Standard error of {1..5}: sd sqrt(2.5) over sqrt(5).
  EXPECT_NEAR(s.se_initial, std::sqrt(2.5) / std::sqrt(5.0), 1e-12);

  const std::vector<std::vector<double>> same(5, runs[0]);
  const auto t = summarize_runs(same, 100);
  EXPECT_DOUBLE_EQ(t.median_initial, 1.0);
  EXPECT_DOUBLE_EQ(t.se_initial, 0.0);
  EXPECT_DOUBLE_EQ(t.se_max_rolling, 0.0);
  EXPECT_THROW(summarize_runs(std::span(runs).first(1), 100), std::invalid_argument);
}

TEST(Stats, SummaryMatchesRecomputation) {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> n(0.0, 3.0);
  std::vector<std::vector<double>> runs(4, std::vector<double>(230));
  for (auto& r : runs) {
    for (double& v : r) v = n(rng);
  }
  const auto s = summarize_runs(runs, 100);
  std::vector<double> initial, best;
  for (const auto& r : runs) {
    initial.push_back(std::accumulate(r.begin(), r.begin() + 100, 0.0) / 100);
    double top = -1e300;
    for (std::size_t k = 0; k + 100 <= r.size(); ++k) {
      top = std::max(top, std::accumulate(r.begin() + k, r.begin() + k + 100, 0.0) / 100);
    }
    best.push_back(top);
  }
  std::sort(initial.begin(), initial.end());
  std::sort(best.begin(), best.end());
  EXPECT_NEAR(s.median_initial, (initial[1] + initial[2]) / 2, 1e-12);
  EXPECT_NEAR(s.median_max_rolling, (best[1] + best[2]) / 2, 1e-12);
}
