#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "polsynth/env.hpp"
#include "polsynth/policy.hpp"

namespace polsynth {

struct PpoConfig {
  double gamma = 0.99;
  double gae_lambda = 0.95;
  double clip = 0.2;
  double learning_rate = 3e-3;
  double value_learning_rate = 1e-3;
  std::size_t epochs = 4;
  std::size_t minibatch = 256;
  std::size_t rollout_steps = 2048;
  std::size_t total_episodes = 1000;
  double entropy_coef = 0.01;
  double value_coef = 0.5;
  double max_grad_norm = 0.5;
  std::size_t value_hidden = 64;
  std::uint64_t seed = 0;

  /// Learning rate used for MLP policies unless overridden.
  static constexpr double kMlpLearningRate = 1e-3;
};

nlohmann::json to_json(const PpoConfig& config);
PpoConfig ppo_config_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const EnvConfig& config);
EnvConfig env_config_from_json(const nlohmann::json& doc);

/// One on-policy transition as consumed by the update.
struct Sample {
  Observation observation;
  std::size_t action;
  double old_probability;  // pi_old(action | observation)
  double advantage;
  double value_target;
};

/// GAE(gamma, lambda) advantages. `dones[t]` cuts bootstrapping after step
/// t; `last_value` bootstraps past the final step when it is not terminal.
std::vector<double> compute_gae(std::span<const double> rewards, std::span<const double> values,
                                std::span<const bool> dones, double last_value, double gamma,
                                double lambda);

struct Objective {
  double loss;
  double entropy;  // mean policy entropy over the batch
  std::vector<double> grad;
};

/// Mean clipped-surrogate loss minus the entropy bonus over `batch`, with
/// its gradient in the policy's flat parameter layout. At a tie between the
/// clipped and unclipped terms the unclipped gradient is used.
Objective ppo_objective(const Policy& policy, std::span<const Sample> batch, double clip,
                        double entropy_coef);

struct UpdateStats {
  std::size_t episodes_completed;
  std::size_t samples;
  double policy_loss;
  double value_loss;
  double entropy;
};

struct TrainingLog {
  std::string label;
  std::string policy_kind;
  EnvConfig env;
  PpoConfig config;
  std::vector<double> episode_returns;
  std::vector<UpdateStats> updates;
  double wall_clock_seconds = 0.0;
};

class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using UpdateObserver = std::function<void(const Policy&, const UpdateStats&)>;

/// Clipped-surrogate PPO with GAE and a separate tanh value network
/// (one hidden layer of config.value_hidden units). Trains `policy` in place
/// until config.total_episodes episodes have finished. Throws
/// TrainingDiverged when a loss or gradient turns non-finite.
TrainingLog train(Policy& policy, const EnvConfig& env, const PpoConfig& config,
                  const std::string& label = "", const UpdateObserver& observer = {});

struct RunResult {
  TrainingLog log;
  std::unique_ptr<Policy> policy;
};

/// Independent runs, one per seed, each on its own clone of `initial`.
/// Runs execute on up to `threads` worker threads.
std::vector<RunResult> train_runs(const Policy& initial, const EnvConfig& env,
                                  const PpoConfig& config, std::span<const std::uint64_t> seeds,
                                  const std::string& label, std::size_t threads);

struct Selection {
  std::size_t best;
  std::vector<double> scores;  // mean return over each candidate's last episodes
};

/// Trains every candidate for config.total_episodes episodes and returns the
/// one with the highest mean return over its final `window` episodes.
Selection select_best_initialization(std::span<const DdtParams> candidates, const EnvConfig& env,
                                     const PpoConfig& config, std::size_t window = 100);

/// Mean return over `episodes` rollouts of `policy`, sampling actions.
double evaluate_policy(const Policy& policy, const EnvConfig& env, std::size_t episodes,
                       std::uint64_t seed);

/// Records one sampled episode.
std::vector<TrajectoryRecord> rollout_episode(const Policy& policy, const EnvConfig& env,
                                              std::uint64_t seed);

/// Line-delimited log: a header record, one record per episode and per
/// update, then a footer.
void write_training_log(std::ostream& out, const TrainingLog& log);
TrainingLog read_training_log(std::istream& in);

}  // namespace polsynth
