#include "polsynth/ppo.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <istream>
#include <mutex>
#include <numeric>
#include <ostream>
#include <thread>

#include "polsynth/error.hpp"

namespace polsynth {

// ---- config <-> json ---------------------------------------------------------

nlohmann::json to_json(const PpoConfig& c) {
  return {{"gamma", c.gamma},
          {"gae_lambda", c.gae_lambda},
          {"clip", c.clip},
          {"learning_rate", c.learning_rate},
          {"value_learning_rate", c.value_learning_rate},
          {"epochs", c.epochs},
          {"minibatch", c.minibatch},
          {"rollout_steps", c.rollout_steps},
          {"total_episodes", c.total_episodes},
          {"entropy_coef", c.entropy_coef},
          {"value_coef", c.value_coef},
          {"max_grad_norm", c.max_grad_norm},
          {"value_hidden", c.value_hidden},
          {"seed", c.seed}};
}

PpoConfig ppo_config_from_json(const nlohmann::json& doc) {
  PpoConfig c;
  c.gamma = doc.value("gamma", c.gamma);
  c.gae_lambda = doc.value("gae_lambda", c.gae_lambda);
  c.clip = doc.value("clip", c.clip);
  c.learning_rate = doc.value("learning_rate", c.learning_rate);
  c.value_learning_rate = doc.value("value_learning_rate", c.value_learning_rate);
  c.epochs = doc.value("epochs", c.epochs);
  c.minibatch = doc.value("minibatch", c.minibatch);
  c.rollout_steps = doc.value("rollout_steps", c.rollout_steps);
  c.total_episodes = doc.value("total_episodes", c.total_episodes);
  c.entropy_coef = doc.value("entropy_coef", c.entropy_coef);
  c.value_coef = doc.value("value_coef", c.value_coef);
  c.max_grad_norm = doc.value("max_grad_norm", c.max_grad_norm);
  c.value_hidden = doc.value("value_hidden", c.value_hidden);
  c.seed = doc.value("seed", c.seed);
  return c;
}

nlohmann::json to_json(const EnvConfig& c) {
  nlohmann::json doc{{"domain", std::string(to_string(c.domain))},
                     {"seed", c.seed},
                     {"episode_length", c.episode_length},
                     {"highway_cars", c.highway_cars}};
  if (c.fixed_traffic) doc["fixed_traffic"] = *c.fixed_traffic;
  return doc;
}

EnvConfig env_config_from_json(const nlohmann::json& doc) {
  EnvConfig c = EnvConfig::defaults(parse_domain(doc.at("domain").get<std::string>()));
  c.seed = doc.value("seed", c.seed);
  c.episode_length = doc.value("episode_length", c.episode_length);
  c.highway_cars = doc.value("highway_cars", c.highway_cars);
  if (doc.contains("fixed_traffic")) c.fixed_traffic = doc["fixed_traffic"].get<double>();
  return c;
}

// ---- advantage estimation ----------------------------------------------------

std::vector<double> compute_gae(std::span<const double> rewards, std::span<const double> values,
                                std::span<const bool> dones, double last_value, double gamma,
                                double lambda) {
  const std::size_t n = rewards.size();
  if (values.size() != n || dones.size() != n) {
    throw DimensionMismatch("rewards, values and dones must have equal length");
  }
  std::vector<double> advantages(n, 0.0);
  double running = 0.0;
  for (std::size_t t = n; t-- > 0;) {
    const double next_value = t + 1 == n ? last_value : values[t + 1];
    const double live = dones[t] ? 0.0 : 1.0;
    const double delta = rewards[t] + gamma * next_value * live - values[t];
    running = delta + gamma * lambda * live * running;
    advantages[t] = running;
  }
  return advantages;
}

// ---- surrogate objective -----------------------------------------------------

Objective ppo_objective(const Policy& policy, std::span<const Sample> batch, double clip,
                        double entropy_coef) {
  Objective out{0.0, 0.0, std::vector<double>(policy.parameters().size(), 0.0)};
  if (batch.empty()) return out;
  const double scale = 1.0 / static_cast<double>(batch.size());
  std::vector<double> g(policy.action_count());
  for (const auto& s : batch) {
    const auto pi = policy.probabilities(s.observation);
    const double ratio = pi[s.action] / s.old_probability;
    const double unclipped = ratio * s.advantage;
    const double clipped = std::clamp(ratio, 1.0 - clip, 1.0 + clip) * s.advantage;

    double entropy = 0.0;
    for (double p : pi) {
      if (p > 0) entropy -= p * std::log(p);
    }
    out.loss += scale * (-std::min(unclipped, clipped) - entropy_coef * entropy);
    out.entropy += scale * entropy;

    for (std::size_t k = 0; k < g.size(); ++k) {
      g[k] = pi[k] > 0 ? scale * entropy_coef * (std::log(pi[k]) + 1.0) : 0.0;
    }
    if (unclipped <= clipped) g[s.action] -= scale * s.advantage / s.old_probability;
    policy.accumulate_gradient(s.observation, g, out.grad);
  }
  return out;
}

// ---- training loop -----------------------------------------------------------

namespace {

double clip_by_norm(std::vector<double>& grad, double max_norm) {
  double norm = 0.0;
  for (double v : grad) norm += v * v;
  norm = std::sqrt(norm);
  if (max_norm > 0 && norm > max_norm) {
    const double factor = max_norm / norm;
    for (double& v : grad) v *= factor;
  }
  return norm;
}

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

TrainingLog train(Policy& policy, const EnvConfig& env_config, const PpoConfig& config,
                  const std::string& label, const UpdateObserver& observer) {
  const auto started = std::chrono::steady_clock::now();
  TrainingLog log{label, policy.kind(), env_config, config, {}, {}, 0.0};
  if (policy.observation_dim() != observation_dim(env_config.domain) ||
      policy.action_count() != action_count(env_config.domain)) {
    throw DimensionMismatch("policy shape does not match the " +
                            std::string(to_string(env_config.domain)) + " environment");
  }
  if (config.total_episodes == 0) return log;
  if (config.rollout_steps == 0 || config.minibatch == 0 || config.epochs == 0) {
    throw std::invalid_argument("rollout_steps, minibatch and epochs must be positive");
  }

  Rng rng(config.seed);
  EnvConfig run_env = env_config;
  run_env.seed = episode_seed(env_config.seed ^ config.seed, 0x5eed);
  Environment env(run_env);
  Mlp value({policy.observation_dim(), config.value_hidden, 1}, rng,
            observation_scale(env_config.domain));
  Adam policy_opt(config.learning_rate);
  Adam value_opt(config.value_learning_rate);

  std::vector<double> theta = policy.parameters();
  std::vector<double> phi(value.parameters().begin(), value.parameters().end());

  std::vector<Sample> batch;
  std::vector<double> rewards, values;
  std::vector<bool> dones_storage;
  double episode_return = 0.0;

  while (log.episode_returns.size() < config.total_episodes) {
    batch.clear();
    rewards.clear();
    values.clear();
    dones_storage.clear();
    while (batch.size() < config.rollout_steps &&
           log.episode_returns.size() < config.total_episodes) {
      const Observation obs = env.observation();
      const auto pi = policy.probabilities(obs);
      const std::size_t action = sample_action(pi, rng);
      const auto transition = env.step(action);
      batch.push_back({obs, action, pi[action], 0.0, 0.0});
      rewards.push_back(transition.reward);
      values.push_back(value.forward(obs)[0]);
      dones_storage.push_back(transition.done);
      episode_return += transition.reward;
      if (transition.done) {
        log.episode_returns.push_back(episode_return);
        episode_return = 0.0;
        env.reset();
      }
    }

    const double last_value = dones_storage.back() ? 0.0 : value.forward(env.observation())[0];
    // vector<bool> is packed, so copy into contiguous storage for the span.
    const std::unique_ptr<bool[]> dones(new bool[dones_storage.size()]);
    std::copy(dones_storage.begin(), dones_storage.end(), dones.get());
    const auto advantages =
        compute_gae(rewards, values, std::span<const bool>(dones.get(), dones_storage.size()),
                    last_value, config.gamma, config.gae_lambda);

    double mean = std::accumulate(advantages.begin(), advantages.end(), 0.0) /
                  static_cast<double>(advantages.size());
    double var = 0.0;
    for (double a : advantages) var += (a - mean) * (a - mean);
    const double sd = std::sqrt(var / static_cast<double>(advantages.size()));
    for (std::size_t i = 0; i < batch.size(); ++i) {
      batch[i].value_target = advantages[i] + values[i];
      batch[i].advantage = (advantages[i] - mean) / (sd + 1e-8);
    }

    UpdateStats stats{log.episode_returns.size(), batch.size(), 0.0, 0.0, 0.0};
    std::vector<std::size_t> order(batch.size());
    std::iota(order.begin(), order.end(), 0);
    std::size_t minibatches = 0;
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
      std::shuffle(order.begin(), order.end(), rng);
      for (std::size_t start = 0; start < order.size(); start += config.minibatch) {
        const std::size_t end = std::min(order.size(), start + config.minibatch);
        std::vector<Sample> mini;
        mini.reserve(end - start);
        for (std::size_t i = start; i < end; ++i) mini.push_back(batch[order[i]]);

        auto objective = ppo_objective(policy, mini, config.clip, config.entropy_coef);
        if (!std::isfinite(objective.loss) || !all_finite(objective.grad)) {
          throw TrainingDiverged("non-finite policy loss after " +
                                 std::to_string(log.episode_returns.size()) + " episodes (loss " +
                                 std::to_string(objective.loss) + ")");
        }
        clip_by_norm(objective.grad, config.max_grad_norm);
        policy_opt.step(theta, objective.grad);
        policy.set_parameters(theta);
        theta = policy.parameters();

        std::vector<double> value_grad(phi.size(), 0.0);
        double value_loss = 0.0;
        const double scale = 1.0 / static_cast<double>(mini.size());
        for (const auto& s : mini) {
          const double error = value.forward(s.observation)[0] - s.value_target;
          value_loss += scale * config.value_coef * error * error;
          const double g = 2.0 * scale * config.value_coef * error;
          value.backward(s.observation, std::span<const double>(&g, 1), value_grad);
        }
        if (!std::isfinite(value_loss) || !all_finite(value_grad)) {
          throw TrainingDiverged("non-finite value loss after " +
                                 std::to_string(log.episode_returns.size()) + " episodes");
        }
        value_opt.step(phi, value_grad);
        value.set_parameters(phi);

        stats.policy_loss += objective.loss;
        stats.value_loss += value_loss;
        stats.entropy += objective.entropy;
        ++minibatches;
      }
    }
    stats.policy_loss /= static_cast<double>(minibatches);
    stats.value_loss /= static_cast<double>(minibatches);
    stats.entropy /= static_cast<double>(minibatches);
    log.updates.push_back(stats);
    if (observer) observer(policy, stats);
  }

  log.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return log;
}

std::vector<RunResult> train_runs(const Policy& initial, const EnvConfig& env,
                                  const PpoConfig& config, std::span<const std::uint64_t> seeds,
                                  const std::string& label, std::size_t threads) {
  std::vector<RunResult> results(seeds.size());
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr error;
  auto worker = [&] {
    for (std::size_t i = next++; i < seeds.size(); i = next++) {
      try {
        auto policy = initial.clone();
        PpoConfig run_config = config;
        run_config.seed = seeds[i];
        EnvConfig run_env = env;
        run_env.seed = seeds[i];
        results[i].log = train(*policy, run_env, run_config, label);
        results[i].policy = std::move(policy);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  const std::size_t count = std::max<std::size_t>(1, std::min(threads, seeds.size()));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < count; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
  return results;
}

Selection select_best_initialization(std::span<const DdtParams> candidates, const EnvConfig& env,
                                     const PpoConfig& config, std::size_t window) {
  if (candidates.empty()) throw std::invalid_argument("no candidate initializations");
  Selection selection{0, {}};
  for (const auto& candidate : candidates) {
    DdtPolicy policy(candidate);
    const auto log = train(policy, env, config);
    const std::size_t n = std::min(window, log.episode_returns.size());
    const double score =
        n == 0 ? 0.0
               : std::accumulate(log.episode_returns.end() - static_cast<std::ptrdiff_t>(n),
                                 log.episode_returns.end(), 0.0) /
                     static_cast<double>(n);
    selection.scores.push_back(score);
  }
  selection.best = static_cast<std::size_t>(
      std::max_element(selection.scores.begin(), selection.scores.end()) -
      selection.scores.begin());
  return selection;
}

double evaluate_policy(const Policy& policy, const EnvConfig& env_config, std::size_t episodes,
                       std::uint64_t seed) {
  if (episodes == 0) return 0.0;
  Rng rng(seed);
  EnvConfig run_env = env_config;
  run_env.seed = seed;
  Environment env(run_env);
  double total = 0.0;
  for (std::size_t e = 0; e < episodes; ++e) {
    if (e > 0) env.reset();
    bool done = false;
    while (!done) {
      const auto pi = policy.probabilities(env.observation());
      const auto transition = env.step(sample_action(pi, rng));
      total += transition.reward;
      done = transition.done;
    }
  }
  return total / static_cast<double>(episodes);
}

std::vector<TrajectoryRecord> rollout_episode(const Policy& policy, const EnvConfig& env_config,
                                              std::uint64_t seed) {
  Rng rng(seed);
  auto [state, obs] = reset(env_config);
  std::vector<TrajectoryRecord> records;
  bool done = false;
  std::size_t t = 0;
  while (!done) {
    const std::size_t action = sample_action(policy.probabilities(obs), rng);
    const auto transition = step_in_place(state, action);
    records.push_back({t++, obs, action, transition.reward, transition.done});
    obs = observe(state);
    done = transition.done;
  }
  return records;
}

// ---- log files ----------------------------------------------------------------

void write_training_log(std::ostream& out, const TrainingLog& log) {
  out << nlohmann::json{{"type", "header"},
                        {"label", log.label},
                        {"policy", log.policy_kind},
                        {"env", to_json(log.env)},
                        {"config", to_json(log.config)}}
             .dump()
      << '\n';
  for (std::size_t i = 0; i < log.episode_returns.size(); ++i) {
    out << nlohmann::json{{"type", "episode"}, {"index", i}, {"return", log.episode_returns[i]}}
               .dump()
        << '\n';
  }
  for (const auto& u : log.updates) {
    out << nlohmann::json{{"type", "update"},
                          {"episodes", u.episodes_completed},
                          {"samples", u.samples},
                          {"policy_loss", u.policy_loss},
                          {"value_loss", u.value_loss},
                          {"entropy", u.entropy}}
               .dump()
        << '\n';
  }
  out << nlohmann::json{{"type", "footer"},
                        {"episodes", log.episode_returns.size()},
                        {"wall_clock_seconds", log.wall_clock_seconds}}
             .dump()
      << '\n';
}

TrainingLog read_training_log(std::istream& in) {
  TrainingLog log;
  bool header = false;
  bool footer = false;
  std::string line;
  try {
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto doc = nlohmann::json::parse(line);
      const auto type = doc.at("type").get<std::string>();
      if (type == "header") {
        log.label = doc.at("label").get<std::string>();
        log.policy_kind = doc.at("policy").get<std::string>();
        log.env = env_config_from_json(doc.at("env"));
        log.config = ppo_config_from_json(doc.at("config"));
        header = true;
      } else if (type == "episode") {
        if (doc.at("index").get<std::size_t>() != log.episode_returns.size()) {
          throw SchemaError("episode records are out of order");
        }
        log.episode_returns.push_back(doc.at("return").get<double>());
      } else if (type == "update") {
        log.updates.push_back({doc.at("episodes").get<std::size_t>(),
                               doc.at("samples").get<std::size_t>(),
                               doc.at("policy_loss").get<double>(),
                               doc.at("value_loss").get<double>(), doc.at("entropy").get<double>()});
      } else if (type == "footer") {
        if (doc.at("episodes").get<std::size_t>() != log.episode_returns.size()) {
          throw SchemaError("footer episode count disagrees with the episode records");
        }
        log.wall_clock_seconds = doc.at("wall_clock_seconds").get<double>();
        footer = true;
      } else {
        throw SchemaError("unknown log record type '" + type + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("malformed training log: ") + e.what());
  }
  if (!header || !footer) throw SchemaError("training log is missing its header or footer");
  return log;
}

}  // namespace polsynth
