#include "polsynth/env.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>

#include "json.hpp"
#include "polsynth/error.hpp"

namespace polsynth {

EnvConfig EnvConfig::defaults(Domain domain, std::uint64_t seed) {
  EnvConfig config;
  config.domain = domain;
  config.seed = seed;
  config.episode_length = domain == Domain::taxi ? 60 : 40;
  return config;
}

std::uint64_t episode_seed(std::uint64_t seed, std::uint64_t episode) {
  // splitmix64 finalizer over the combined value
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (episode + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::size_t observation_dim(Domain domain) {
  return domain == Domain::taxi ? taxi::kObservationDim : highway::kObservationDim;
}

std::size_t action_count(Domain domain) { return domain == Domain::taxi ? 4 : 5; }

std::vector<double> observation_scale(Domain domain) {
  if (domain == Domain::taxi) return std::vector<double>(taxi::kObservationDim, 1.0);
  std::vector<double> scale{8.0, 30.0};
  for (int slot = 0; slot < 4; ++slot) scale.insert(scale.end(), {100.0, 8.0, 10.0, 1.0});
  return scale;
}

// ---- taxi -------------------------------------------------------------------

namespace taxi {

std::size_t travel_time(TaxiLocation from, TaxiLocation to, double traffic) {
  if (from == to) return 1;
  const auto pair_is = [&](TaxiLocation a, TaxiLocation b) {
    return (from == a && to == b) || (from == b && to == a);
  };
  if (pair_is(TaxiLocation::village, TaxiLocation::airport)) return 2;
  if (pair_is(TaxiLocation::village, TaxiLocation::city)) return 3;
  return 2 + static_cast<std::size_t>(std::lround(4.0 * traffic));
}

}  // namespace taxi

namespace {

int sample_village_wait(Rng& rng) {
  return std::uniform_int_distribution<int>(0, taxi::kMaxVillageWait)(rng);
}

TaxiState reset_taxi(const EnvConfig& config) {
  TaxiState s;
  s.rng.seed(config.seed);
  s.episode_length = config.episode_length;
  s.traffic = config.fixed_traffic ? std::clamp(*config.fixed_traffic, 0.0, 1.0)
                                   : std::uniform_real_distribution<double>(0.0, 1.0)(s.rng);
  s.village_wait = sample_village_wait(s.rng);
  return s;
}

Transition step_taxi(TaxiState& s, std::size_t action) {
  double reward = taxi::kStepCost;
  if (action == taxi::kWait) {
    if (s.location == TaxiLocation::village && !s.has_passenger) {
      if (s.village_wait > 0) --s.village_wait;
      if (s.village_wait == 0) s.has_passenger = true;
    }
    s.t += 1;
  } else {
    const auto target = static_cast<TaxiLocation>(action);
    s.t += taxi::travel_time(s.location, target, s.traffic);
    if (target != s.location) {
      s.location = target;
      switch (target) {
        case TaxiLocation::airport:
          if (s.has_passenger) {
            reward += taxi::kDeliveryReward;
            s.has_passenger = false;
          }
          break;
        case TaxiLocation::city:
          s.has_passenger = true;
          break;
        case TaxiLocation::village:
          s.village_wait = sample_village_wait(s.rng);
          if (s.village_wait == 0) s.has_passenger = true;
          break;
      }
    }
  }
  s.done = s.t >= s.episode_length;
  return {reward, s.done};
}

Observation observe_taxi(const TaxiState& s) {
  Observation obs(taxi::kObservationDim, 0.0);
  obs[static_cast<std::size_t>(s.location)] = 1.0;
  obs[3] = s.traffic;
  obs[4] = s.village_wait / 10.0;
  return obs;
}

// ---- highway ----------------------------------------------------------------

bool crashes(const HighwayState& s) {
  return std::any_of(s.others.begin(), s.others.end(), [&](const Vehicle& v) {
    return v.lane == s.ego_lane && std::abs(v.x - s.ego_x) <= highway::kCrashDistance;
  });
}

HighwayState reset_highway(const EnvConfig& config) {
  HighwayState s;
  s.rng.seed(config.seed);
  s.episode_length = config.episode_length;
  std::uniform_int_distribution<int> lane(0, highway::kLanes - 1);
  std::uniform_real_distribution<double> position(highway::kSpawnStart, highway::kSpawnEnd);
  std::uniform_real_distribution<double> speed(highway::kOtherMinSpeed, highway::kOtherMaxSpeed);
  s.ego_lane = 1;
  s.ego_speed = 25.0;
  for (std::size_t i = 0; i < config.highway_cars; ++i) {
    // Rejection sampling keeps same-lane cars at least kMinSpawnGap apart.
    for (int attempt = 0; attempt < 1000; ++attempt) {
      Vehicle v{lane(s.rng), position(s.rng), 0.0};
      const bool clear = std::none_of(s.others.begin(), s.others.end(), [&](const Vehicle& o) {
        return o.lane == v.lane && std::abs(o.x - v.x) < highway::kMinSpawnGap;
      });
      if (clear) {
        v.speed = speed(s.rng);
        s.others.push_back(v);
        break;
      }
    }
  }
  return s;
}

Transition step_highway(HighwayState& s, std::size_t action) {
  switch (action) {
    case highway::kLaneLeft:
      s.ego_lane = std::max(0, s.ego_lane - 1);
      break;
    case highway::kLaneRight:
      s.ego_lane = std::min(highway::kLanes - 1, s.ego_lane + 1);
      break;
    case highway::kFaster:
      s.ego_speed = std::min(highway::kMaxSpeed, s.ego_speed + highway::kSpeedStep);
      break;
    case highway::kSlower:
      s.ego_speed = std::max(highway::kMinSpeed, s.ego_speed - highway::kSpeedStep);
      break;
    default:
      break;
  }
  s.ego_x += s.ego_speed;
  for (auto& v : s.others) v.x += v.speed;
  s.t += 1;
  if (crashes(s)) {
    s.crashed = true;
    s.done = true;
    return {highway::kCrashReward, true};
  }
  s.done = s.t >= s.episode_length;
  const double reward = 0.1 + 0.4 * (s.ego_speed - highway::kMinSpeed) /
                                  (highway::kMaxSpeed - highway::kMinSpeed);
  return {reward, s.done};
}

Observation observe_highway(const HighwayState& s) {
  Observation obs{s.ego_y(), s.ego_speed};
  constexpr std::size_t none = std::numeric_limits<std::size_t>::max();
  std::array<std::size_t, 4> slot{none, none, none, none};
  const auto better = [&](std::size_t candidate, std::size_t current, auto key) {
    return current == none || key(s.others[candidate]) < key(s.others[current]);
  };
  const auto dx = [&](const Vehicle& v) { return v.x - s.ego_x; };
  const auto abs_dx = [&](const Vehicle& v) { return std::abs(v.x - s.ego_x); };
  for (std::size_t i = 0; i < s.others.size(); ++i) {
    const Vehicle& v = s.others[i];
    if (v.lane == s.ego_lane && dx(v) >= 0 && better(i, slot[0], dx)) slot[0] = i;
    if (v.lane == s.ego_lane - 1 && better(i, slot[1], abs_dx)) slot[1] = i;
    if (v.lane == s.ego_lane + 1 && better(i, slot[2], abs_dx)) slot[2] = i;
  }
  const auto distance = [&](const Vehicle& v) {
    return std::hypot(v.x - s.ego_x, highway::lane_y(v.lane) - s.ego_y());
  };
  for (std::size_t i = 0; i < s.others.size(); ++i) {
    if (i == slot[0] || i == slot[1] || i == slot[2]) continue;
    if (better(i, slot[3], distance)) slot[3] = i;
  }
  for (std::size_t index : slot) {
    if (index == none) {
      obs.insert(obs.end(), {highway::kAbsentDx, 0.0, 0.0, 0.0});
      continue;
    }
    const Vehicle& v = s.others[index];
    obs.insert(obs.end(),
               {v.x - s.ego_x, highway::lane_y(v.lane) - s.ego_y(), v.speed - s.ego_speed, 0.0});
  }
  return obs;
}

}  // namespace

ResetResult reset(const EnvConfig& config) {
  if (config.episode_length == 0) throw std::invalid_argument("episode_length must be positive");
  EnvState state;
  if (config.domain == Domain::taxi) {
    state = reset_taxi(config);
  } else {
    state = reset_highway(config);
  }
  auto obs = observe(state);
  return {std::move(state), std::move(obs)};
}

Transition step_in_place(EnvState& state, std::size_t action) {
  return std::visit(
      [action](auto& s) -> Transition {
        using T = std::decay_t<decltype(s)>;
        constexpr Domain domain = std::is_same_v<T, TaxiState> ? Domain::taxi : Domain::highway;
        if (action >= action_count(domain)) {
          throw std::out_of_range("action " + std::to_string(action) + " is not valid for " +
                                  std::string(to_string(domain)));
        }
        if (s.done) throw std::logic_error("step called after the episode ended");
        if constexpr (std::is_same_v<T, TaxiState>) {
          return step_taxi(s, action);
        } else {
          return step_highway(s, action);
        }
      },
      state);
}

StepResult step(const EnvState& state, std::size_t action) {
  EnvState next = state;
  const auto transition = step_in_place(next, action);
  auto obs = observe(next);
  return {std::move(next), std::move(obs), transition.reward, transition.done};
}

Observation observe(const EnvState& state) {
  if (const auto* t = std::get_if<TaxiState>(&state)) return observe_taxi(*t);
  return observe_highway(std::get<HighwayState>(state));
}

// ---- multi-episode wrapper ----------------------------------------------------

Environment::Environment(EnvConfig config) : config_(std::move(config)) {
  if (config_.episode_length == 0) throw std::invalid_argument("episode_length must be positive");
  reset();
}

const Observation& Environment::reset() {
  EnvConfig episode_config = config_;
  episode_config.seed = episode_seed(config_.seed, episode_++);
  auto result = polsynth::reset(episode_config);
  state_ = std::move(result.state);
  observation_ = std::move(result.observation);
  return observation_;
}

Transition Environment::step(std::size_t action) {
  const auto transition = step_in_place(state_, action);
  observation_ = observe(state_);
  return transition;
}

// ---- trajectory files ---------------------------------------------------------

void write_trajectory(std::ostream& out, std::span<const TrajectoryRecord> records) {
  for (const auto& r : records) {
    nlohmann::json line{{"t", r.t},
                        {"obs", r.observation},
                        {"action", r.action},
                        {"reward", r.reward},
                        {"done", r.done}};
    out << line.dump() << '\n';
  }
}

std::vector<TrajectoryRecord> read_trajectory(std::istream& in) {
  std::vector<TrajectoryRecord> records;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      const auto doc = nlohmann::json::parse(line);
      records.push_back({doc.at("t").get<std::size_t>(), doc.at("obs").get<Observation>(),
                         doc.at("action").get<std::size_t>(), doc.at("reward").get<double>(),
                         doc.at("done").get<bool>()});
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError(std::string("malformed trajectory record: ") + e.what());
    }
  }
  return records;
}

}  // namespace polsynth
