#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <variant>
#include <vector>

#include "polsynth/dictionary.hpp"

namespace polsynth {

using Observation = std::vector<double>;
using Rng = std::mt19937_64;

struct EnvConfig {
  Domain domain = Domain::taxi;
  std::uint64_t seed = 0;
  std::size_t episode_length = 60;  // taxi: time units, highway: 1 s steps
  std::optional<double> fixed_traffic;  // taxi: pin traffic instead of sampling it
  std::size_t highway_cars = 12;

  static EnvConfig defaults(Domain domain, std::uint64_t seed = 0);
};

// ---- taxi -------------------------------------------------------------------
//
// One step is one decision. Driving takes travel time (village-airport 2,
// city-airport 2 + round(4 * traffic), village-city 3), waiting or a
// no-op drive takes 1; the episode ends once the clock reaches
// episode_length. Every decision costs 1, dropping a passenger at the
// airport pays 20.

enum class TaxiLocation { airport = 0, city = 1, village = 2 };

namespace taxi {
inline constexpr std::size_t kDriveAirport = 0;
inline constexpr std::size_t kDriveCity = 1;
inline constexpr std::size_t kDriveVillage = 2;
inline constexpr std::size_t kWait = 3;
inline constexpr std::size_t kObservationDim = 5;
inline constexpr int kMaxVillageWait = 8;
inline constexpr double kStepCost = -1.0;
inline constexpr double kDeliveryReward = 20.0;

std::size_t travel_time(TaxiLocation from, TaxiLocation to, double traffic);
}  // namespace taxi

struct TaxiState {
  TaxiLocation location = TaxiLocation::airport;
  double traffic = 0.0;  // towards the city, in [0, 1]
  int village_wait = 0;  // steps until a village passenger appears
  bool has_passenger = false;
  std::size_t t = 0;
  std::size_t episode_length = 60;
  bool done = false;
  Rng rng;
};

// ---- highway ----------------------------------------------------------------
//
// Three lanes at y = 0, 4, 8 m (lane 0 is the left lane). The ego changes
// lane instantly, adjusts speed by 2 m/s within [20, 30] and is judged to
// crash when a car shares its lane within 5 m. Other cars keep constant
// speed and lane.

struct Vehicle {
  int lane;
  double x;
  double speed;
};

namespace highway {
inline constexpr std::size_t kLaneLeft = 0;
inline constexpr std::size_t kIdle = 1;
inline constexpr std::size_t kLaneRight = 2;
inline constexpr std::size_t kFaster = 3;
inline constexpr std::size_t kSlower = 4;
inline constexpr std::size_t kObservationDim = 18;
inline constexpr int kLanes = 3;
inline constexpr double kLaneWidth = 4.0;
inline constexpr double kMinSpeed = 20.0;
inline constexpr double kMaxSpeed = 30.0;
inline constexpr double kSpeedStep = 2.0;
inline constexpr double kOtherMinSpeed = 18.0;
inline constexpr double kOtherMaxSpeed = 26.0;
inline constexpr double kCrashDistance = 5.0;
inline constexpr double kMinSpawnGap = 12.0;
inline constexpr double kSpawnStart = 20.0;
inline constexpr double kSpawnEnd = 400.0;
inline constexpr double kCrashReward = -1.0;
inline constexpr double kAbsentDx = 100.0;

inline double lane_y(int lane) { return kLaneWidth * lane; }
}  // namespace highway

struct HighwayState {
  int ego_lane = 1;
  double ego_x = 0.0;
  double ego_speed = 25.0;
  std::vector<Vehicle> others;
  std::size_t t = 0;
  std::size_t episode_length = 40;
  bool crashed = false;
  bool done = false;
  Rng rng;

  double ego_y() const { return highway::lane_y(ego_lane); }
};

using EnvState = std::variant<TaxiState, HighwayState>;

struct ResetResult {
  EnvState state;
  Observation observation;
};

struct StepResult {
  EnvState state;
  Observation observation;
  double reward;
  bool done;
};

struct Transition {
  double reward;
  bool done;
};

/// Deterministic given cfg.seed.
ResetResult reset(const EnvConfig& config);
/// Pure: returns the successor, leaving `state` untouched.
StepResult step(const EnvState& state, std::size_t action);
/// Advances `state`. Throws std::logic_error after the episode has ended
/// and std::out_of_range for invalid actions.
Transition step_in_place(EnvState& state, std::size_t action);

/// taxi: [airport, city, village one-hot, traffic, village_wait / 10]
/// highway: [ego y, ego speed] then four [dx, dy, dvx, dvy] slots relative to
/// the ego: nearest car ahead in lane, nearest in the left lane, nearest in
/// the right lane, nearest remaining. Missing cars read (100, 0, 0, 0).
Observation observe(const EnvState& state);

std::size_t observation_dim(Domain domain);
std::size_t action_count(Domain domain);
/// Per-feature divisors bringing observations to roughly unit scale.
std::vector<double> observation_scale(Domain domain);

/// Seed for episode `episode` of a run seeded with `seed`.
std::uint64_t episode_seed(std::uint64_t seed, std::uint64_t episode);

/// Multi-episode wrapper used by training loops.
class Environment {
 public:
  explicit Environment(EnvConfig config);

  /// Starts the next episode.
  const Observation& reset();
  Transition step(std::size_t action);

  const Observation& observation() const noexcept { return observation_; }
  const EnvState& state() const noexcept { return state_; }
  const EnvConfig& config() const noexcept { return config_; }
  std::size_t observation_dim() const { return polsynth::observation_dim(config_.domain); }
  std::size_t action_count() const { return polsynth::action_count(config_.domain); }

 private:
  EnvConfig config_;
  EnvState state_;
  Observation observation_;
  std::uint64_t episode_ = 0;
};

struct TrajectoryRecord {
  std::size_t t;
  Observation observation;
  std::size_t action;
  double reward;
  bool done;
};

/// One JSON object per line: {"action","done","obs","reward","t"}.
void write_trajectory(std::ostream& out, std::span<const TrajectoryRecord> records);
std::vector<TrajectoryRecord> read_trajectory(std::istream& in);

}  // namespace polsynth
