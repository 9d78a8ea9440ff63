#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace polsynth {

/// series[k] = mean(returns[k .. k + window)). Throws std::invalid_argument
/// when fewer than `window` returns are available.
std::vector<double> rolling_reward(std::span<const double> returns, std::size_t window = 100);

double median(std::vector<double> values);

/// Sample standard deviation over sqrt(n); zero for a single value.
double standard_error(std::span<const double> values);

struct RunSummary {
  std::size_t runs;
  double median_initial;      // median over runs of the first-window mean
  double se_initial;
  double median_max_rolling;  // median over runs of the rolling-series maximum
  double se_max_rolling;
};

/// Needs at least two runs, each with at least `window` episodes.
RunSummary summarize_runs(std::span<const std::vector<double>> runs, std::size_t window = 100);

}  // namespace polsynth
