#include "polsynth/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace polsynth {

std::vector<double> rolling_reward(std::span<const double> returns, std::size_t window) {
  if (window == 0) throw std::invalid_argument("rolling window must be positive");
  if (returns.size() < window) {
    throw std::invalid_argument("need at least " + std::to_string(window) + " episodes, got " +
                                std::to_string(returns.size()));
  }
  std::vector<double> series;
  series.reserve(returns.size() - window + 1);
  // Each window is summed afresh so long runs do not accumulate drift.
  for (std::size_t k = 0; k + window <= returns.size(); ++k) {
    const double sum = std::accumulate(returns.begin() + static_cast<std::ptrdiff_t>(k),
                                       returns.begin() + static_cast<std::ptrdiff_t>(k + window), 0.0);
    series.push_back(sum / static_cast<double>(window));
  }
  return series;
}

double median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median of an empty set");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

double standard_error(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n < 2) return 0.0;
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(n);
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(n - 1)) / std::sqrt(static_cast<double>(n));
}

RunSummary summarize_runs(std::span<const std::vector<double>> runs, std::size_t window) {
  if (runs.size() < 2) throw std::invalid_argument("summaries need at least two runs");
  std::vector<double> initial;
  std::vector<double> best;
  for (const auto& returns : runs) {
    const auto series = rolling_reward(returns, window);
    initial.push_back(series.front());
    best.push_back(*std::max_element(series.begin(), series.end()));
  }
  return {runs.size(), median(initial), standard_error(initial), median(best),
          standard_error(best)};
}

}  // namespace polsynth
