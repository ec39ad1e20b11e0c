#pragma once

// Post-condition installed for every estimator solve: when all penalty operators have zero
// row sums, sum(beta) must equal sum(y) up to 1e-6 * n * max|y|.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <string>

#include "ftf/estimators.hpp"

namespace ftf::testing {

struct ConservationStats {
  std::atomic<std::size_t> checked{0};
  std::atomic<std::size_t> violated{0};
};

inline ConservationStats& conservation_stats() {
  static ConservationStats stats;
  return stats;
}

inline double conservation_error(std::span<const double> y, std::span<const double> beta) {
  return std::abs(std::accumulate(y.begin(), y.end(), 0.0) - std::accumulate(beta.begin(), beta.end(), 0.0));
}

inline double conservation_bound(std::span<const double> y) {
  double m = 0.0;
  for (double v : y) m = std::max(m, std::abs(v));
  return 1e-6 * static_cast<double>(y.size()) * m;
}

// on_violation receives a description; it may be called from worker threads.
inline void install_conservation_hook(std::function<void(const std::string&)> on_violation) {
  set_solve_observer([on_violation = std::move(on_violation)](const SolveObservation& obs) {
    if (!obs.sum_preserving) return;
    auto& stats = conservation_stats();
    ++stats.checked;
    const double err = conservation_error(obs.y, obs.result.beta);
    if (err > conservation_bound(obs.y)) {
      ++stats.violated;
      on_violation(std::string(obs.estimator) + ": |sum(y) - sum(beta)| = " + std::to_string(err));
    }
  });
}

}  // namespace ftf::testing
