#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "survbias/data.hpp"
#include "survbias/learners.hpp"

namespace survbias {

struct CurvePoint {
  std::size_t size = 0;
  double accuracy_mean = 0.0;
  double accuracy_std = 0.0;  // sample standard deviation over repetitions
  std::vector<double> accuracies;
};

struct LearningCurve {
  std::vector<CurvePoint> points;
  std::string protocol;
};

// Sizes {k, 2k, ..., floor(n/k) k, n}.
std::vector<std::size_t> curve_schedule(std::size_t n, std::size_t k);

// Carves out one held-out evaluation set, then trains on uniform samples of
// each scheduled size from the remainder; accuracy at tau = 0.5, averaged
// over `repetitions` seeded draws.
LearningCurve learning_curve(const Dataset& U, const EnsembleParams& learner, std::size_t k, double eval_fraction,
                             std::uint64_t seed, std::size_t repetitions = 3, Execution exec = Execution::parallel);

// Least-squares slope (accuracy per 1,000 samples) of the `window` points
// ending at `end`; empty when fewer points are available.
std::optional<double> trailing_slope(const LearningCurve& curve, std::size_t window, std::size_t end);

struct N0Result {
  std::size_t n0 = 0;
  bool stabilized = false;
  std::size_t index = 0;
  double slope = 0.0;
};

// Smallest size whose trailing-window slope satisfies |slope| <= slope_eps;
// otherwise the final size, flagged as not stabilized.
N0Result detect_n0(const LearningCurve& curve, std::size_t window = 5, double slope_eps = 0.002);

void write_curve_csv(const LearningCurve& curve, std::size_t window, std::ostream& out);

}  // namespace survbias
