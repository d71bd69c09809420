#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "survbias/tree.hpp"

namespace survbias {

struct ConfusionCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;

  std::size_t total() const { return tp + fp + tn + fn; }
  ConfusionCounts& operator+=(const ConfusionCounts& o);
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

// Cost of a false negative (wrongly denied) and a false positive (wrongly
// granted). c_fp stays 1 unless overridden.
struct CostSpec {
  double c_fn = 1.0;
  double c_fp = 1.0;
};

// Evenly spaced thresholds {0, step, ..., 1}. Thresholds are addressed by
// index so no value is ever accumulated from repeated additions.
class ThresholdGrid {
public:
  explicit ThresholdGrid(double step);

  double step() const { return step_; }
  std::size_t size() const { return points_; }
  double tau(std::size_t index) const;
  // Index of the grid point nearest to tau.
  std::size_t nearest(double tau) const;

private:
  double step_;
  std::size_t intervals_;  // exact grids: 1/step
  bool exact_;
  std::size_t points_;
};

struct ThresholdPolicy {
  enum class Origin { fixed, accuracy_optimal, social_cost_optimal };

  double tau = 0.5;
  Origin origin = Origin::fixed;
  double cost = 1.0;  // c for social_cost_optimal
  std::optional<std::size_t> grid_index;

  static ThresholdPolicy fixed(double tau);
  // "acc", "sc_c3", "fixed_0.5"
  std::string label() const;
  void validate() const;
};

// Request form used by configs: "acc", "sc:3", "fixed:0.5".
ThresholdPolicy parse_threshold_request(const std::string& text);
std::string threshold_request_string(const ThresholdPolicy& p);

struct SweepRow {
  std::size_t index = 0;
  double tau = 0.0;
  ConfusionCounts confusion;
  double accuracy = 0.0;
  std::optional<double> precision;
  std::optional<double> recall;
  std::vector<double> social_cost;  // one entry per requested c

  friend bool operator==(const SweepRow&, const SweepRow&) = default;
};

struct Sweep {
  std::vector<double> costs;
  std::vector<SweepRow> rows;
  double grid_step = 0.0;
};

std::vector<int> apply_threshold(std::span<const double> scores, double tau);
ConfusionCounts confusion(std::span<const int> yhat, std::span<const int> y);

// Precision and recall are empty when their denominator is zero.
double accuracy(const ConfusionCounts& cc);
std::optional<double> precision(const ConfusionCounts& cc);
std::optional<double> recall(const ConfusionCounts& cc);
double social_cost(const ConfusionCounts& cc, const CostSpec& cost);

// Histogram sweep: each score is bucketed by the number of grid points it
// clears, then counts are suffix sums. O(n log G + G).
Sweep sweep(std::span<const double> scores, std::span<const int> y, double grid_step, std::span<const double> costs,
            Execution exec = Execution::parallel);
// Reference: apply_threshold + confusion at every grid point.
Sweep sweep_naive(std::span<const double> scores, std::span<const int> y, double grid_step,
                  std::span<const double> costs, Execution exec = Execution::serial);

ThresholdPolicy argmax_accuracy(const Sweep& s);
ThresholdPolicy argmin_social_cost(const Sweep& s, double c);

// (acc_best - acc_sc) / acc_sc * 100
double relative_accuracy_loss(double acc_best, double acc_sc);

void write_sweep_csv(const Sweep& s, std::ostream& out);

}  // namespace survbias
