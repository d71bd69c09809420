#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "survbias/data.hpp"
#include "survbias/evaluation.hpp"
#include "survbias/learners.hpp"

namespace survbias {

struct SimulationConfig {
  std::size_t n0 = 0;
  std::size_t n_prime = 0;  // 0 means max(n0 / 10, 100)
  std::size_t iterations = 1;
  ThresholdPolicy threshold;
  EnsembleParams learner;
  std::uint64_t seed = 0;
  bool refit_each_iteration = true;

  std::size_t batch_size() const;
  void validate(std::size_t universe) const;
};

struct ApplicantRecord {
  std::size_t row = 0;
  std::size_t iteration = 0;
  double score = 0.0;
  int yhat = 0;
  int y = 0;
  bool admitted = false;

  friend bool operator==(const ApplicantRecord&, const ApplicantRecord&) = default;
};

struct SeriesRow {
  std::size_t iteration = 0;
  ConfusionCounts counts;
  double accuracy = 0.0;
  std::optional<double> precision;
  std::optional<double> recall;
  double pct_fn = 0.0;  // fn / population
  double pct_fp = 0.0;  // fp / population
  std::size_t population = 0;

  static SeriesRow from_counts(std::size_t iteration, const ConfusionCounts& cc);
};

using MetricSeries = std::vector<SeriesRow>;

struct PairedRunResult {
  MetricSeries biased;
  MetricSeries oracle;
  std::vector<ApplicantRecord> biased_log;
  std::vector<ApplicantRecord> oracle_log;
  // Index batches drawn at iterations 1..k; shared by both runs.
  std::vector<std::vector<std::size_t>> batches;
  std::vector<std::size_t> initial;
  double tau = 0.0;
  bool truncated = false;  // pool ran out before the requested iterations
};

// C(0): uniform sample of n0 rows of U without replacement.
std::vector<std::size_t> draw_initial(const Dataset& U, std::size_t n0, std::uint64_t seed);

// Resolves accuracy- or cost-optimal policies by a sweep on an 80/20 split of
// C(0). Fixed policies pass through. All policies share one trained model.
std::vector<ThresholdPolicy> resolve_thresholds(const Dataset& U, const SimulationConfig& cfg,
                                                std::vector<ThresholdPolicy> requests, double grid_step,
                                                Execution exec = Execution::parallel);

// Biased (filtered) and Oracle (unfiltered) retraining over a shared stream of
// applicant batches. cfg.threshold must carry a concrete tau.
PairedRunResult run_paired(const Dataset& U, const SimulationConfig& cfg, Execution exec = Execution::parallel);

// Long format: run,iteration,tp,fp,tn,fn,accuracy,precision,recall,pct_fn,pct_fp,population
void write_series_csv(const PairedRunResult& r, std::ostream& out);
struct ParsedSeries {
  MetricSeries biased;
  MetricSeries oracle;
};
ParsedSeries read_series_csv(std::istream& in);

}  // namespace survbias
