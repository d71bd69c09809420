#include "survbias/dynamics.hpp"

#include <algorithm>
#include <istream>
#include <memory>
#include <ostream>
#include <stdexcept>

#include "survbias/csv.hpp"
#include "survbias/rng.hpp"

namespace survbias {

std::size_t SimulationConfig::batch_size() const {
  return n_prime != 0 ? n_prime : std::max<std::size_t>(n0 / 10, 100);
}

void SimulationConfig::validate(std::size_t universe) const {
  if (iterations < 1) throw std::invalid_argument("simulation: iterations must be >= 1");
  if (n0 < 1 || n0 > universe) throw std::invalid_argument("simulation: n0 must lie in [1, |U|]");
  if (n0 + iterations * batch_size() > universe)
    throw std::invalid_argument("simulation: n0 + iterations * n' = " +
                                std::to_string(n0 + iterations * batch_size()) + " exceeds |U| = " +
                                std::to_string(universe));
  threshold.validate();
  learner.validate();
}

SeriesRow SeriesRow::from_counts(std::size_t iteration, const ConfusionCounts& cc) {
  SeriesRow r;
  r.iteration = iteration;
  r.counts = cc;
  r.population = cc.total();
  r.accuracy = survbias::accuracy(cc);
  r.precision = survbias::precision(cc);
  r.recall = survbias::recall(cc);
  r.pct_fn = static_cast<double>(cc.fn) / static_cast<double>(r.population);
  r.pct_fp = static_cast<double>(cc.fp) / static_cast<double>(r.population);
  return r;
}

std::vector<std::size_t> draw_initial(const Dataset& U, std::size_t n0, std::uint64_t seed) {
  if (n0 > U.size()) throw std::invalid_argument("draw_initial: n0 exceeds |U|");
  Rng rng(seed);
  return rng.sample_indices(U.size(), n0);
}

namespace {

struct Streams {
  std::uint64_t initial;
  std::uint64_t batches;
  std::uint64_t model;
  std::uint64_t threshold;

  explicit Streams(std::uint64_t seed)
      : initial(derive_seed(seed, "initial")),
        batches(derive_seed(seed, "batches")),
        model(derive_seed(seed, "model")),
        threshold(derive_seed(seed, "threshold")) {}
};

EnsembleParams seeded(const EnsembleParams& p, std::uint64_t seed) {
  EnsembleParams out = p;
  out.seed = seed;
  return out;
}

}  // namespace

std::vector<ThresholdPolicy> resolve_thresholds(const Dataset& U, const SimulationConfig& cfg,
                                                std::vector<ThresholdPolicy> requests, double grid_step,
                                                Execution exec) {
  const Streams streams(cfg.seed);
  const auto initial = draw_initial(U, cfg.n0, streams.initial);
  const Dataset c0 = U.subset(initial);

  bool needs_sweep = false;
  std::vector<double> costs;
  for (const auto& r : requests) {
    if (r.origin == ThresholdPolicy::Origin::fixed) continue;
    needs_sweep = true;
    if (r.origin == ThresholdPolicy::Origin::social_cost_optimal &&
        std::find(costs.begin(), costs.end(), r.cost) == costs.end())
      costs.push_back(r.cost);
  }
  if (!needs_sweep) return requests;

  auto [train, test] = split(c0, 0.8, streams.threshold);
  const TrainedModel model = fit(seeded(cfg.learner, derive_seed(streams.model, "threshold")), train, exec);
  const auto scores = model.predict_proba(test.X, exec);
  const Sweep s = sweep(scores, test.y, grid_step, costs, exec);

  for (auto& r : requests) {
    if (r.origin == ThresholdPolicy::Origin::accuracy_optimal)
      r = argmax_accuracy(s);
    else if (r.origin == ThresholdPolicy::Origin::social_cost_optimal)
      r = argmin_social_cost(s, r.cost);
  }
  return requests;
}

PairedRunResult run_paired(const Dataset& U, const SimulationConfig& cfg, Execution exec) {
  cfg.validate(U.size());
  const double tau = cfg.threshold.tau;
  const std::size_t batch = cfg.batch_size();
  const Streams streams(cfg.seed);

  PairedRunResult out;
  out.tau = tau;
  out.initial = draw_initial(U, cfg.n0, streams.initial);

  std::vector<bool> taken(U.size(), false);
  for (std::size_t r : out.initial) taken[r] = true;
  std::vector<std::size_t> pool;
  pool.reserve(U.size() - cfg.n0);
  for (std::size_t r = 0; r < U.size(); ++r)
    if (!taken[r]) pool.push_back(r);

  std::vector<std::size_t> biased_rows = out.initial;
  std::vector<std::size_t> oracle_rows = out.initial;

  // Iteration 0: one model on C(0); its in-sample predictions seed both tallies.
  auto shared = std::make_shared<const TrainedModel>(
      fit(seeded(cfg.learner, derive_seed(streams.model, std::uint64_t{0})), U.subset(out.initial), exec));
  {
    const Dataset c0 = U.subset(out.initial);
    const auto scores = shared->predict_proba(c0.X, exec);
    const auto yhat = apply_threshold(scores, tau);
    const ConfusionCounts cc = confusion(yhat, c0.y);
    out.biased.push_back(SeriesRow::from_counts(0, cc));
    out.oracle.push_back(SeriesRow::from_counts(0, cc));
    for (std::size_t i = 0; i < c0.size(); ++i) {
      ApplicantRecord rec{out.initial[i], 0, scores[i], yhat[i], c0.y[i], true};
      out.biased_log.push_back(rec);
      out.oracle_log.push_back(rec);
    }
  }
  std::shared_ptr<const TrainedModel> biased_model = shared;
  std::shared_ptr<const TrainedModel> oracle_model = shared;
  ConfusionCounts biased_tally = out.biased.front().counts;
  ConfusionCounts oracle_tally = out.oracle.front().counts;

  Rng batch_rng(streams.batches);
  for (std::size_t it = 1; it <= cfg.iterations; ++it) {
    if (pool.size() < batch) {
      out.truncated = true;
      break;
    }
    std::vector<std::size_t> sample;
    sample.reserve(batch);
    for (std::size_t j = 0; j < batch; ++j) {
      const auto k = static_cast<std::size_t>(batch_rng.below(pool.size()));
      std::swap(pool[k], pool.back());
      sample.push_back(pool.back());
      pool.pop_back();
    }
    const Dataset applicants = U.subset(sample);
    const auto biased_scores = biased_model->predict_proba(applicants.X, exec);
    const auto oracle_scores = oracle_model->predict_proba(applicants.X, exec);

    for (std::size_t j = 0; j < sample.size(); ++j) {
      const int y = applicants.y[j];
      const int yhat_b = biased_scores[j] >= tau ? 1 : 0;
      out.biased_log.push_back({sample[j], it, biased_scores[j], yhat_b, y, yhat_b == 1});
      if (yhat_b == 1) {
        biased_rows.push_back(sample[j]);
        (y == 1 ? biased_tally.tp : biased_tally.fp)++;
      }

      const int yhat_o = oracle_scores[j] >= tau ? 1 : 0;
      out.oracle_log.push_back({sample[j], it, oracle_scores[j], yhat_o, y, true});
      oracle_rows.push_back(sample[j]);
      if (yhat_o == 1)
        (y == 1 ? oracle_tally.tp : oracle_tally.fp)++;
      else
        (y == 1 ? oracle_tally.fn : oracle_tally.tn)++;
    }

    if (cfg.refit_each_iteration) {
      const EnsembleParams params = seeded(cfg.learner, derive_seed(streams.model, static_cast<std::uint64_t>(it)));
      biased_model = std::make_shared<const TrainedModel>(fit(params, U.subset(biased_rows), exec));
      oracle_model = std::make_shared<const TrainedModel>(fit(params, U.subset(oracle_rows), exec));
    }

    out.batches.push_back(std::move(sample));
    out.biased.push_back(SeriesRow::from_counts(it, biased_tally));
    out.oracle.push_back(SeriesRow::from_counts(it, oracle_tally));
  }
  return out;
}

namespace {

void write_rows(std::ostream& out, const char* run, const MetricSeries& s) {
  auto opt = [](const std::optional<double>& v) { return v ? csv::format_number(*v) : std::string(); };
  for (const auto& r : s) {
    out << run << ',' << r.iteration << ',' << r.counts.tp << ',' << r.counts.fp << ',' << r.counts.tn << ','
        << r.counts.fn << ',' << csv::format_number(r.accuracy) << ',' << opt(r.precision) << ',' << opt(r.recall)
        << ',' << csv::format_number(r.pct_fn) << ',' << csv::format_number(r.pct_fp) << ',' << r.population
        << '\n';
  }
}

constexpr const char* kSeriesHeader = "run,iteration,tp,fp,tn,fn,accuracy,precision,recall,pct_fn,pct_fp,population";

}  // namespace

void write_series_csv(const PairedRunResult& r, std::ostream& out) {
  out << kSeriesHeader << '\n';
  write_rows(out, "biased", r.biased);
  write_rows(out, "oracle", r.oracle);
}

ParsedSeries read_series_csv(std::istream& in) {
  const auto records = csv::read_all(in);
  if (records.empty()) throw std::runtime_error("series csv: empty");
  if (records.front() != csv::split_line(kSeriesHeader)) throw std::runtime_error("series csv: unexpected header");
  ParsedSeries out;
  auto num = [](const std::string& s) { return std::stod(s); };
  auto count = [](const std::string& s) { return static_cast<std::size_t>(std::stoull(s)); };
  auto opt = [&](const std::string& s) -> std::optional<double> {
    if (s.empty()) return std::nullopt;
    return num(s);
  };
  for (std::size_t i = 1; i < records.size(); ++i) {
    const auto& f = records[i];
    if (f.size() != 12) throw std::runtime_error("series csv: row " + std::to_string(i + 1) + " has wrong arity");
    SeriesRow r;
    r.iteration = count(f[1]);
    r.counts = {count(f[2]), count(f[3]), count(f[4]), count(f[5])};
    r.accuracy = num(f[6]);
    r.precision = opt(f[7]);
    r.recall = opt(f[8]);
    r.pct_fn = num(f[9]);
    r.pct_fp = num(f[10]);
    r.population = count(f[11]);
    if (f[0] == "biased")
      out.biased.push_back(r);
    else if (f[0] == "oracle")
      out.oracle.push_back(r);
    else
      throw std::runtime_error("series csv: unknown run '" + f[0] + "'");
  }
  return out;
}

}  // namespace survbias
