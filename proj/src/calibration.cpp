#include "survbias/calibration.hpp"

#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "survbias/csv.hpp"
#include "survbias/evaluation.hpp"
#include "survbias/rng.hpp"

namespace survbias {

std::vector<std::size_t> curve_schedule(std::size_t n, std::size_t k) {
  if (k == 0) throw std::invalid_argument("learning curve: step k must be positive");
  std::vector<std::size_t> sizes;
  for (std::size_t s = k; s <= n; s += k) sizes.push_back(s);
  if (!sizes.empty() && sizes.back() != n) sizes.push_back(n);
  if (sizes.empty()) throw std::invalid_argument("learning curve: empty schedule (k exceeds the training pool)");
  return sizes;
}

LearningCurve learning_curve(const Dataset& U, const EnsembleParams& learner, std::size_t k, double eval_fraction,
                             std::uint64_t seed, std::size_t repetitions, Execution exec) {
  if (!(eval_fraction > 0.0 && eval_fraction < 1.0))
    throw std::invalid_argument("learning curve: eval_fraction must lie in (0, 1)");
  if (repetitions < 1) throw std::invalid_argument("learning curve: need at least one repetition");
  if (k >= U.size()) throw std::invalid_argument("learning curve: k must be below |U|");

  auto [pool_idx, eval_idx] = split_indices(U.size(), 1.0 - eval_fraction, derive_seed(seed, "eval"));
  const Dataset pool = U.subset(pool_idx);
  const Dataset eval = U.subset(eval_idx);
  const auto sizes = curve_schedule(pool.size(), k);
  if (learner.kind == ModelKind::gbdt && sizes.front() < 2)
    throw std::invalid_argument("learning curve: gbdt needs at least two training rows");

  const std::uint64_t sample_seed = derive_seed(seed, "sample");
  const std::uint64_t model_seed = derive_seed(seed, "model");
  const std::size_t jobs = sizes.size() * repetitions;
  std::vector<double> acc(jobs);
  const auto n_jobs = static_cast<std::ptrdiff_t>(jobs);
#pragma omp parallel for schedule(dynamic) if (exec == Execution::parallel)
  for (std::ptrdiff_t j = 0; j < n_jobs; ++j) {
    const std::size_t point = static_cast<std::size_t>(j) / repetitions;
    const std::size_t rep = static_cast<std::size_t>(j) % repetitions;
    const std::size_t s = sizes[point];
    Rng rng(derive_seed(derive_seed(sample_seed, s), rep));
    const auto rows = rng.sample_indices(pool.size(), s);
    EnsembleParams p = learner;
    p.seed = derive_seed(derive_seed(model_seed, s), rep);
    const TrainedModel m = fit(p, pool.subset(rows), Execution::serial);
    const auto scores = m.predict_proba(eval.X, Execution::serial);
    acc[static_cast<std::size_t>(j)] = accuracy(confusion(apply_threshold(scores, 0.5), eval.y));
  }

  LearningCurve curve;
  curve.protocol = "held-out " + csv::format_number(eval_fraction) + " of |U| (" + std::to_string(eval.size()) +
                   " rows), k=" + std::to_string(k) + ", " + std::to_string(repetitions) +
                   " repetitions, accuracy at tau=0.5";
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    CurvePoint pt;
    pt.size = sizes[i];
    pt.accuracies.assign(acc.begin() + static_cast<std::ptrdiff_t>(i * repetitions),
                         acc.begin() + static_cast<std::ptrdiff_t>((i + 1) * repetitions));
    pt.accuracy_mean =
        std::accumulate(pt.accuracies.begin(), pt.accuracies.end(), 0.0) / static_cast<double>(repetitions);
    if (repetitions > 1) {
      double ss = 0.0;
      for (double a : pt.accuracies) ss += (a - pt.accuracy_mean) * (a - pt.accuracy_mean);
      pt.accuracy_std = std::sqrt(ss / static_cast<double>(repetitions - 1));
    }
    curve.points.push_back(std::move(pt));
  }
  return curve;
}

std::optional<double> trailing_slope(const LearningCurve& curve, std::size_t window, std::size_t end) {
  if (window < 2) throw std::invalid_argument("trailing_slope: window must be >= 2");
  if (end >= curve.points.size() || end + 1 < window) return std::nullopt;
  const std::size_t begin = end + 1 - window;
  double mx = 0.0, my = 0.0;
  for (std::size_t i = begin; i <= end; ++i) {
    mx += static_cast<double>(curve.points[i].size) / 1000.0;
    my += curve.points[i].accuracy_mean;
  }
  mx /= static_cast<double>(window);
  my /= static_cast<double>(window);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = begin; i <= end; ++i) {
    const double dx = static_cast<double>(curve.points[i].size) / 1000.0 - mx;
    sxy += dx * (curve.points[i].accuracy_mean - my);
    sxx += dx * dx;
  }
  if (sxx == 0.0) throw std::invalid_argument("trailing_slope: degenerate window (all sizes equal)");
  return sxy / sxx;
}

N0Result detect_n0(const LearningCurve& curve, std::size_t window, double slope_eps) {
  if (window < 2) throw std::invalid_argument("detect_n0: window must be >= 2");
  if (curve.points.size() < window) throw std::invalid_argument("detect_n0: curve has fewer points than the window");
  if (!(slope_eps >= 0.0)) throw std::invalid_argument("detect_n0: slope_eps must be >= 0");
  N0Result r;
  for (std::size_t end = window - 1; end < curve.points.size(); ++end) {
    const double slope = *trailing_slope(curve, window, end);
    r.slope = slope;
    if (std::abs(slope) <= slope_eps) {
      r.n0 = curve.points[end].size;
      r.index = end;
      r.stabilized = true;
      return r;
    }
  }
  r.index = curve.points.size() - 1;
  r.n0 = curve.points.back().size;
  return r;
}

void write_curve_csv(const LearningCurve& curve, std::size_t window, std::ostream& out) {
  out << "size,accuracy_mean,accuracy_std,trailing_slope\n";
  for (std::size_t i = 0; i < curve.points.size(); ++i) {
    const auto& p = curve.points[i];
    const auto slope = trailing_slope(curve, window, i);
    out << p.size << ',' << csv::format_number(p.accuracy_mean) << ',' << csv::format_number(p.accuracy_std) << ','
        << (slope ? csv::format_number(*slope) : std::string()) << '\n';
  }
}

}  // namespace survbias
