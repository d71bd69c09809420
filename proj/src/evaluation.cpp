#include "survbias/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "survbias/csv.hpp"

namespace survbias {

ConfusionCounts& ConfusionCounts::operator+=(const ConfusionCounts& o) {
  tp += o.tp;
  fp += o.fp;
  tn += o.tn;
  fn += o.fn;
  return *this;
}

ThresholdGrid::ThresholdGrid(double step) : step_(step) {
  if (!(step > 0.0 && step <= 1.0)) throw std::invalid_argument("grid step must lie in (0, 1]");
  const double inv = 1.0 / step;
  const double rounded = std::round(inv);
  exact_ = std::abs(inv - rounded) < 1e-9 * rounded;
  if (exact_) {
    intervals_ = static_cast<std::size_t>(rounded);
    points_ = intervals_ + 1;
  } else {
    intervals_ = static_cast<std::size_t>(std::floor(inv));
    points_ = intervals_ + 2;  // the final point is 1 itself
  }
}

double ThresholdGrid::tau(std::size_t index) const {
  if (index >= points_) throw std::out_of_range("ThresholdGrid: index out of range");
  if (index + 1 == points_) return 1.0;
  if (exact_) return static_cast<double>(index) / static_cast<double>(intervals_);
  return static_cast<double>(index) * step_;
}

std::size_t ThresholdGrid::nearest(double t) const {
  std::size_t best = 0;
  double best_dist = std::abs(tau(0) - t);
  std::size_t lo = 0, hi = points_ - 1;
  // tau() is increasing; narrow down, then check neighbours
  while (hi - lo > 1) {
    const std::size_t mid = lo + (hi - lo) / 2;
    (tau(mid) <= t ? lo : hi) = mid;
  }
  for (std::size_t i : {lo, hi}) {
    const double dist = std::abs(tau(i) - t);
    if (dist < best_dist) {
      best = i;
      best_dist = dist;
    }
  }
  return best;
}

ThresholdPolicy ThresholdPolicy::fixed(double tau) {
  ThresholdPolicy p;
  p.tau = tau;
  p.origin = Origin::fixed;
  p.validate();
  return p;
}

std::string ThresholdPolicy::label() const {
  switch (origin) {
    case Origin::fixed:
      return "fixed_" + csv::format_number(tau);
    case Origin::accuracy_optimal:
      return "acc";
    case Origin::social_cost_optimal:
      return "sc_c" + csv::format_number(cost);
  }
  return "?";
}

void ThresholdPolicy::validate() const {
  if (!(tau >= 0.0 && tau <= 1.0)) throw std::invalid_argument("threshold must lie in [0, 1]");
  if (origin == Origin::social_cost_optimal && !(cost >= 0.0))
    throw std::invalid_argument("social cost weight must be >= 0");
}

ThresholdPolicy parse_threshold_request(const std::string& text) {
  ThresholdPolicy p;
  if (text == "acc") {
    p.origin = ThresholdPolicy::Origin::accuracy_optimal;
    return p;
  }
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw std::invalid_argument("bad threshold request '" + text + "'");
  const std::string kind = text.substr(0, colon);
  double value = 0.0;
  try {
    std::size_t used = 0;
    value = std::stod(text.substr(colon + 1), &used);
    if (used != text.size() - colon - 1) throw std::invalid_argument("trailing characters");
  } catch (const std::exception&) {
    throw std::invalid_argument("bad threshold request '" + text + "'");
  }
  if (kind == "sc") {
    p.origin = ThresholdPolicy::Origin::social_cost_optimal;
    p.cost = value;
  } else if (kind == "fixed") {
    p.origin = ThresholdPolicy::Origin::fixed;
    p.tau = value;
  } else {
    throw std::invalid_argument("bad threshold request '" + text + "'");
  }
  p.validate();
  return p;
}

std::string threshold_request_string(const ThresholdPolicy& p) {
  switch (p.origin) {
    case ThresholdPolicy::Origin::fixed:
      return "fixed:" + csv::format_number(p.tau);
    case ThresholdPolicy::Origin::accuracy_optimal:
      return "acc";
    case ThresholdPolicy::Origin::social_cost_optimal:
      return "sc:" + csv::format_number(p.cost);
  }
  return "acc";
}

std::vector<int> apply_threshold(std::span<const double> scores, double tau) {
  if (!(tau >= 0.0 && tau <= 1.0)) throw std::invalid_argument("apply_threshold: tau must lie in [0, 1]");
  std::vector<int> out(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) out[i] = scores[i] >= tau ? 1 : 0;
  return out;
}

ConfusionCounts confusion(std::span<const int> yhat, std::span<const int> y) {
  if (yhat.size() != y.size()) throw std::invalid_argument("confusion: length mismatch");
  ConfusionCounts cc;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (yhat[i] == 1)
      (y[i] == 1 ? cc.tp : cc.fp)++;
    else
      (y[i] == 1 ? cc.fn : cc.tn)++;
  }
  return cc;
}

double accuracy(const ConfusionCounts& cc) {
  if (cc.total() == 0) throw std::invalid_argument("accuracy: no evaluated rows");
  return static_cast<double>(cc.tp + cc.tn) / static_cast<double>(cc.total());
}

std::optional<double> precision(const ConfusionCounts& cc) {
  if (cc.tp + cc.fp == 0) return std::nullopt;
  return static_cast<double>(cc.tp) / static_cast<double>(cc.tp + cc.fp);
}

std::optional<double> recall(const ConfusionCounts& cc) {
  if (cc.tp + cc.fn == 0) return std::nullopt;
  return static_cast<double>(cc.tp) / static_cast<double>(cc.tp + cc.fn);
}

double social_cost(const ConfusionCounts& cc, const CostSpec& cost) {
  return cost.c_fn * static_cast<double>(cc.fn) + cost.c_fp * static_cast<double>(cc.fp);
}

namespace {

SweepRow make_row(std::size_t index, double tau, const ConfusionCounts& cc, std::span<const double> costs) {
  SweepRow row;
  row.index = index;
  row.tau = tau;
  row.confusion = cc;
  row.accuracy = accuracy(cc);
  row.precision = precision(cc);
  row.recall = recall(cc);
  row.social_cost.reserve(costs.size());
  for (double c : costs) row.social_cost.push_back(social_cost(cc, CostSpec{c, 1.0}));
  return row;
}

void check_inputs(std::span<const double> scores, std::span<const int> y, std::span<const double> costs) {
  if (scores.size() != y.size()) throw std::invalid_argument("sweep: scores and labels differ in length");
  if (scores.empty()) throw std::invalid_argument("sweep: no rows");
  for (double c : costs)
    if (!(c >= 0.0)) throw std::invalid_argument("sweep: costs must be >= 0");
}

}  // namespace

Sweep sweep(std::span<const double> scores, std::span<const int> y, double grid_step, std::span<const double> costs,
            Execution exec) {
  check_inputs(scores, y, costs);
  const ThresholdGrid grid(grid_step);
  const std::size_t G = grid.size();
  std::vector<double> taus(G);
  for (std::size_t g = 0; g < G; ++g) taus[g] = grid.tau(g);

  // cleared[i] = number of grid points with tau <= score, i.e. the row is
  // predicted positive exactly for grid indices below cleared[i].
  const auto n = static_cast<std::ptrdiff_t>(scores.size());
  std::vector<std::size_t> cleared(scores.size());
#pragma omp parallel for if (exec == Execution::parallel && n >= 4096)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto k = std::upper_bound(taus.begin(), taus.end(), scores[static_cast<std::size_t>(i)]) - taus.begin();
    cleared[static_cast<std::size_t>(i)] = static_cast<std::size_t>(k);
  }

  std::vector<std::size_t> pos_hist(G + 1, 0), neg_hist(G + 1, 0);
  std::size_t P = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (y[i] == 1) {
      ++pos_hist[cleared[i]];
      ++P;
    } else {
      ++neg_hist[cleared[i]];
    }
  }
  const std::size_t N = scores.size() - P;

  Sweep out;
  out.costs.assign(costs.begin(), costs.end());
  out.grid_step = grid_step;
  out.rows.resize(G);
  std::size_t tp = 0, fp = 0;
  for (std::size_t g = G; g-- > 0;) {
    tp += pos_hist[g + 1];
    fp += neg_hist[g + 1];
    out.rows[g] = make_row(g, taus[g], ConfusionCounts{tp, fp, N - fp, P - tp}, costs);
  }
  return out;
}

Sweep sweep_naive(std::span<const double> scores, std::span<const int> y, double grid_step,
                  std::span<const double> costs, Execution exec) {
  check_inputs(scores, y, costs);
  const ThresholdGrid grid(grid_step);
  Sweep out;
  out.costs.assign(costs.begin(), costs.end());
  out.grid_step = grid_step;
  out.rows.resize(grid.size());
  const auto G = static_cast<std::ptrdiff_t>(grid.size());
#pragma omp parallel for schedule(static) if (exec == Execution::parallel)
  for (std::ptrdiff_t g = 0; g < G; ++g) {
    const auto idx = static_cast<std::size_t>(g);
    const double tau = grid.tau(idx);
    out.rows[idx] = make_row(idx, tau, confusion(apply_threshold(scores, tau), y), costs);
  }
  return out;
}

ThresholdPolicy argmax_accuracy(const Sweep& s) {
  if (s.rows.empty()) throw std::invalid_argument("argmax_accuracy: empty sweep");
  std::size_t best = 0;
  for (std::size_t i = 1; i < s.rows.size(); ++i)
    if (s.rows[i].accuracy > s.rows[best].accuracy) best = i;
  ThresholdPolicy p;
  p.origin = ThresholdPolicy::Origin::accuracy_optimal;
  p.tau = s.rows[best].tau;
  p.grid_index = s.rows[best].index;
  return p;
}

ThresholdPolicy argmin_social_cost(const Sweep& s, double c) {
  if (s.rows.empty()) throw std::invalid_argument("argmin_social_cost: empty sweep");
  const auto it = std::find(s.costs.begin(), s.costs.end(), c);
  if (it == s.costs.end())
    throw std::invalid_argument("argmin_social_cost: c=" + csv::format_number(c) + " not part of the sweep");
  const auto k = static_cast<std::size_t>(it - s.costs.begin());
  std::size_t best = 0;
  for (std::size_t i = 1; i < s.rows.size(); ++i)
    if (s.rows[i].social_cost[k] < s.rows[best].social_cost[k]) best = i;
  ThresholdPolicy p;
  p.origin = ThresholdPolicy::Origin::social_cost_optimal;
  p.cost = c;
  p.tau = s.rows[best].tau;
  p.grid_index = s.rows[best].index;
  return p;
}

double relative_accuracy_loss(double acc_best, double acc_sc) {
  if (acc_sc == 0.0) throw std::invalid_argument("relative_accuracy_loss: zero accuracy in the denominator");
  return (acc_best - acc_sc) / acc_sc * 100.0;
}

void write_sweep_csv(const Sweep& s, std::ostream& out) {
  out << "tau,tp,fp,tn,fn,accuracy,precision,recall";
  for (double c : s.costs) out << ",sc_c" << csv::format_number(c);
  out << '\n';
  auto opt = [](const std::optional<double>& v) { return v ? csv::format_number(*v) : std::string(); };
  for (const auto& r : s.rows) {
    out << csv::format_number(r.tau) << ',' << r.confusion.tp << ',' << r.confusion.fp << ',' << r.confusion.tn << ','
        << r.confusion.fn << ',' << csv::format_number(r.accuracy) << ',' << opt(r.precision) << ','
        << opt(r.recall);
    for (double v : r.social_cost) out << ',' << csv::format_number(v);
    out << '\n';
  }
}

}  // namespace survbias
