#include "survbias/tree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace survbias {

namespace {

struct Entry {
  double x;
  double a;
  double b;
};

struct Candidate {
  double gain = -std::numeric_limits<double>::infinity();
  int feature = -1;
  double threshold = 0.0;

  bool valid() const { return feature >= 0; }
  // Higher gain wins; ties go to the lower feature, then the lower threshold.
  bool better_than(const Candidate& o) const {
    if (!o.valid()) return valid();
    if (!valid()) return false;
    if (gain != o.gain) return gain > o.gain;
    if (feature != o.feature) return feature < o.feature;
    return threshold < o.threshold;
  }
};

double node_score(SplitCriterion c, double a, double b) {
  if (b <= 0.0) return 0.0;
  if (c == SplitCriterion::gini) return -2.0 * a * (b - a) / b;
  return a * a / b;
}

double midpoint(double lo, double hi) {
  double m = lo + (hi - lo) / 2.0;
  if (!(m > lo)) m = hi;
  return m;
}

Candidate scan_sorted(std::span<const Entry> buf, int feature, std::size_t min_leaf, SplitCriterion crit,
                      double a_total, double b_total) {
  Candidate best;
  const std::size_t n = buf.size();
  if (n < 2 || buf.front().x == buf.back().x) return best;
  const double parent = node_score(crit, a_total, b_total);
  double a_left = 0.0, b_left = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    a_left += buf[i].a;
    b_left += buf[i].b;
    if (buf[i].x == buf[i + 1].x) continue;
    const std::size_t n_left = i + 1;
    if (n_left < min_leaf) continue;
    if (n - n_left < min_leaf) break;
    const double gain = node_score(crit, a_left, b_left) +
                        node_score(crit, a_total - a_left, b_total - b_left) - parent;
    if (!best.valid() || gain > best.gain) {
      best.gain = gain;
      best.feature = feature;
      best.threshold = midpoint(buf[i].x, buf[i + 1].x);
    }
  }
  return best;
}

// Node rows are known either as an explicit list (gathered and sorted here) or,
// for large nodes, by filtering a presorted order of all rows on node_of.
struct NodeView {
  std::span<const std::size_t> rows;
  const std::vector<std::uint32_t>* node_of = nullptr;
  std::uint32_t node = 0;
  const std::vector<std::uint32_t>* order = nullptr;  // presorted rows for this feature
};

Candidate best_split_on_feature(const Matrix& X, RowStats stats, const NodeView& view, int feature,
                                std::size_t min_leaf, SplitCriterion crit, double a_total, double b_total) {
  thread_local std::vector<Entry> buf;
  const auto f = static_cast<std::size_t>(feature);
  if (view.order != nullptr) {
    buf.clear();
    for (std::uint32_t r : *view.order)
      if ((*view.node_of)[r] == view.node) buf.push_back({X(r, f), stats.a[r], stats.b[r]});
  } else {
    buf.resize(view.rows.size());
    for (std::size_t i = 0; i < view.rows.size(); ++i) {
      const std::size_t r = view.rows[i];
      buf[i] = {X(r, f), stats.a[r], stats.b[r]};
    }
    std::sort(buf.begin(), buf.end(), [](const Entry& l, const Entry& r) { return l.x < r.x; });
  }
  return scan_sorted(buf, feature, min_leaf, crit, a_total, b_total);
}

Candidate reduce(std::span<const Candidate> cs) {
  Candidate best;
  for (const auto& c : cs)
    if (c.better_than(best)) best = c;
  return best;
}

}  // namespace

std::size_t FeatureSubsample::resolve(std::size_t d) const {
  switch (rule) {
    case Rule::all:
      return d;
    case Rule::sqrt:
      return std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(d))));
    case Rule::fixed:
      return std::clamp<std::size_t>(count, 1, d);
  }
  return d;
}

void TreeParams::validate() const {
  if (max_depth < 1) throw std::invalid_argument("TreeParams: max_depth must be >= 1");
  if (min_samples_leaf < 1) throw std::invalid_argument("TreeParams: min_samples_leaf must be >= 1");
  if (features.rule == FeatureSubsample::Rule::fixed && features.count < 1)
    throw std::invalid_argument("TreeParams: fixed feature count must be >= 1");
}

Tree::Tree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {
  if (nodes_.empty()) throw std::invalid_argument("Tree: no nodes");
  for (const auto& n : nodes_)
    if (!n.is_leaf() && (n.left >= nodes_.size() || n.right >= nodes_.size()))
      throw std::invalid_argument("Tree: child index out of range");
}

Tree Tree::leaf(double value) { return Tree({TreeNode{-1, 0.0, 0, 0, value}}); }

Tree Tree::stump(int feature, double threshold, double left_value, double right_value) {
  return Tree({TreeNode{feature, threshold, 1, 2, 0.0}, TreeNode{-1, 0.0, 0, 0, left_value},
               TreeNode{-1, 0.0, 0, 0, right_value}});
}

double Tree::predict(std::span<const double> row) const {
  std::size_t i = 0;
  while (!nodes_[i].is_leaf()) {
    const auto& n = nodes_[i];
    i = row[static_cast<std::size_t>(n.feature)] < n.threshold ? n.left : n.right;
  }
  return nodes_[i].value;
}

std::size_t Tree::depth() const {
  std::vector<std::size_t> d(nodes_.size(), 0);
  std::size_t deepest = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    deepest = std::max(deepest, d[i]);
    if (!nodes_[i].is_leaf()) {
      d[nodes_[i].left] = d[i] + 1;
      d[nodes_[i].right] = d[i] + 1;
    }
  }
  return deepest;
}

void Tree::scale_leaves(double factor) {
  for (auto& n : nodes_)
    if (n.is_leaf()) n.value *= factor;
}

FeatureOrder presort_features(const Matrix& X, Execution exec) {
  FeatureOrder order(X.cols());
  const auto d = static_cast<std::ptrdiff_t>(X.cols());
#pragma omp parallel for schedule(dynamic) if (exec == Execution::parallel)
  for (std::ptrdiff_t f = 0; f < d; ++f) {
    auto& o = order[static_cast<std::size_t>(f)];
    o.resize(X.rows());
    std::iota(o.begin(), o.end(), std::uint32_t{0});
    const auto col = static_cast<std::size_t>(f);
    std::stable_sort(o.begin(), o.end(), [&](std::uint32_t a, std::uint32_t b) { return X(a, col) < X(b, col); });
  }
  return order;
}

Tree grow_tree(const Matrix& X, RowStats stats, std::vector<std::size_t> rows, const TreeParams& params, Rng& rng,
               Execution exec, const FeatureOrder* presorted) {
  params.validate();
  if (rows.empty()) throw std::invalid_argument("grow_tree: no rows");
  const std::size_t d = X.cols();
  const std::size_t mtry = params.features.resolve(d);
  const bool subsample = mtry < d;

  struct Pending {
    std::size_t node;
    std::size_t begin;
    std::size_t end;
    std::size_t depth;
  };

  std::vector<TreeNode> nodes(1);
  std::vector<Pending> stack{{0, 0, rows.size(), 0}};
  std::vector<std::size_t> features(d);
  std::vector<Candidate> results(d);
  std::vector<std::uint32_t> node_of;
  if (presorted != nullptr) node_of.assign(X.rows(), std::numeric_limits<std::uint32_t>::max());
  const double log_total = std::log2(static_cast<double>(std::max<std::size_t>(X.rows(), 2)));

  while (!stack.empty()) {
    const Pending p = stack.back();
    stack.pop_back();
    std::span<std::size_t> span(rows.data() + p.begin, p.end - p.begin);

    double a_total = 0.0, b_total = 0.0;
    for (std::size_t r : span) {
      a_total += stats.a[r];
      b_total += stats.b[r];
    }
    nodes[p.node].value = b_total > 0.0 ? a_total / b_total : 0.0;

    const std::size_t n = span.size();
    const bool pure = params.criterion == SplitCriterion::gini && (a_total == 0.0 || a_total == b_total);
    if (pure || p.depth >= params.max_depth || n < 2 * params.min_samples_leaf) continue;

    std::iota(features.begin(), features.end(), std::size_t{0});
    if (subsample) rng.shuffle(features);

    // Filtering a presorted order costs O(|X|); sorting the node costs O(n log n).
    const bool use_order = presorted != nullptr && static_cast<double>(n) * log_total > static_cast<double>(X.rows());
    if (use_order)
      for (std::size_t r : span) node_of[r] = static_cast<std::uint32_t>(p.node);
    auto view_for = [&](std::size_t f) {
      NodeView v{span, &node_of, static_cast<std::uint32_t>(p.node), nullptr};
      if (use_order) v.order = &(*presorted)[f];
      return v;
    };

    // First batch: mtry candidates. If none of them can split, keep drawing
    // one feature at a time until a valid split turns up or features run out.
    const auto batch = static_cast<std::ptrdiff_t>(mtry);
    const bool par = exec == Execution::parallel && n * mtry >= 4096 && mtry > 1;
#pragma omp parallel for schedule(dynamic) if (par)
    for (std::ptrdiff_t i = 0; i < batch; ++i) {
      results[static_cast<std::size_t>(i)] =
          best_split_on_feature(X, stats, view_for(features[static_cast<std::size_t>(i)]),
                                static_cast<int>(features[static_cast<std::size_t>(i)]),
                                params.min_samples_leaf, params.criterion, a_total, b_total);
    }
    Candidate best = reduce(std::span<const Candidate>(results.data(), mtry));
    for (std::size_t i = mtry; !best.valid() && i < d; ++i) {
      best = best_split_on_feature(X, stats, view_for(features[i]), static_cast<int>(features[i]),
                                   params.min_samples_leaf,
                                   params.criterion, a_total, b_total);
    }

    if (!best.valid()) continue;
    if (params.criterion == SplitCriterion::logistic_gain && !(best.gain > 0.0)) continue;

    const auto f = static_cast<std::size_t>(best.feature);
    const double thr = best.threshold;
    auto mid = std::stable_partition(span.begin(), span.end(), [&](std::size_t r) { return X(r, f) < thr; });
    const std::size_t n_left = static_cast<std::size_t>(mid - span.begin());

    const auto left = static_cast<std::uint32_t>(nodes.size());
    nodes.push_back({});
    nodes.push_back({});
    nodes[p.node].feature = best.feature;
    nodes[p.node].threshold = thr;
    nodes[p.node].left = left;
    nodes[p.node].right = left + 1;
    // right pushed first so the left subtree is grown first
    stack.push_back({left + 1, p.begin + n_left, p.end, p.depth + 1});
    stack.push_back({left, p.begin, p.begin + n_left, p.depth + 1});
  }
  return Tree(std::move(nodes));
}

}  // namespace survbias
