#include "survbias/learners.hpp"

#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include <json.hpp>

namespace survbias {

std::string to_string(ModelKind k) { return k == ModelKind::random_forest ? "rf" : "gbdt"; }

ModelKind parse_model_kind(const std::string& s) {
  if (s == "rf" || s == "random_forest") return ModelKind::random_forest;
  if (s == "gbdt") return ModelKind::gbdt;
  throw std::invalid_argument("unknown model '" + s + "' (expected rf or gbdt)");
}

EnsembleParams EnsembleParams::random_forest() {
  EnsembleParams p;
  p.kind = ModelKind::random_forest;
  p.n_trees = 100;
  p.tree.max_depth = 16;
  p.tree.min_samples_leaf = 1;
  p.tree.features.rule = FeatureSubsample::Rule::sqrt;
  p.tree.criterion = SplitCriterion::gini;
  p.bootstrap = true;
  return p;
}

EnsembleParams EnsembleParams::gbdt() {
  EnsembleParams p;
  p.kind = ModelKind::gbdt;
  p.n_trees = 100;
  p.learning_rate = 0.1;
  p.tree.max_depth = 3;
  p.tree.min_samples_leaf = 1;
  p.tree.features.rule = FeatureSubsample::Rule::all;
  p.tree.criterion = SplitCriterion::logistic_gain;
  p.bootstrap = false;
  return p;
}

EnsembleParams EnsembleParams::defaults(ModelKind kind) {
  return kind == ModelKind::random_forest ? random_forest() : gbdt();
}

void EnsembleParams::validate() const {
  if (n_trees < 1) throw std::invalid_argument("EnsembleParams: n_trees must be >= 1");
  tree.validate();
  if (kind == ModelKind::gbdt && !(learning_rate > 0.0 && learning_rate <= 1.0))
    throw std::invalid_argument("EnsembleParams: learning_rate must lie in (0, 1]");
}

bool operator==(const EnsembleParams& a, const EnsembleParams& b) {
  return a.kind == b.kind && a.n_trees == b.n_trees && a.tree.max_depth == b.tree.max_depth &&
         a.tree.min_samples_leaf == b.tree.min_samples_leaf && a.tree.features.rule == b.tree.features.rule &&
         a.tree.features.count == b.tree.features.count && a.tree.criterion == b.tree.criterion &&
         a.learning_rate == b.learning_rate && a.bootstrap == b.bootstrap && a.seed == b.seed;
}

double sigmoid(double margin) { return 1.0 / (1.0 + std::exp(-margin)); }

namespace {

double row_logistic_loss(double margin, int y) {
  // log(1 + e^m) - y*m, computed without overflow
  const double softplus = margin > 0.0 ? margin + std::log1p(std::exp(-margin)) : std::log1p(std::exp(margin));
  return softplus - (y == 1 ? margin : 0.0);
}

TrainedModel fit_forest(const EnsembleParams& params, const Dataset& train, Execution exec) {
  const std::size_t n = train.size();
  std::vector<double> label(n), ones(n, 1.0);
  for (std::size_t i = 0; i < n; ++i) label[i] = train.y[i];
  const RowStats stats{label, ones};

  std::vector<Tree> trees(params.n_trees);
  const auto n_trees = static_cast<std::ptrdiff_t>(params.n_trees);
#pragma omp parallel for schedule(dynamic) if (exec == Execution::parallel)
  for (std::ptrdiff_t t = 0; t < n_trees; ++t) {
    Rng rng(derive_seed(params.seed, static_cast<std::uint64_t>(t)));
    std::vector<std::size_t> rows(n);
    if (params.bootstrap) {
      for (auto& r : rows) r = static_cast<std::size_t>(rng.below(n));
    } else {
      std::iota(rows.begin(), rows.end(), std::size_t{0});
    }
    trees[static_cast<std::size_t>(t)] = grow_tree(train.X, stats, std::move(rows), params.tree, rng);
  }
  return TrainedModel(ModelKind::random_forest, std::move(trees), 0.0, n, train.features(), params.seed);
}

TrainedModel fit_boosted(const EnsembleParams& params, const Dataset& train, Execution exec) {
  const std::size_t n = train.size();
  const std::size_t pos = train.positives();
  if (pos == 0 || pos == n) throw std::invalid_argument("fit: gbdt needs both classes in the training set");

  const double prior = static_cast<double>(pos) / static_cast<double>(n);
  const double base = std::log(prior / (1.0 - prior));
  std::vector<double> margin(n, base), grad(n), hess(n), step(n), trial(n);
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), std::size_t{0});
  const auto rows = static_cast<std::ptrdiff_t>(n);
  const bool par = exec == Execution::parallel;

  const FeatureOrder order = presort_features(train.X, exec);
  std::vector<Tree> trees;
  std::vector<double> loss{mean_logistic_loss(margin, train.y)};
  trees.reserve(params.n_trees);
  for (std::size_t stage = 0; stage < params.n_trees; ++stage) {
#pragma omp parallel for if (par)
    for (std::ptrdiff_t i = 0; i < rows; ++i) {
      const double p = sigmoid(margin[static_cast<std::size_t>(i)]);
      grad[static_cast<std::size_t>(i)] = train.y[static_cast<std::size_t>(i)] - p;
      hess[static_cast<std::size_t>(i)] = p * (1.0 - p);
    }
    Rng rng(derive_seed(params.seed, static_cast<std::uint64_t>(stage)));
    Tree tree = grow_tree(train.X, RowStats{grad, hess}, all, params.tree, rng, exec, &order);
    tree.scale_leaves(params.learning_rate);

#pragma omp parallel for if (par)
    for (std::ptrdiff_t i = 0; i < rows; ++i)
      step[static_cast<std::size_t>(i)] = tree.predict(train.X.row(static_cast<std::size_t>(i)));

    // Shrink the stage until the training loss does not go up.
    double scale = 1.0;
    double next_loss = loss.back();
    for (int attempt = 0; attempt < 40; ++attempt) {
      for (std::size_t i = 0; i < n; ++i) trial[i] = margin[i] + scale * step[i];
      next_loss = mean_logistic_loss(trial, train.y);
      if (next_loss <= loss.back()) break;
      scale *= 0.5;
    }
    if (next_loss > loss.back()) {
      scale = 0.0;
      next_loss = loss.back();
      trial = margin;
    }
    if (scale != 1.0) tree.scale_leaves(scale);
    margin.swap(trial);
    loss.push_back(next_loss);
    trees.push_back(std::move(tree));
  }
  return TrainedModel(ModelKind::gbdt, std::move(trees), base, n, train.features(), params.seed, std::move(loss));
}

}  // namespace

double mean_logistic_loss(std::span<const double> margins, std::span<const int> y) {
  if (margins.size() != y.size()) throw std::invalid_argument("mean_logistic_loss: length mismatch");
  if (margins.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < margins.size(); ++i) total += row_logistic_loss(margins[i], y[i]);
  return total / static_cast<double>(margins.size());
}

TrainedModel::TrainedModel(ModelKind kind, std::vector<Tree> trees, double base_margin, std::size_t n_rows,
                           std::size_t n_features, std::uint64_t seed, std::vector<double> stage_loss)
    : kind_(kind),
      trees_(std::move(trees)),
      base_margin_(base_margin),
      n_rows_(n_rows),
      n_features_(n_features),
      seed_(seed),
      stage_loss_(std::move(stage_loss)) {
  if (trees_.empty()) throw std::invalid_argument("TrainedModel: no trees");
}

double TrainedModel::score(std::span<const double> row) const {
  if (row.size() != n_features_)
    throw std::invalid_argument("predict: row has " + std::to_string(row.size()) + " features, model expects " +
                                std::to_string(n_features_));
  if (kind_ == ModelKind::random_forest) {
    double sum = 0.0;
    for (const auto& t : trees_) sum += t.predict(row);
    return sum / static_cast<double>(trees_.size());
  }
  double m = base_margin_;
  for (const auto& t : trees_) m += t.predict(row);
  return sigmoid(m);
}

std::vector<double> TrainedModel::predict_proba(const Matrix& X, Execution exec) const {
  if (X.cols() != n_features_)
    throw std::invalid_argument("predict: matrix has " + std::to_string(X.cols()) + " features, model expects " +
                                std::to_string(n_features_));
  std::vector<double> out(X.rows());
  const auto rows = static_cast<std::ptrdiff_t>(X.rows());
#pragma omp parallel for if (exec == Execution::parallel && rows >= 256)
  for (std::ptrdiff_t i = 0; i < rows; ++i)
    out[static_cast<std::size_t>(i)] = score(X.row(static_cast<std::size_t>(i)));
  return out;
}

void TrainedModel::dump(std::ostream& out) const {
  nlohmann::ordered_json j;
  j["kind"] = to_string(kind_);
  j["training_rows"] = n_rows_;
  j["features"] = n_features_;
  j["seed"] = seed_;
  j["base_margin"] = base_margin_;
  auto arr = nlohmann::ordered_json::array();
  for (const auto& t : trees_) {
    auto nodes = nlohmann::ordered_json::array();
    for (const auto& n : t.nodes()) {
      if (n.is_leaf())
        nodes.push_back({{"leaf", n.value}});
      else
        nodes.push_back({{"feature", n.feature}, {"threshold", n.threshold}, {"left", n.left}, {"right", n.right}});
    }
    arr.push_back(std::move(nodes));
  }
  j["trees"] = std::move(arr);
  out << j.dump(1) << '\n';
}

TrainedModel fit(const EnsembleParams& params, const Dataset& train, Execution exec) {
  params.validate();
  if (train.size() == 0) throw std::invalid_argument("fit: empty training set");
  if (params.kind == ModelKind::random_forest) return fit_forest(params, train, exec);
  return fit_boosted(params, train, exec);
}

}  // namespace survbias
