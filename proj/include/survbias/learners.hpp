#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "survbias/data.hpp"
#include "survbias/tree.hpp"

namespace survbias {

enum class ModelKind { random_forest, gbdt };

std::string to_string(ModelKind k);
ModelKind parse_model_kind(const std::string& s);  // "rf" | "gbdt"

struct EnsembleParams {
  ModelKind kind = ModelKind::random_forest;
  std::size_t n_trees = 100;
  TreeParams tree;
  double learning_rate = 0.1;  // gbdt only
  bool bootstrap = true;       // rf only
  std::uint64_t seed = 0;

  // Library-default hyperparameters for each learner.
  static EnsembleParams random_forest();
  static EnsembleParams gbdt();
  static EnsembleParams defaults(ModelKind kind);

  void validate() const;
  friend bool operator==(const EnsembleParams&, const EnsembleParams&);
};

// Immutable fitted ensemble. Scores are Pr(y = 1 | x) in [0, 1].
class TrainedModel {
public:
  TrainedModel(ModelKind kind, std::vector<Tree> trees, double base_margin, std::size_t n_rows,
               std::size_t n_features, std::uint64_t seed, std::vector<double> stage_loss = {});

  ModelKind kind() const { return kind_; }
  const std::vector<Tree>& trees() const { return trees_; }
  std::size_t training_rows() const { return n_rows_; }
  std::size_t features() const { return n_features_; }
  std::uint64_t seed() const { return seed_; }
  // GBDT: mean logistic loss on the training set, index 0 before any stage.
  const std::vector<double>& stage_loss() const { return stage_loss_; }

  double score(std::span<const double> row) const;
  std::vector<double> predict_proba(const Matrix& X, Execution exec = Execution::parallel) const;

  // Debug dump of tree topology as JSON; not a stable format.
  void dump(std::ostream& out) const;

private:
  ModelKind kind_;
  std::vector<Tree> trees_;
  double base_margin_;
  std::size_t n_rows_;
  std::size_t n_features_;
  std::uint64_t seed_;
  std::vector<double> stage_loss_;
};

TrainedModel fit(const EnsembleParams& params, const Dataset& train, Execution exec = Execution::parallel);

inline std::vector<double> predict_proba(const TrainedModel& m, const Matrix& X,
                                         Execution exec = Execution::parallel) {
  return m.predict_proba(X, exec);
}

double sigmoid(double margin);
double mean_logistic_loss(std::span<const double> margins, std::span<const int> y);

}  // namespace survbias
