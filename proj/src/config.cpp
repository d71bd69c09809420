#include "survbias/config.hpp"

#include <fstream>
#include <stdexcept>

#include "survbias/evaluation.hpp"

namespace survbias {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::string criterion_name(SplitCriterion c) { return c == SplitCriterion::gini ? "gini" : "logistic_gain"; }

SplitCriterion parse_criterion(const std::string& s) {
  if (s == "gini") return SplitCriterion::gini;
  if (s == "logistic_gain") return SplitCriterion::logistic_gain;
  throw std::invalid_argument("unknown split criterion '" + s + "'");
}

template <class T>
void read_if(const json& j, const char* key, T& out) {
  if (j.contains(key) && !j.at(key).is_null()) out = j.at(key).get<T>();
}

}  // namespace

ordered_json to_json(const EnsembleParams& p) {
  ordered_json j;
  j["model"] = to_string(p.kind);
  j["n_trees"] = p.n_trees;
  j["max_depth"] = p.tree.max_depth;
  j["min_samples_leaf"] = p.tree.min_samples_leaf;
  switch (p.tree.features.rule) {
    case FeatureSubsample::Rule::all:
      j["feature_subsample"] = "all";
      break;
    case FeatureSubsample::Rule::sqrt:
      j["feature_subsample"] = "sqrt";
      break;
    case FeatureSubsample::Rule::fixed:
      j["feature_subsample"] = p.tree.features.count;
      break;
  }
  j["criterion"] = criterion_name(p.tree.criterion);
  j["learning_rate"] = p.learning_rate;
  j["bootstrap"] = p.bootstrap;
  j["seed"] = p.seed;
  return j;
}

EnsembleParams learner_from_json(const json& j) {
  EnsembleParams p = EnsembleParams::defaults(parse_model_kind(j.value("model", std::string("rf"))));
  read_if(j, "n_trees", p.n_trees);
  read_if(j, "max_depth", p.tree.max_depth);
  read_if(j, "min_samples_leaf", p.tree.min_samples_leaf);
  if (j.contains("feature_subsample")) {
    const auto& f = j.at("feature_subsample");
    if (f.is_number_unsigned()) {
      p.tree.features = {FeatureSubsample::Rule::fixed, f.get<std::size_t>()};
    } else if (f == "all") {
      p.tree.features = {FeatureSubsample::Rule::all, 0};
    } else if (f == "sqrt") {
      p.tree.features = {FeatureSubsample::Rule::sqrt, 0};
    } else {
      throw std::invalid_argument("feature_subsample must be \"all\", \"sqrt\" or a count");
    }
  }
  if (j.contains("criterion")) p.tree.criterion = parse_criterion(j.at("criterion").get<std::string>());
  read_if(j, "learning_rate", p.learning_rate);
  read_if(j, "bootstrap", p.bootstrap);
  read_if(j, "seed", p.seed);
  return p;
}

ordered_json to_json(const ExperimentConfig& c) {
  ordered_json j;
  auto& d = j["dataset"];
  d["name"] = c.dataset.name;
  d["path"] = c.dataset.path;
  d["label_column"] = c.dataset.label_column;
  d["positive_means_default"] = c.dataset.positive_means_default;
  d["drop_columns"] = c.dataset.drop_columns;
  d["drop_high_null_columns"] = c.dataset.drop_high_null_columns;
  d["drop_null_rows"] = c.dataset.drop_null_rows;
  if (c.dataset.feature_select)
    d["feature_select"] = {{"top_m", c.dataset.feature_select->top_m},
                           {"pair_threshold", c.dataset.feature_select->pair_threshold}};
  else
    d["feature_select"] = nullptr;
  d["target_majority_share"] = c.dataset.target_majority_share ? json(*c.dataset.target_majority_share) : json();
  if (c.dataset.synthetic) {
    const auto& s = *c.dataset.synthetic;
    d["synthetic"] = {{"n", s.n}, {"d", s.d}, {"class_sep", s.class_sep}, {"majority_share", s.majority_share}};
  } else {
    d["synthetic"] = nullptr;
  }

  j["learner"] = to_json(c.learner);
  j["sweep"] = {{"grid_step", c.sweep.grid_step}, {"costs", c.sweep.costs}};

  auto& s = j["simulation"];
  s["n0"] = c.simulation.n0 ? json(*c.simulation.n0) : json("auto");
  s["n_prime"] = c.simulation.n_prime;
  s["iterations"] = c.simulation.iterations;
  s["thresholds"] = c.simulation.thresholds;
  s["refit_each_iteration"] = c.simulation.refit_each_iteration;

  j["calibration"] = {{"k", c.calibration.k},
                      {"eval_fraction", c.calibration.eval_fraction},
                      {"window", c.calibration.window},
                      {"slope_eps", c.calibration.slope_eps},
                      {"repetitions", c.calibration.repetitions}};
  j["seed"] = c.seed;
  j["output_dir"] = c.output_dir;
  return j;
}

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c;
  if (j.contains("dataset")) {
    const auto& d = j.at("dataset");
    read_if(d, "name", c.dataset.name);
    read_if(d, "path", c.dataset.path);
    read_if(d, "label_column", c.dataset.label_column);
    read_if(d, "positive_means_default", c.dataset.positive_means_default);
    read_if(d, "drop_columns", c.dataset.drop_columns);
    read_if(d, "drop_high_null_columns", c.dataset.drop_high_null_columns);
    read_if(d, "drop_null_rows", c.dataset.drop_null_rows);
    if (d.contains("feature_select") && !d.at("feature_select").is_null()) {
      FeatureSelectSpec fs;
      read_if(d.at("feature_select"), "top_m", fs.top_m);
      read_if(d.at("feature_select"), "pair_threshold", fs.pair_threshold);
      c.dataset.feature_select = fs;
    }
    if (d.contains("target_majority_share") && !d.at("target_majority_share").is_null())
      c.dataset.target_majority_share = d.at("target_majority_share").get<double>();
    if (d.contains("synthetic") && !d.at("synthetic").is_null()) {
      SyntheticSpec s;
      read_if(d.at("synthetic"), "n", s.n);
      read_if(d.at("synthetic"), "d", s.d);
      read_if(d.at("synthetic"), "class_sep", s.class_sep);
      read_if(d.at("synthetic"), "majority_share", s.majority_share);
      c.dataset.synthetic = s;
    }
  }
  if (j.contains("learner")) c.learner = learner_from_json(j.at("learner"));
  if (j.contains("sweep")) {
    read_if(j.at("sweep"), "grid_step", c.sweep.grid_step);
    read_if(j.at("sweep"), "costs", c.sweep.costs);
  }
  if (j.contains("simulation")) {
    const auto& s = j.at("simulation");
    if (s.contains("n0")) {
      const auto& n0 = s.at("n0");
      if (n0.is_string()) {
        if (n0 != "auto") throw std::invalid_argument("simulation.n0 must be a count or \"auto\"");
        c.simulation.n0.reset();
      } else {
        c.simulation.n0 = n0.get<std::size_t>();
      }
    }
    read_if(s, "n_prime", c.simulation.n_prime);
    read_if(s, "iterations", c.simulation.iterations);
    read_if(s, "thresholds", c.simulation.thresholds);
    read_if(s, "refit_each_iteration", c.simulation.refit_each_iteration);
  }
  if (j.contains("calibration")) {
    const auto& k = j.at("calibration");
    read_if(k, "k", c.calibration.k);
    read_if(k, "eval_fraction", c.calibration.eval_fraction);
    read_if(k, "window", c.calibration.window);
    read_if(k, "slope_eps", c.calibration.slope_eps);
    read_if(k, "repetitions", c.calibration.repetitions);
  }
  read_if(j, "seed", c.seed);
  read_if(j, "output_dir", c.output_dir);
  return c;
}

void ExperimentConfig::validate() const {
  learner.validate();
  ThresholdGrid{sweep.grid_step};
  for (double c : sweep.costs)
    if (!(c >= 0.0)) throw std::invalid_argument("config: every cost c must be >= 0");
  if (simulation.iterations < 1) throw std::invalid_argument("config: simulation.iterations must be >= 1");
  for (const auto& t : simulation.thresholds) parse_threshold_request(t);
  if (!simulation.n0) {
    if (calibration.k < 1) throw std::invalid_argument("config: n0 \"auto\" needs calibration.k >= 1");
    if (calibration.window < 2) throw std::invalid_argument("config: n0 \"auto\" needs calibration.window >= 2");
  }
  if (!(calibration.eval_fraction > 0.0 && calibration.eval_fraction < 1.0))
    throw std::invalid_argument("config: calibration.eval_fraction must lie in (0, 1)");
  if (dataset.target_majority_share) ImbalanceRatio{*dataset.target_majority_share};
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config " + path.string());
  const json j = json::parse(in);
  return config_from_json(j.contains("experiment") ? j.at("experiment") : j);
}

void save_config(const ExperimentConfig& c, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << to_json(c).dump(2) << '\n';
}

}  // namespace survbias
