#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "survbias/learners.hpp"

namespace survbias {

struct FeatureSelectSpec {
  std::size_t top_m = 50;
  double pair_threshold = 0.85;
  friend bool operator==(const FeatureSelectSpec&, const FeatureSelectSpec&) = default;
};

struct SyntheticSpec {
  std::size_t n = 2000;
  std::size_t d = 5;
  double class_sep = 1.5;
  double majority_share = 0.7;
  friend bool operator==(const SyntheticSpec&, const SyntheticSpec&) = default;
};

struct DatasetSpec {
  std::string name = "dataset";
  std::string path;
  std::string label_column;
  bool positive_means_default = true;
  std::vector<std::string> drop_columns;
  std::size_t drop_high_null_columns = 0;
  bool drop_null_rows = true;
  std::optional<FeatureSelectSpec> feature_select;
  std::optional<double> target_majority_share;
  // Generates the raw data instead of reading `path`.
  std::optional<SyntheticSpec> synthetic;
  friend bool operator==(const DatasetSpec&, const DatasetSpec&) = default;
};

struct SweepSpec {
  double grid_step = 0.0001;
  std::vector<double> costs{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  friend bool operator==(const SweepSpec&, const SweepSpec&) = default;
};

struct SimulationSpec {
  std::optional<std::size_t> n0;  // empty = "auto" (learning-curve calibration)
  std::size_t n_prime = 0;        // 0 = max(n0 / 10, 100)
  std::size_t iterations = 10;
  std::vector<std::string> thresholds{"acc", "sc:1", "sc:3", "sc:5"};
  bool refit_each_iteration = true;
  friend bool operator==(const SimulationSpec&, const SimulationSpec&) = default;
};

struct CalibrationSpec {
  std::size_t k = 1000;
  double eval_fraction = 0.2;
  std::size_t window = 5;
  double slope_eps = 0.002;
  std::size_t repetitions = 3;
  friend bool operator==(const CalibrationSpec&, const CalibrationSpec&) = default;
};

struct ExperimentConfig {
  DatasetSpec dataset;
  EnsembleParams learner = EnsembleParams::random_forest();
  SweepSpec sweep;
  SimulationSpec simulation;
  CalibrationSpec calibration;
  std::uint64_t seed = 0;
  std::string output_dir = "out";

  void validate() const;
  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

nlohmann::ordered_json to_json(const EnsembleParams& p);
EnsembleParams learner_from_json(const nlohmann::json& j);

nlohmann::ordered_json to_json(const ExperimentConfig& c);
ExperimentConfig config_from_json(const nlohmann::json& j);

// Accepts a plain config file or a run manifest (its "experiment" member).
ExperimentConfig load_config(const std::filesystem::path& path);
void save_config(const ExperimentConfig& c, const std::filesystem::path& path);

}  // namespace survbias
