#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "survbias/calibration.hpp"
#include "survbias/config.hpp"
#include "survbias/dynamics.hpp"
#include "survbias/evaluation.hpp"

namespace survbias {

// Stage runners behind the command-line subcommands. Each reads its inputs
// from and writes its artifacts under the experiment's output root.
//
//   <root>/<dataset>/dataset.csv, dataset.schema.json, summary.csv
//   <root>/<dataset>/<model>/curve.csv, n0.json
//   <root>/<dataset>/<model>/sweep.csv, thresholds.csv
//   <root>/<dataset>/<model>/sim/<policy>/series.csv, manifest.json
//   <root>/<dataset>/<model>/report.csv

class StageError : public std::runtime_error {
public:
  StageError(std::string stage, const std::string& what)
      : std::runtime_error(stage + ": " + what), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

private:
  std::string stage_;
};

struct Layout {
  std::filesystem::path root;
  std::string dataset;
  std::string model;

  static Layout of(const ExperimentConfig& cfg);
  std::filesystem::path dataset_dir() const { return root / dataset; }
  std::filesystem::path model_dir() const { return root / dataset / model; }
  std::filesystem::path run_dir(const std::string& label) const { return model_dir() / "sim" / label; }
};

// Named substreams of the root seed.
std::uint64_t stage_seed(const ExperimentConfig& cfg, std::string_view stage);

struct PreprocessSummary {
  std::size_t rows = 0;
  std::size_t features = 0;
  double majority_share = 0.0;
};

Dataset build_dataset(const ExperimentConfig& cfg);
PreprocessSummary cmd_preprocess(const ExperimentConfig& cfg);

struct N0Report {
  LearningCurve curve;
  N0Result result;
};
N0Report cmd_n0(const ExperimentConfig& cfg);

struct ThresholdRow {
  ThresholdPolicy policy;
  double accuracy = 0.0;
  double relative_loss_pct = 0.0;  // vs the accuracy-optimal threshold
};
struct SweepReport {
  Sweep sweep;
  std::vector<ThresholdRow> thresholds;  // acc first, then one per cost
};
SweepReport cmd_sweep(const ExperimentConfig& cfg);

struct SimulationRun {
  ThresholdPolicy policy;
  PairedRunResult result;
  std::filesystem::path dir;
};
std::vector<SimulationRun> cmd_simulate(const ExperimentConfig& cfg);

// Final-iteration summary of every simulated run.
std::filesystem::path cmd_report(const ExperimentConfig& cfg);

void write_thresholds_csv(const std::vector<ThresholdRow>& rows, std::ostream& out);

}  // namespace survbias
