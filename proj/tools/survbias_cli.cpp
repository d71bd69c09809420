#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "survbias/pipeline.hpp"

using namespace survbias;

namespace {

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string dataset;
  std::string model;
};

ExperimentConfig resolve(const Overrides& o) {
  ExperimentConfig cfg = o.config.empty() ? ExperimentConfig{} : load_config(o.config);
  if (const char* env = std::getenv("SURVBIAS_OUTPUT_ROOT"); env != nullptr && *env != '\0') cfg.output_dir = env;
  if (!o.out.empty()) cfg.output_dir = o.out;
  if (o.seed) cfg.seed = *o.seed;
  if (!o.dataset.empty()) cfg.dataset.name = o.dataset;
  if (!o.model.empty()) {
    // switching model family resets learner hyperparameters to that family's defaults
    const ModelKind kind = parse_model_kind(o.model);
    if (kind != cfg.learner.kind) cfg.learner = EnsembleParams::defaults(kind);
  }
  cfg.validate();
  return cfg;
}

void print_summary(const PreprocessSummary& s) {
  std::cout << "rows " << s.rows << ", features " << s.features << ", imbalance ratio " << s.majority_share << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"survbias: survival bias in retrained loan-default classifiers"};
  app.require_subcommand(1);

  Overrides o;
  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", o.config, "experiment config (JSON) or a run manifest");
    cmd->add_option("--seed", o.seed, "root seed");
    cmd->add_option("--out", o.out, "output root directory");
    cmd->add_option("--dataset", o.dataset, "dataset name (output subdirectory)");
    cmd->add_option("--model", o.model, "learner")->check(CLI::IsMember({"rf", "gbdt"}));
  };

  auto* preprocess = app.add_subcommand("preprocess", "clean, select and cache the dataset");
  auto* n0 = app.add_subcommand("n0", "learning curve and initial batch size");
  auto* sweep = app.add_subcommand("sweep", "threshold sweep, accuracy vs social cost");
  auto* simulate = app.add_subcommand("simulate", "paired biased/oracle retraining runs");
  auto* report = app.add_subcommand("report", "final-iteration summary of simulated runs");
  for (auto* c : {preprocess, n0, sweep, simulate, report}) add_common(c);

  CLI11_PARSE(app, argc, argv);

  std::string stage = "config";
  try {
    const ExperimentConfig cfg = resolve(o);
    if (preprocess->parsed()) {
      stage = "preprocess";
      print_summary(cmd_preprocess(cfg));
    } else if (n0->parsed()) {
      stage = "n0";
      const auto rep = cmd_n0(cfg);
      std::cout << "n0 " << rep.result.n0 << (rep.result.stabilized ? "" : " (not stabilized)") << ", slope "
                << rep.result.slope << " per 1000\n";
    } else if (sweep->parsed()) {
      stage = "sweep";
      const auto rep = cmd_sweep(cfg);
      write_thresholds_csv(rep.thresholds, std::cout);
    } else if (simulate->parsed()) {
      stage = "simulate";
      for (const auto& run : cmd_simulate(cfg)) {
        const auto& b = run.result.biased.back();
        const auto& r = run.result.oracle.back();
        std::cout << run.policy.label() << " tau=" << run.policy.tau << " biased acc " << b.accuracy
                  << " oracle acc " << r.accuracy << (run.result.truncated ? " [truncated]" : "") << " -> "
                  << run.dir.string() << '\n';
      }
    } else if (report->parsed()) {
      stage = "report";
      std::cout << cmd_report(cfg).string() << '\n';
    }
  } catch (const StageError& e) {
    std::cerr << "error in " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error in " << stage << ": " << e.what() << '\n';
    return 1;
  }
  return 0;
}
