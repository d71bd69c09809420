#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <sys/wait.h>

#include "survbias/config.hpp"
#include "survbias/csv.hpp"
#include "survbias/pipeline.hpp"

using namespace survbias;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("survbias_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

ExperimentConfig synthetic_config(const fs::path& root) {
  ExperimentConfig c;
  c.dataset.name = "synth";
  c.dataset.synthetic = SyntheticSpec{1500, 4, 1.5, 0.7};
  c.learner = EnsembleParams::gbdt();
  c.learner.n_trees = 20;
  c.sweep.grid_step = 0.001;
  c.sweep.costs = {1, 2, 3};
  c.simulation.n0 = 300;
  c.simulation.n_prime = 100;
  c.simulation.iterations = 3;
  c.simulation.thresholds = {"acc", "sc:3"};
  c.calibration.k = 300;
  c.seed = 17;
  c.output_dir = root.string();
  return c;
}

// Runs the CLI; returns its exit status and captures stderr.
int cli(const std::string& args, std::string* err = nullptr, const std::string& env = "") {
  const fs::path errfile = fs::temp_directory_path() / "survbias_cli_stderr.txt";
  const std::string cmd =
      env + " \"" + std::string(SURVBIAS_CLI) + "\" " + args + " > /dev/null 2> \"" + errfile.string() + "\"";
  const int rc = std::system(cmd.c_str());
  if (err) *err = slurp(errfile);
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace

TEST_SUITE("config_cli") {

TEST_CASE("config round-trip") {
  ExperimentConfig c = synthetic_config("/tmp/x");
  c.dataset.feature_select = FeatureSelectSpec{10, 0.9};
  c.dataset.target_majority_share = 0.75;
  c.dataset.drop_columns = {"ID"};
  c.learner.tree.features.rule = FeatureSubsample::Rule::fixed;
  c.learner.tree.features.count = 3;
  CHECK(config_from_json(nlohmann::json::parse(to_json(c).dump())) == c);

  ExperimentConfig autoc = c;
  autoc.simulation.n0.reset();
  CHECK(config_from_json(nlohmann::json::parse(to_json(autoc).dump())) == autoc);
  CHECK(ExperimentConfig{} == config_from_json(nlohmann::json::parse(to_json(ExperimentConfig{}).dump())));
}

TEST_CASE("validation") {
  ExperimentConfig c = synthetic_config("/tmp/x");
  c.simulation.iterations = 0;
  CHECK_THROWS(c.validate());
  c = synthetic_config("/tmp/x");
  c.sweep.costs = {-1.0};
  CHECK_THROWS(c.validate());
  c = synthetic_config("/tmp/x");
  c.simulation.thresholds = {"bogus"};
  CHECK_THROWS(c.validate());
}

TEST_CASE("pipeline on synthetic data") {
  const fs::path root = scratch("pipeline");
  ExperimentConfig c = synthetic_config(root);
  c.dataset.synthetic->n = 2000;
  c.dataset.synthetic->majority_share = 0.85;
  c.calibration.k = 150;
  c.dataset.target_majority_share = 0.77;

  const auto summary = cmd_preprocess(c);
  CHECK(std::abs(summary.majority_share - 0.77) <= 1.0 / static_cast<double>(summary.rows));
  const Layout L = Layout::of(c);
  CHECK(fs::exists(L.dataset_dir() / "dataset.csv"));
  CHECK(fs::exists(L.dataset_dir() / "dataset.schema.json"));
  CHECK(fs::exists(L.dataset_dir() / "summary.csv"));

  const auto n0 = cmd_n0(c);
  CHECK(fs::exists(L.model_dir() / "curve.csv"));
  CHECK(fs::exists(L.model_dir() / "n0.json"));
  CHECK(n0.result.n0 >= 300);

  const auto sw = cmd_sweep(c);
  REQUIRE(sw.thresholds.size() == 4);
  CHECK(sw.thresholds[0].policy.grid_index == sw.thresholds[1].policy.grid_index);  // sc1 duplicates acc
  for (const auto& t : sw.thresholds)
    CHECK(t.relative_loss_pct == doctest::Approx(relative_accuracy_loss(sw.thresholds[0].accuracy, t.accuracy)));
  std::ifstream th(L.model_dir() / "thresholds.csv");
  const auto rows = csv::read_all(th);
  CHECK(rows.size() == 5);

  const auto runs = cmd_simulate(c);
  REQUIRE(runs.size() == 2);
  for (const auto& r : runs) {
    CHECK(fs::exists(r.dir / "series.csv"));
    CHECK(fs::exists(r.dir / "manifest.json"));
  }
  const auto report = cmd_report(c);
  std::ifstream rin(report);
  CHECK(csv::read_all(rin).size() == 1 + 2 * 2);
}

TEST_CASE("a strongly separable balanced set loses little accuracy at c=5") {
  const fs::path root = scratch("loss");
  ExperimentConfig c = synthetic_config(root);
  c.dataset.synthetic = SyntheticSpec{4000, 5, 5.0, 0.5};
  c.sweep.costs = {1, 2, 3, 4, 5};
  cmd_preprocess(c);
  const auto sw = cmd_sweep(c);
  CHECK(sw.thresholds.back().relative_loss_pct < 1.3);
}

TEST_CASE("stage errors name the failing step") {
  const fs::path root = scratch("errors");
  const fs::path csv = root / "raw.csv";
  std::ofstream(csv) << "a,b\n1,0\n2,1\n";
  ExperimentConfig c;
  c.dataset.name = "raw";
  c.dataset.path = csv.string();
  c.dataset.label_column = "target";
  c.output_dir = root.string();
  try {
    cmd_preprocess(c);
    FAIL("expected a StageError");
  } catch (const StageError& e) {
    CHECK(e.stage() == "load");
    CHECK(std::string(e.what()).find("target") != std::string::npos);
  }
  CHECK_THROWS_AS(cmd_sweep(synthetic_config(root / "empty")), StageError);
}

TEST_CASE("command line") {
  const fs::path root = scratch("cli");
  const ExperimentConfig c = synthetic_config(root / "from_config");
  const fs::path cfg = root / "config.json";
  save_config(c, cfg);
  const std::string with = "--config \"" + cfg.string() + "\"";

  SUBCASE("full run, rerun from manifest is byte identical") {
    REQUIRE(cli("preprocess " + with) == 0);
    REQUIRE(cli("sweep " + with) == 0);
    REQUIRE(cli("simulate " + with) == 0);
    REQUIRE(cli("report " + with) == 0);
    const Layout L = Layout::of(c);
    const fs::path run = L.run_dir("sc_c3");
    const std::string series = slurp(run / "series.csv");
    const std::string sweep = slurp(L.model_dir() / "sweep.csv");
    CHECK_FALSE(series.empty());
    fs::remove(run / "series.csv");
    REQUIRE(cli("simulate --config \"" + (run / "manifest.json").string() + "\"") == 0);
    CHECK(slurp(run / "series.csv") == series);
    REQUIRE(cli("sweep " + with) == 0);
    CHECK(slurp(L.model_dir() / "sweep.csv") == sweep);
  }
  SUBCASE("output root: env overrides config, --out overrides env") {
    const fs::path env_root = root / "env";
    REQUIRE(cli("preprocess " + with, nullptr, "SURVBIAS_OUTPUT_ROOT=\"" + env_root.string() + "\"") == 0);
    CHECK(fs::exists(env_root / "synth" / "dataset.csv"));
    const fs::path flag_root = root / "flag";
    REQUIRE(cli("preprocess " + with + " --out \"" + flag_root.string() + "\"", nullptr,
                "SURVBIAS_OUTPUT_ROOT=\"" + env_root.string() + "\"") == 0);
    CHECK(fs::exists(flag_root / "synth" / "dataset.csv"));
    REQUIRE(cli("preprocess " + with + " --dataset other --seed 4") == 0);
    CHECK(fs::exists(root / "from_config" / "other" / "dataset.csv"));
  }
  SUBCASE("--model switches the learner directory") {
    REQUIRE(cli("preprocess " + with) == 0);
    REQUIRE(cli("sweep " + with + " --model rf") == 0);
    CHECK(fs::exists(root / "from_config" / "synth" / "rf" / "sweep.csv"));
  }
  SUBCASE("failures exit nonzero and name the stage") {
    std::string err;
    CHECK(cli("sweep --config \"" + cfg.string() + "\" --out \"" + (root / "nothing").string() + "\"", &err) == 1);
    CHECK(err.find("sweep") != std::string::npos);
    CHECK(cli("preprocess --model svm", &err) != 0);
    ExperimentConfig k = c;
    k.calibration.k = 5000;
    save_config(k, root / "bigk.json");
    REQUIRE(cli("preprocess --config \"" + (root / "bigk.json").string() + "\"") == 0);
    CHECK(cli("n0 --config \"" + (root / "bigk.json").string() + "\"", &err) == 1);
    CHECK(err.find("learning_curve") != std::string::npos);
  }
}

}  // TEST_SUITE
