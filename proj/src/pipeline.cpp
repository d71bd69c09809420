#include "survbias/pipeline.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

#include "survbias/csv.hpp"
#include "survbias/rng.hpp"

namespace survbias {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

Layout Layout::of(const ExperimentConfig& cfg) {
  return Layout{fs::path(cfg.output_dir), cfg.dataset.name, to_string(cfg.learner.kind)};
}

std::uint64_t stage_seed(const ExperimentConfig& cfg, std::string_view stage) { return derive_seed(cfg.seed, stage); }

namespace {

std::ofstream open_out(const fs::path& path) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

Dataset load_cached(const ExperimentConfig& cfg, const std::string& stage) {
  const fs::path path = Layout::of(cfg).dataset_dir() / "dataset.csv";
  if (!fs::exists(path)) throw StageError(stage, "cached dataset " + path.string() + " missing; run preprocess first");
  return read_dataset_csv(path);
}

template <class F>
auto run_stage(const std::string& stage, F&& f) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(stage, e.what());
  }
}

}  // namespace

Dataset build_dataset(const ExperimentConfig& cfg) {
  const auto& spec = cfg.dataset;
  const std::uint64_t seed = stage_seed(cfg, "preprocess");
  Dataset ds;
  if (spec.synthetic) {
    const auto& s = *spec.synthetic;
    ds = run_stage("synthesize", [&] { return synth_generate(s.n, s.d, s.class_sep, s.majority_share, seed); });
  } else {
    RawTable t = run_stage("load", [&] { return load_csv(spec.path, spec.label_column, spec.positive_means_default); });
    if (!spec.drop_columns.empty()) t = run_stage("drop_columns", [&] { return drop_columns(t, spec.drop_columns); });
    if (spec.drop_high_null_columns > 0)
      t = run_stage("drop_high_null_columns", [&] { return drop_high_null_columns(t, spec.drop_high_null_columns); });
    if (spec.drop_null_rows) t = run_stage("drop_null_rows", [&] { return drop_null_rows(t); });
    ds = run_stage("encode", [&] { return to_dataset(t); });
    ds.provenance = spec.path + " (" + ds.provenance + ")";
  }
  if (spec.feature_select) {
    const auto fsel = *spec.feature_select;
    ds = run_stage("feature_select", [&] {
      return correlation_feature_select(ds, std::min(fsel.top_m, ds.features()), fsel.pair_threshold);
    });
  }
  if (spec.target_majority_share) {
    ds = run_stage("downsample", [&] {
      return downsample_to_ratio(ds, ImbalanceRatio(*spec.target_majority_share), derive_seed(seed, "downsample"));
    });
  }
  run_stage("validate", [&] {
    ds.validate();
    return 0;
  });
  return ds;
}

PreprocessSummary cmd_preprocess(const ExperimentConfig& cfg) {
  const Dataset ds = build_dataset(cfg);
  const Layout layout = Layout::of(cfg);
  return run_stage("write_dataset", [&] {
    fs::create_directories(layout.dataset_dir());
    {
      auto out = open_out(layout.dataset_dir() / "dataset.csv");
      write_dataset_csv(ds, out);
    }
    DatasetSchema schema;
    schema.source_label_column = cfg.dataset.label_column;
    schema.source_positive_means_default = cfg.dataset.positive_means_default;
    schema.rows = ds.size();
    schema.features = ds.features();
    schema.majority_share = ds.majority_share();
    schema.provenance = ds.provenance;
    write_schema(schema, layout.dataset_dir() / "dataset.schema.json");

    PreprocessSummary s{ds.size(), ds.features(), ds.majority_share()};
    auto out = open_out(layout.dataset_dir() / "summary.csv");
    out << "dataset,rows,features,imbalance_ratio\n"
        << csv::quote(cfg.dataset.name) << ',' << s.rows << ',' << s.features << ','
        << csv::format_number(s.majority_share) << '\n';
    return s;
  });
}

N0Report cmd_n0(const ExperimentConfig& cfg) {
  const Dataset U = load_cached(cfg, "n0");
  const auto& c = cfg.calibration;
  N0Report rep;
  rep.curve = run_stage("learning_curve", [&] {
    return learning_curve(U, cfg.learner, c.k, c.eval_fraction, stage_seed(cfg, "calibrate"), c.repetitions);
  });
  rep.result = run_stage("detect_n0", [&] { return detect_n0(rep.curve, c.window, c.slope_eps); });

  const Layout layout = Layout::of(cfg);
  run_stage("write_curve", [&] {
    {
      auto out = open_out(layout.model_dir() / "curve.csv");
      write_curve_csv(rep.curve, c.window, out);
    }
    ordered_json j;
    j["n0"] = rep.result.n0;
    j["stabilized"] = rep.result.stabilized;
    j["slope_per_1000"] = rep.result.slope;
    j["window"] = c.window;
    j["slope_eps"] = c.slope_eps;
    j["k"] = c.k;
    j["protocol"] = rep.curve.protocol;
    auto out = open_out(layout.model_dir() / "n0.json");
    out << j.dump(2) << '\n';
    return 0;
  });
  return rep;
}

void write_thresholds_csv(const std::vector<ThresholdRow>& rows, std::ostream& out) {
  out << "policy,c,tau,tau_index,accuracy,relative_loss_pct\n";
  for (const auto& r : rows) {
    const bool sc = r.policy.origin == ThresholdPolicy::Origin::social_cost_optimal;
    out << r.policy.label() << ',' << (sc ? csv::format_number(r.policy.cost) : std::string()) << ','
        << csv::format_number(r.policy.tau) << ','
        << (r.policy.grid_index ? std::to_string(*r.policy.grid_index) : std::string()) << ','
        << csv::format_number(r.accuracy) << ',' << csv::format_number(r.relative_loss_pct) << '\n';
  }
}

SweepReport cmd_sweep(const ExperimentConfig& cfg) {
  const Dataset U = load_cached(cfg, "sweep");
  const std::uint64_t seed = stage_seed(cfg, "sweep");
  SweepReport rep;
  rep.sweep = run_stage("sweep", [&] {
    auto [train, test] = split(U, 0.8, derive_seed(seed, "split"));
    EnsembleParams p = cfg.learner;
    p.seed = derive_seed(seed, "model");
    const TrainedModel m = fit(p, train);
    const auto scores = m.predict_proba(test.X);
    return sweep(scores, test.y, cfg.sweep.grid_step, cfg.sweep.costs);
  });

  const ThresholdPolicy best = argmax_accuracy(rep.sweep);
  const double acc_best = rep.sweep.rows[*best.grid_index].accuracy;
  rep.thresholds.push_back({best, acc_best, 0.0});
  for (double c : cfg.sweep.costs) {
    const ThresholdPolicy p = argmin_social_cost(rep.sweep, c);
    const double acc = rep.sweep.rows[*p.grid_index].accuracy;
    rep.thresholds.push_back({p, acc, relative_accuracy_loss(acc_best, acc)});
  }

  const Layout layout = Layout::of(cfg);
  run_stage("write_sweep", [&] {
    {
      auto out = open_out(layout.model_dir() / "sweep.csv");
      write_sweep_csv(rep.sweep, out);
    }
    auto out = open_out(layout.model_dir() / "thresholds.csv");
    write_thresholds_csv(rep.thresholds, out);
    return 0;
  });
  return rep;
}

std::vector<SimulationRun> cmd_simulate(const ExperimentConfig& cfg_in) {
  cfg_in.validate();
  ExperimentConfig cfg = cfg_in;
  const Dataset U = load_cached(cfg, "simulate");

  if (!cfg.simulation.n0) {
    const auto& c = cfg.calibration;
    const auto curve = run_stage("calibrate", [&] {
      return learning_curve(U, cfg.learner, c.k, c.eval_fraction, stage_seed(cfg, "calibrate"), c.repetitions);
    });
    cfg.simulation.n0 = detect_n0(curve, c.window, c.slope_eps).n0;
  }

  SimulationConfig sim;
  sim.n0 = *cfg.simulation.n0;
  sim.n_prime = cfg.simulation.n_prime;
  sim.iterations = cfg.simulation.iterations;
  sim.learner = cfg.learner;
  sim.seed = stage_seed(cfg, "simulate");
  sim.refit_each_iteration = cfg.simulation.refit_each_iteration;
  run_stage("simulate", [&] {
    sim.validate(U.size());
    return 0;
  });

  std::vector<ThresholdPolicy> requests;
  for (const auto& t : cfg.simulation.thresholds) requests.push_back(parse_threshold_request(t));
  const auto policies =
      run_stage("resolve_thresholds", [&] { return resolve_thresholds(U, sim, requests, cfg.sweep.grid_step); });

  const Layout layout = Layout::of(cfg);
  std::vector<SimulationRun> runs;
  for (std::size_t i = 0; i < policies.size(); ++i) {
    SimulationConfig run_cfg = sim;
    run_cfg.threshold = policies[i];
    SimulationRun run;
    run.policy = policies[i];
    run.dir = layout.run_dir(policies[i].label());
    run.result = run_stage("simulate " + policies[i].label(), [&] { return run_paired(U, run_cfg); });

    run_stage("write_series", [&] {
      {
        auto out = open_out(run.dir / "series.csv");
        write_series_csv(run.result, out);
      }
      ordered_json m;
      m["experiment"] = to_json(cfg);
      auto& r = m["run"];
      r["policy"] = policies[i].label();
      r["request"] = cfg.simulation.thresholds[i];
      r["tau"] = policies[i].tau;
      r["tau_grid_index"] = policies[i].grid_index ? ordered_json(*policies[i].grid_index) : ordered_json();
      r["grid_step"] = cfg.sweep.grid_step;
      r["n0"] = sim.n0;
      r["n_prime"] = sim.batch_size();
      r["iterations_requested"] = sim.iterations;
      r["iterations_completed"] = run.result.biased.size() - 1;
      r["truncated"] = run.result.truncated;
      r["root_seed"] = cfg.seed;
      r["simulate_seed"] = sim.seed;
      r["dataset_rows"] = U.size();
      r["notes"] = {
          "iteration-0 tallies use in-sample predictions of the C(0) model",
          "each batch is drawn from applicants never sampled before, shared by the biased and oracle runs",
          "threshold resolved once on an 80/20 split of C(0) and held fixed",
      };
      auto out = open_out(run.dir / "manifest.json");
      out << m.dump(2) << '\n';
      return 0;
    });
    runs.push_back(std::move(run));
  }
  return runs;
}

fs::path cmd_report(const ExperimentConfig& cfg) {
  const Layout layout = Layout::of(cfg);
  const fs::path sim_dir = layout.model_dir() / "sim";
  if (!fs::exists(sim_dir)) throw StageError("report", "no simulation output under " + sim_dir.string());

  std::vector<fs::path> runs;
  for (const auto& e : fs::directory_iterator(sim_dir))
    if (fs::exists(e.path() / "series.csv")) runs.push_back(e.path());
  std::sort(runs.begin(), runs.end());

  const fs::path path = layout.model_dir() / "report.csv";
  auto out = open_out(path);
  out << "policy,run,iteration,tp,fp,tn,fn,accuracy,precision,recall,pct_fn,pct_fp,population\n";
  auto opt = [](const std::optional<double>& v) { return v ? csv::format_number(*v) : std::string(); };
  for (const auto& dir : runs) {
    std::ifstream in(dir / "series.csv");
    const ParsedSeries s = run_stage("report", [&] { return read_series_csv(in); });
    for (const auto& [name, series] : {std::pair{"biased", &s.biased}, std::pair{"oracle", &s.oracle}}) {
      if (series->empty()) continue;
      const auto& r = series->back();
      out << dir.filename().string() << ',' << name << ',' << r.iteration << ',' << r.counts.tp << ','
          << r.counts.fp << ',' << r.counts.tn << ',' << r.counts.fn << ',' << csv::format_number(r.accuracy) << ','
          << opt(r.precision) << ',' << opt(r.recall) << ',' << csv::format_number(r.pct_fn) << ','
          << csv::format_number(r.pct_fp) << ',' << r.population << '\n';
    }
  }
  return path;
}

}  // namespace survbias
