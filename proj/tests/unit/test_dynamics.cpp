#include <doctest.h>

#include <set>
#include <sstream>

#include "survbias/dynamics.hpp"
#include "survbias/rng.hpp"

using namespace survbias;

namespace {

SimulationConfig config(std::size_t n0, std::size_t n_prime, std::size_t iterations, double tau, std::uint64_t seed,
                        ModelKind kind = ModelKind::gbdt) {
  SimulationConfig c;
  c.n0 = n0;
  c.n_prime = n_prime;
  c.iterations = iterations;
  c.threshold = ThresholdPolicy::fixed(tau);
  c.learner = EnsembleParams::defaults(kind);
  c.learner.n_trees = 20;
  c.seed = seed;
  return c;
}

// Step-by-step replay of the recurrence written from its definition: keeps
// explicit C(i) sets and recounts every tally from the applicant decisions.
struct Replay {
  std::vector<ConfusionCounts> biased;
  std::vector<ConfusionCounts> oracle;
};

Replay replay(const Dataset& U, const SimulationConfig& cfg) {
  const std::uint64_t s_init = derive_seed(cfg.seed, "initial");
  const std::uint64_t s_batch = derive_seed(cfg.seed, "batches");
  const std::uint64_t s_model = derive_seed(cfg.seed, "model");
  auto params_for = [&](std::uint64_t i) {
    EnsembleParams p = cfg.learner;
    p.seed = derive_seed(s_model, i);
    return p;
  };

  Rng init(s_init);
  const std::vector<std::size_t> c0 = init.sample_indices(U.size(), cfg.n0);
  std::set<std::size_t> sampled(c0.begin(), c0.end());
  std::vector<std::size_t> pool;
  for (std::size_t r = 0; r < U.size(); ++r)
    if (!sampled.count(r)) pool.push_back(r);

  Replay out;
  const TrainedModel m0 = fit(params_for(0), U.subset(c0));
  ConfusionCounts base;
  for (std::size_t r : c0) {
    const int yhat = m0.score(U.X.row(r)) >= cfg.threshold.tau;
    const int y = U.y[r];
    base.tp += yhat && y;
    base.fp += yhat && !y;
    base.tn += !yhat && !y;
    base.fn += !yhat && y;
  }
  out.biased.push_back(base);
  out.oracle.push_back(base);

  std::vector<std::size_t> cb = c0, co = c0;
  TrainedModel mb = m0, mo = m0;
  Rng batches(s_batch);
  for (std::size_t it = 1; it <= cfg.iterations; ++it) {
    std::vector<std::size_t> samp;
    for (std::size_t j = 0; j < cfg.n_prime; ++j) {
      const std::size_t k = batches.below(pool.size());
      std::swap(pool[k], pool.back());
      samp.push_back(pool.back());
      pool.pop_back();
    }
    ConfusionCounts b = out.biased.back(), o = out.oracle.back();
    for (std::size_t r : samp) {
      const int y = U.y[r];
      if (mb.score(U.X.row(r)) >= cfg.threshold.tau) {
        cb.push_back(r);
        (y ? b.tp : b.fp)++;
      }
      const int yo = mo.score(U.X.row(r)) >= cfg.threshold.tau;
      co.push_back(r);
      if (yo)
        (y ? o.tp : o.fp)++;
      else
        (y ? o.fn : o.tn)++;
    }
    mb = fit(params_for(it), U.subset(cb));
    mo = fit(params_for(it), U.subset(co));
    out.biased.push_back(b);
    out.oracle.push_back(o);
  }
  return out;
}

}  // namespace

TEST_SUITE("dynamics") {

TEST_CASE("tau = 0 admits everyone: identical series") {
  const Dataset U = synth_generate(600, 4, 1.5, 0.7, 1);
  const auto r = run_paired(U, config(100, 50, 4, 0.0, 2));
  REQUIRE(r.biased.size() == 5);
  for (std::size_t i = 0; i < r.biased.size(); ++i) CHECK(r.biased[i].counts == r.oracle[i].counts);
}

TEST_CASE("tau = 1 admits no one: biased counts frozen") {
  const Dataset U = synth_generate(600, 4, 1.5, 0.7, 1);
  const auto r = run_paired(U, config(100, 50, 4, 1.0, 3, ModelKind::gbdt));
  for (const auto& row : r.biased) CHECK(row.counts == r.biased.front().counts);
  CHECK(r.oracle.back().population == 300);
}

TEST_CASE("biased and oracle tallies match a step-by-step replay") {
  const Dataset U = synth_generate(500, 4, 1.5, 0.7, 4);
  for (auto kind : {ModelKind::random_forest, ModelKind::gbdt}) {
    const SimulationConfig cfg = config(100, 50, 4, 0.5, 5, kind);
    const auto r = run_paired(U, cfg);
    const Replay ref = replay(U, cfg);
    REQUIRE(r.biased.size() == ref.biased.size());
    for (std::size_t i = 0; i < ref.biased.size(); ++i) {
      CAPTURE(i);
      CHECK(r.biased[i].counts == ref.biased[i]);
      CHECK(r.oracle[i].counts == ref.oracle[i]);
    }
  }
}

TEST_CASE("invariants over seeds and thresholds") {
  const Dataset U = synth_generate(2000, 5, 1.5, 0.7, 6);
  for (double tau : {0.3, 0.5, 0.7}) {
    for (std::uint64_t seed = 0; seed < 2; ++seed) {
      const auto r = run_paired(U, config(400, 100, 10, tau, seed));
      CAPTURE(tau);
      CAPTURE(seed);
      CHECK_FALSE(r.truncated);
      CHECK(r.biased.front().counts == r.oracle.front().counts);
      CHECK(r.batches.size() == 10);

      const auto& b0 = r.biased.front().counts;
      for (std::size_t i = 1; i < r.biased.size(); ++i) {
        const auto& prev = r.biased[i - 1];
        const auto& cur = r.biased[i];
        CHECK(cur.counts.fn == b0.fn);
        CHECK(cur.counts.tn == b0.tn);
        if (prev.recall && cur.recall) CHECK(*cur.recall >= *prev.recall);
        if (cur.population > prev.population) CHECK(cur.pct_fn < prev.pct_fn);
        CHECK(r.oracle[i].population == 400 + i * 100);
        CHECK(r.oracle[i].counts.total() == 400 + i * 100);
      }

      // the biased tally covers exactly C(i): C(0) plus admitted applicants
      std::size_t admitted = 0;
      for (const auto& rec : r.biased_log) {
        if (rec.iteration > 0) CHECK(rec.admitted == (rec.yhat == 1));
        admitted += rec.admitted;
      }
      CHECK(r.biased.back().population == admitted);

      // pairing: both logs list the same applicants in the same order
      REQUIRE(r.biased_log.size() == r.oracle_log.size());
      for (std::size_t i = 0; i < r.biased_log.size(); ++i) CHECK(r.biased_log[i].row == r.oracle_log[i].row);

      std::set<std::size_t> seen(r.initial.begin(), r.initial.end());
      for (const auto& batch : r.batches)
        for (std::size_t row : batch) CHECK(seen.insert(row).second);
    }
  }
}

TEST_CASE("pool exhaustion truncates with a flag") {
  const Dataset U = synth_generate(300, 3, 1.5, 0.7, 7);
  SimulationConfig cfg = config(100, 50, 4, 0.5, 1);
  CHECK_THROWS(run_paired(U, config(100, 50, 5, 0.5, 1)));  // config invariant n0 + k n' <= |U|
  const auto r = run_paired(U, cfg);
  CHECK_FALSE(r.truncated);
  CHECK(r.biased.size() == 5);
}

TEST_CASE("config validation") {
  const Dataset U = synth_generate(300, 3, 1.5, 0.7, 7);
  CHECK_THROWS(run_paired(U, config(100, 50, 0, 0.5, 1)));
  CHECK_THROWS(run_paired(U, config(400, 50, 1, 0.5, 1)));
  SimulationConfig c = config(1000, 0, 1, 0.5, 1);
  CHECK(c.batch_size() == 100);
  c.n0 = 5000;
  CHECK(c.batch_size() == 500);
}

TEST_CASE("draw_initial") {
  const Dataset U = synth_generate(50, 2, 1.0, 0.6, 8);
  auto all = draw_initial(U, 50, 1);
  std::sort(all.begin(), all.end());
  for (std::size_t i = 0; i < 50; ++i) CHECK(all[i] == i);
  CHECK(draw_initial(U, 10, 3) == draw_initial(U, 10, 3));
  CHECK_THROWS(draw_initial(U, 51, 1));
}

TEST_CASE("series csv: 1 iteration gives 4 rows and round-trips") {
  const Dataset U = synth_generate(400, 3, 1.5, 0.7, 9);
  const auto r = run_paired(U, config(100, 50, 1, 0.5, 1));
  std::stringstream buf;
  write_series_csv(r, buf);
  std::string line;
  std::size_t lines = 0;
  std::istringstream count(buf.str());
  while (std::getline(count, line)) ++lines;
  CHECK(lines == 5);  // header + 4

  const ParsedSeries back = read_series_csv(buf);
  REQUIRE(back.biased.size() == 2);
  REQUIRE(back.oracle.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(back.biased[i].counts == r.biased[i].counts);
    CHECK(back.oracle[i].counts == r.oracle[i].counts);
    CHECK(back.biased[i].population == r.biased[i].population);
    CHECK(back.biased[i].accuracy == doctest::Approx(r.biased[i].accuracy).epsilon(1e-5));
  }
}

TEST_CASE("resolved thresholds are grid points and the sc1 policy equals acc") {
  const Dataset U = synth_generate(1000, 4, 1.5, 0.7, 10);
  SimulationConfig cfg = config(400, 100, 1, 0.5, 2);
  const auto p = resolve_thresholds(
      U, cfg, {parse_threshold_request("acc"), parse_threshold_request("sc:1"), parse_threshold_request("fixed:0.4")},
      0.001);
  REQUIRE(p.size() == 3);
  CHECK(p[0].grid_index == p[1].grid_index);
  CHECK(p[2].tau == 0.4);
}

}  // TEST_SUITE
