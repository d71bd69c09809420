#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>
#include <tuple>

#include "survbias/csv.hpp"
#include "survbias/evaluation.hpp"
#include "survbias/rng.hpp"

using namespace survbias;

namespace {

struct Instance {
  std::vector<double> scores;
  std::vector<int> y;
};

// Scores snapped to a coarse lattice half the time so grid ties are common.
Instance random_instance(std::uint64_t seed, std::size_t n) {
  Rng rng(seed);
  Instance in;
  for (std::size_t i = 0; i < n; ++i) {
    const double u = rng.uniform();
    in.scores.push_back(seed % 2 ? static_cast<double>(rng.below(21)) / 20.0 : u);
    in.y.push_back(rng.uniform() < 0.3 + 0.5 * in.scores.back() ? 1 : 0);
  }
  return in;
}

const std::vector<double> kCosts{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};

}  // namespace

TEST_SUITE("evaluation") {

TEST_CASE("apply_threshold uses >=") {
  const std::vector<double> s{0.5, 0.49, 1.0, 0.0};
  CHECK(apply_threshold(s, 0.5) == std::vector<int>{1, 0, 1, 0});
  CHECK(apply_threshold(s, 0.0) == std::vector<int>{1, 1, 1, 1});
  CHECK(apply_threshold(s, 1.0) == std::vector<int>{0, 0, 1, 0});
  CHECK_THROWS(apply_threshold(s, 1.01));
}

TEST_CASE("confusion") {
  const std::vector<int> yhat{1, 1, 0, 0}, y{1, 0, 1, 0};
  CHECK(confusion(yhat, y) == ConfusionCounts{1, 1, 1, 1});
  const auto same = confusion(y, y);
  CHECK(same.fp == 0);
  CHECK(same.fn == 0);
  CHECK_THROWS(confusion(std::vector<int>{1}, y));

  Rng rng(3);
  std::vector<int> a(200), b(200);
  for (std::size_t i = 0; i < 200; ++i) {
    a[i] = static_cast<int>(rng.below(2));
    b[i] = static_cast<int>(rng.below(2));
  }
  ConfusionCounts ref;
  for (std::size_t i = 0; i < 200; ++i) {
    if (a[i] == 1 && b[i] == 1) ++ref.tp;
    if (a[i] == 1 && b[i] == 0) ++ref.fp;
    if (a[i] == 0 && b[i] == 0) ++ref.tn;
    if (a[i] == 0 && b[i] == 1) ++ref.fn;
  }
  CHECK(confusion(a, b) == ref);
}

TEST_CASE("metrics") {
  const ConfusionCounts c{1, 1, 1, 1};
  CHECK(accuracy(c) == 0.5);
  CHECK(*precision(c) == 0.5);
  CHECK(*recall(c) == 0.5);
  CHECK(*precision(ConfusionCounts{2, 0, 0, 0}) == 1.0);
  CHECK_FALSE(recall(ConfusionCounts{0, 3, 2, 0}).has_value());
  CHECK_FALSE(precision(ConfusionCounts{0, 0, 2, 1}).has_value());
  CHECK_THROWS(accuracy(ConfusionCounts{}));
}

TEST_CASE("social cost") {
  const ConfusionCounts c{4, 2, 1, 3};
  CHECK(social_cost(c, {1.0}) == 5.0);
  CHECK(social_cost(c, {4.0}) == 14.0);
  CHECK(social_cost(c, {1.0}) == doctest::Approx(c.total() * (1.0 - accuracy(c))));
}

TEST_CASE("threshold grid") {
  const ThresholdGrid g(0.0001);
  CHECK(g.size() == 10001);
  CHECK(g.tau(0) == 0.0);
  CHECK(g.tau(4610) == 0.461);
  CHECK(g.tau(10000) == 1.0);
  CHECK(g.nearest(0.461) == 4610);
  CHECK(ThresholdGrid(0.3).size() == 5);  // 0, .3, .6, .9, 1
  CHECK_THROWS(ThresholdGrid(0.0));
}

TEST_CASE("sweep examples") {
  const std::vector<double> s{0.2, 0.4, 0.6, 0.8};
  const std::vector<int> y{0, 0, 1, 1};
  const Sweep sw = sweep(s, y, 0.5, kCosts);
  REQUIRE(sw.rows.size() == 3);
  CHECK(sw.rows[1].tau == 0.5);
  CHECK(sw.rows[1].accuracy == 1.0);

  const std::vector<double> flat(10, 0.37);
  const std::vector<int> yf{1, 0, 1, 1, 0, 1, 0, 1, 1, 1};
  std::set<std::tuple<std::size_t, std::size_t, std::size_t, std::size_t>> tuples;
  for (const auto& r : sweep(flat, yf, 0.01, kCosts).rows)
    tuples.insert({r.confusion.tp, r.confusion.fp, r.confusion.tn, r.confusion.fn});
  CHECK(tuples.size() == 2);
}

TEST_CASE("fast sweep equals the naive reference") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto in = random_instance(seed, 100 + 30 * seed);
    const Sweep fast = sweep(in.scores, in.y, 0.01, kCosts, Execution::parallel);
    const Sweep ref = sweep_naive(in.scores, in.y, 0.01, kCosts, Execution::serial);
    CAPTURE(seed);
    CHECK(fast.rows == ref.rows);
    CHECK(sweep(in.scores, in.y, 0.01, kCosts, Execution::serial).rows == fast.rows);
  }
}

TEST_CASE("sweep invariants: sc1 identity, monotone FN/FP, argmin monotonicity") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto in = random_instance(seed + 100, 300);
    const Sweep sw = sweep(in.scores, in.y, 0.001, kCosts);
    CAPTURE(seed);
    CHECK(argmin_social_cost(sw, 1.0).grid_index == argmax_accuracy(sw).grid_index);
    for (std::size_t i = 1; i < sw.rows.size(); ++i) {
      CHECK(sw.rows[i].tau > sw.rows[i - 1].tau);
      CHECK(sw.rows[i].confusion.fn >= sw.rows[i - 1].confusion.fn);
      CHECK(sw.rows[i].confusion.fp <= sw.rows[i - 1].confusion.fp);
    }
    double prev = 2.0;
    for (double c : kCosts) {
      const double t = argmin_social_cost(sw, c).tau;
      CHECK(t <= prev);
      prev = t;
    }
  }
}

TEST_CASE("argmin/argmax against an exhaustive scan") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto in = random_instance(seed + 500, 20);
    const Sweep sw = sweep(in.scores, in.y, 0.01, kCosts);
    std::size_t best_sc = 0, best_acc = 0;
    double min_sc = 1e300, max_acc = -1;
    for (std::size_t g = 0; g <= 100; ++g) {
      const double tau = static_cast<double>(g) / 100.0;
      std::size_t fp = 0, fn = 0, correct = 0;
      for (std::size_t i = 0; i < 20; ++i) {
        const int yhat = in.scores[i] >= tau;
        fp += yhat == 1 && in.y[i] == 0;
        fn += yhat == 0 && in.y[i] == 1;
        correct += yhat == in.y[i];
      }
      const double sc = 3.0 * static_cast<double>(fn) + static_cast<double>(fp);
      if (sc < min_sc) {
        min_sc = sc;
        best_sc = g;
      }
      if (static_cast<double>(correct) > max_acc) {
        max_acc = static_cast<double>(correct);
        best_acc = g;
      }
    }
    CAPTURE(seed);
    CHECK(*argmin_social_cost(sw, 3.0).grid_index == best_sc);
    CHECK(*argmax_accuracy(sw).grid_index == best_acc);
  }
}

TEST_CASE("argmax ties pick the smallest threshold") {
  const std::vector<double> s{0.1, 0.9};
  const std::vector<int> y{0, 1};
  const auto p = argmax_accuracy(sweep(s, y, 0.01, kCosts));
  CHECK(*p.grid_index == 11);  // first grid point above 0.1
  CHECK(p.tau == doctest::Approx(0.11));

  const std::vector<double> one{0.3};
  const std::vector<int> y1{1};
  CHECK(argmax_accuracy(sweep(one, y1, 1.0, kCosts)).tau == 0.0);
  CHECK_THROWS(argmin_social_cost(sweep(one, y1, 1.0, kCosts), 11.0));
}

TEST_CASE("relative accuracy loss reproduces published rows") {
  CHECK(std::abs(relative_accuracy_loss(0.973, 0.970) - 0.309) <= 0.01);
  CHECK(std::abs(relative_accuracy_loss(0.973, 0.961) - 1.249) <= 0.01);
  CHECK(relative_accuracy_loss(0.8, 0.8) == 0.0);
  CHECK_THROWS(relative_accuracy_loss(0.8, 0.0));
}

TEST_CASE("threshold requests and labels") {
  CHECK(parse_threshold_request("acc").origin == ThresholdPolicy::Origin::accuracy_optimal);
  const auto sc = parse_threshold_request("sc:3");
  CHECK(sc.cost == 3.0);
  CHECK(sc.label() == "sc_c3");
  CHECK(parse_threshold_request("fixed:0.5").label() == "fixed_0.5");
  CHECK(threshold_request_string(sc) == "sc:3");
  CHECK_THROWS(parse_threshold_request("median"));
}

TEST_CASE("sweep csv leaves undefined metrics empty") {
  const std::vector<double> s{0.2, 0.8};
  const std::vector<int> y{0, 0};
  std::ostringstream out;
  write_sweep_csv(sweep(s, y, 0.5, std::vector<double>{1, 2}), out);
  std::istringstream in(out.str());
  const auto rows = csv::read_all(in);
  CHECK(rows[0] == std::vector<std::string>{"tau", "tp", "fp", "tn", "fn", "accuracy", "precision", "recall", "sc_c1",
                                            "sc_c2"});
  CHECK(rows[1][7].empty());  // no positives: recall undefined
  CHECK(rows[3][6].empty());  // tau = 1, nothing predicted positive
}

}  // TEST_SUITE
