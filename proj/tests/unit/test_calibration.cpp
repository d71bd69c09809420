#include <doctest.h>

#include <sstream>

#include "survbias/calibration.hpp"

using namespace survbias;

namespace {

LearningCurve curve_of(const std::vector<double>& acc, std::size_t k = 1000) {
  LearningCurve c;
  for (std::size_t i = 0; i < acc.size(); ++i) {
    CurvePoint p;
    p.size = (i + 1) * k;
    p.accuracy_mean = acc[i];
    p.accuracies = {acc[i]};
    c.points.push_back(p);
  }
  return c;
}

}  // namespace

TEST_SUITE("calibration") {

TEST_CASE("schedule") {
  CHECK(curve_schedule(3500, 1000) == std::vector<std::size_t>{1000, 2000, 3000, 3500});
  CHECK(curve_schedule(3000, 1000) == std::vector<std::size_t>{1000, 2000, 3000});
  CHECK(curve_schedule(24000, 1000).size() == 24);
  CHECK_THROWS(curve_schedule(100, 0));
}

TEST_CASE("flat curve stabilizes at the window-th point") {
  const auto c = curve_of(std::vector<double>(10, 0.8));
  const auto r = detect_n0(c, 5, 0.002);
  CHECK(r.stabilized);
  CHECK(r.n0 == 5000);
  CHECK(r.slope == doctest::Approx(0.0));
}

TEST_CASE("linear rising curve never stabilizes") {
  std::vector<double> acc;
  for (int i = 0; i < 10; ++i) acc.push_back(0.6 + 0.01 * i);  // 0.01 per 1000
  const auto r = detect_n0(curve_of(acc), 5, 0.002);
  CHECK_FALSE(r.stabilized);
  CHECK(r.n0 == 10000);
}

TEST_CASE("trailing slope is a least-squares fit per 1000 samples") {
  // points (1,1) (2,3) (3,2) in thousands: slope 0.5
  const auto c = curve_of({1.0, 3.0, 2.0});
  CHECK(*trailing_slope(c, 3, 2) == doctest::Approx(0.5));
  CHECK_FALSE(trailing_slope(c, 3, 1).has_value());
  CHECK_THROWS(trailing_slope(c, 1, 2));
}

TEST_CASE("detect_n0 is monotone in eps and returns scheduled sizes") {
  const auto c = curve_of({0.60, 0.70, 0.75, 0.78, 0.79, 0.795, 0.80, 0.801, 0.8015, 0.802, 0.8021, 0.8022});
  std::size_t prev = static_cast<std::size_t>(-1);
  for (double eps : {0.0005, 0.001, 0.002, 0.005, 0.01, 0.05, 0.5}) {
    const auto r = detect_n0(c, 4, eps);
    CHECK(r.n0 <= prev);
    prev = r.n0;
    bool present = false;
    for (const auto& p : c.points) present = present || p.size == r.n0;
    CHECK(present);
  }
}

TEST_CASE("learning curve on synthetic data") {
  SUBCASE("no signal: flat near the majority share") {
    const Dataset U = synth_generate(3000, 3, 0.0, 0.7, 1);
    EnsembleParams p = EnsembleParams::gbdt();
    p.n_trees = 20;
    const auto c = learning_curve(U, p, 600, 0.2, 3, 2);
    CHECK(c.points.size() == 4);  // 2400 remaining: 600, 1200, 1800, 2400
    for (const auto& pt : c.points) CHECK(pt.accuracy_mean == doctest::Approx(0.7).epsilon(0.08));
  }
  SUBCASE("signal: later windows are flatter than early ones") {
    const Dataset U = synth_generate(6000, 5, 1.0, 0.6, 2);
    EnsembleParams p = EnsembleParams::gbdt();
    p.n_trees = 30;
    const auto c = learning_curve(U, p, 100, 0.2, 4, 3);
    const auto early = trailing_slope(c, 5, 4);
    const auto late = trailing_slope(c, 5, c.points.size() - 1);
    REQUIRE(early);
    REQUIRE(late);
    CHECK(std::abs(*late) < std::abs(*early));
  }
  SUBCASE("single point and errors") {
    const Dataset U = synth_generate(500, 3, 1.0, 0.6, 5);
    EnsembleParams p = EnsembleParams::gbdt();
    p.n_trees = 5;
    CHECK(learning_curve(U, p, 400, 0.2, 1, 1).points.size() == 1);
    CHECK_THROWS(learning_curve(U, p, 500, 0.2, 1, 1));
    CHECK_THROWS(learning_curve(U, p, 100, 0.0, 1, 1));
  }
  SUBCASE("deterministic under seed; serial equals parallel") {
    const Dataset U = synth_generate(1500, 3, 1.0, 0.6, 6);
    EnsembleParams p = EnsembleParams::random_forest();
    p.n_trees = 10;
    const auto a = learning_curve(U, p, 400, 0.2, 9, 2, Execution::serial);
    const auto b = learning_curve(U, p, 400, 0.2, 9, 2, Execution::parallel);
    REQUIRE(a.points.size() == b.points.size());
    for (std::size_t i = 0; i < a.points.size(); ++i) CHECK(a.points[i].accuracies == b.points[i].accuracies);
  }
}

TEST_CASE("curve csv") {
  const auto c = curve_of(std::vector<double>(6, 0.8));
  std::ostringstream out;
  write_curve_csv(c, 5, out);
  const std::string s = out.str();
  CHECK(s.rfind("size,accuracy_mean,accuracy_std,trailing_slope\n", 0) == 0);
}

}  // TEST_SUITE
