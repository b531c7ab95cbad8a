#include <cmath>
#include <vector>

#include "doctest.h"
#include "stms/errors.hpp"
#include "stms/rng.hpp"
#include "stms/scoring.hpp"

using namespace stms;

namespace {

// Trapezoid quadrature of the defining integral over a wide bracket.
double crps_quadrature(const std::vector<double>& ens, double obs) {
  double lo = obs, hi = obs;
  for (double v : ens) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  lo -= 1.0;
  hi += 1.0;
  const int n = 400000;
  const double h = (hi - lo) / n;
  auto f = [&](double x) {
    double F = 0.0;
    for (double v : ens) F += v <= x;
    F /= ens.size();
    const double step = x >= obs ? 1.0 : 0.0;
    return (F - step) * (F - step);
  };
  double acc = 0.5 * (f(lo) + f(hi));
  for (int i = 1; i < n; ++i) acc += f(lo + i * h);
  return acc * h;
}

SpatialGrid make_grid(int m1, int m2) {
  SpatialGrid g;
  g.mesh = 1.0;
  g.m1 = m1;
  g.m2 = m2;
  return g;
}

}  // namespace

TEST_CASE("crps reference values") {
  CHECK(crps(std::vector<double>{1.7}, 0.4) == doctest::Approx(1.3).epsilon(1e-12));
  CHECK(crps(std::vector<double>{0.0, 1.0}, 0.5) == doctest::Approx(0.25).epsilon(1e-12));
  // Observation far below every member: score ~ mean(members) - obs.
  std::vector<double> ens{2.0, 3.0, 4.0};
  const double far = -1000.0;
  CHECK(crps(ens, far) == doctest::Approx(3.0 - far).epsilon(1e-3));
}

TEST_CASE("crps closed form equals the quadrature oracle") {
  RngStream rng(8, 0);
  for (int rep = 0; rep < 10; ++rep) {
    std::vector<double> ens(5 + rep);
    for (double& v : ens) v = 3.0 * rng.normal();
    const double obs = 2.0 * rng.normal();
    CHECK(crps(ens, obs) == doctest::Approx(crps_quadrature(ens, obs)).epsilon(1e-4));
  }
}

TEST_CASE("crps is zero iff all members equal the observation") {
  std::vector<double> ens(10, 1.5);
  CHECK(crps(ens, 1.5) == 0.0);
  ens[3] = 1.6;
  CHECK(crps(ens, 1.5) > 0.0);
}

TEST_CASE("rmse of the ensemble mean") {
  std::vector<VerificationEvent> events(4);
  for (int i = 0; i < 4; ++i) {
    events[i].observed = i;
    events[i].ensemble = {double(i), double(i)};
  }
  CHECK(rmse_of_mean(events) == 0.0);
  for (auto& e : events) e.ensemble = {e.observed + 0.5, e.observed + 0.5};
  CHECK(rmse_of_mean(events) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("protocol is deterministic and larger ensembles score no worse") {
  const SpatialGrid g = make_grid(8, 8);
  const ModelParams m{Semivariogram{1.5, 0.6}, {1.0, 0.0}, 0.8};
  const SpaceTimeField f = simulate_st(g, 120, m, 31415);
  ProtocolOptions opt;
  opt.leads = {1, 2};
  opt.n_events = 250;
  opt.ensemble_size = 40;
  opt.seed = 9;
  const auto rows1 = evaluate_protocol(f, m, opt);
  const auto rows2 = evaluate_protocol(f, m, opt);
  CHECK(score_table_to_csv(rows1) == score_table_to_csv(rows2));
  REQUIRE(rows1.size() == 2);
  CHECK(rows1[0].n_events + rows1[0].n_excluded == 250);

  ProtocolOptions small = opt;
  small.ensemble_size = 1;
  const auto rows_small = evaluate_protocol(f, m, small);
  CHECK(rows_small[0].mean_crps >= rows1[0].mean_crps);
}

TEST_CASE("near-deterministic dynamics score near zero at lead 1") {
  const SpatialGrid g = make_grid(6, 6);
  const ModelParams m{Semivariogram{1.5, 0.6}, {1.0, 0.0}, 0.999};
  const SpaceTimeField f = simulate_st(g, 100, m, 2718);
  ProtocolOptions opt;
  opt.leads = {1};
  opt.n_events = 150;
  opt.ensemble_size = 50;
  opt.seed = 10;
  const auto rows = evaluate_protocol(f, m, opt);
  CHECK(rows[0].mean_crps < 0.02);
}

TEST_CASE("insufficient admissible events is an error") {
  const SpatialGrid g = make_grid(2, 2);
  const ModelParams m{Semivariogram{1.0, 0.5}, {0.0, 0.0}, 0.5};
  const SpaceTimeField f = simulate_st(g, 10, m, 1);
  ProtocolOptions opt;
  opt.leads = {1};
  opt.n_events = 1000;
  CHECK_THROWS_WITH_AS(evaluate_protocol(f, m, opt), doctest::Contains("admissible"),
                       ValidationError);
}
