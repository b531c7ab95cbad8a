#include <cmath>
#include <vector>

#include "doctest.h"
#include "stms/errors.hpp"
#include "stms/forecast.hpp"
#include "stms/scoring.hpp"
#include "stms/rng.hpp"
#include "stms/stats.hpp"

using namespace stms;

namespace {

SpatialGrid make_grid(int m1, int m2, double mesh = 1.0) {
  SpatialGrid g;
  g.mesh = mesh;
  g.m1 = m1;
  g.m2 = m2;
  return g;
}

ModelParams params(double kappa, double hurst, Vec2 tau, double a) {
  return ModelParams{Semivariogram{kappa, hurst}, tau, a};
}

SpaceTimeField frechet_noise(const SpatialGrid& g, int T, std::uint64_t seed) {
  SpaceTimeField f(g, T, Scale::frechet);
  RngStream rng(seed, 0);
  for (int t = 1; t <= T; ++t)
    for (int s = 0; s < g.n_sites(); ++s) f.at(s, t) = rng.frechet();
  return f;
}

}  // namespace

TEST_CASE("a close to 1 collapses the ensemble onto the advected value") {
  const SpatialGrid g = make_grid(6, 6);
  const SpaceTimeField f = frechet_noise(g, 3, 11);
  ForecastRequest req;
  req.target_site = g.site_index(4, 3);
  req.t0 = 2;
  req.lead = 2;
  req.ensemble_size = 400;
  req.params = params(1.5, 0.6, {1.0, 0.0}, 0.999999);
  const ForecastEnsemble e = forecast_point(req, f, nullptr, 3);
  CHECK(e.conditioning == Conditioning::grid);
  const double src = f.at(g.site_index(2, 3), 2);
  const double au = std::pow(req.params.a, 2);
  double max_dev = 0.0;
  for (double v : e.frechet) max_dev = std::max(max_dev, std::fabs(v - au * src) / (au * src));
  CHECK(max_dev < 1e-2);
}

TEST_CASE("a close to 0 forecasts fresh Frechet noise") {
  const SpatialGrid g = make_grid(5, 5);
  const SpaceTimeField f = frechet_noise(g, 2, 12);
  ForecastRequest req;
  req.target_site = g.site_index(3, 3);
  req.t0 = 1;
  req.lead = 1;
  req.ensemble_size = 8000;
  req.params = params(1.5, 0.6, {0.0, 0.0}, 1e-6);
  const ForecastEnsemble e = forecast_point(req, f, nullptr, 4);
  std::vector<double> z = e.frechet;
  const double d = ks_statistic(z, [](double t) { return std::exp(-1.0 / t); });
  CHECK(ks_pvalue(d, z.size()) > 0.01);
}

TEST_CASE("on-grid ensemble matches the conditional law") {
  const SpatialGrid g = make_grid(6, 6);
  const SpaceTimeField f = frechet_noise(g, 2, 13);
  ForecastRequest req;
  req.target_site = g.site_index(4, 4);
  req.t0 = 1;
  req.lead = 1;
  req.ensemble_size = 10000;
  req.params = params(1.5, 0.6, {1.0, 1.0}, 0.7);
  const ForecastEnsemble e = forecast_point(req, f, nullptr, 5);
  const double z_src = f.at(g.site_index(3, 3), 1);
  const ConditionalLaw law = conditional_law(1, z_src, req.params);
  std::vector<double> z = e.frechet;
  const double d = ks_statistic(z, [&](double t) { return law.cdf(t); });
  CHECK(d < 0.02);
}

TEST_CASE("off-grid source runs the conditional simulation path") {
  const SpatialGrid g = make_grid(6, 6);
  const SpaceTimeField f = frechet_noise(g, 2, 14);
  ForecastRequest req;
  req.target_site = g.site_index(4, 4);
  req.t0 = 1;
  req.lead = 1;
  req.ensemble_size = 50;
  req.params = params(1.5, 0.6, {0.35, -0.14}, 0.9);
  const ForecastEnsemble e = forecast_point(req, f, nullptr, 6);
  CHECK(e.conditioning == Conditioning::simulated);
  for (double v : e.frechet) CHECK(v > 0.0);
}

TEST_CASE("back-transform uses the target site's marginal fit") {
  const SpatialGrid g = make_grid(4, 4);
  const SpaceTimeField f = frechet_noise(g, 2, 15);
  MarginalModel m;
  for (int s = 0; s < 16; ++s) m.site_params.push_back(GevParams{double(s), 1.0 + 0.01 * s, 0.05});
  ForecastRequest req;
  req.target_site = 5;
  req.t0 = 1;
  req.lead = 1;
  req.ensemble_size = 20;
  req.params = params(1.0, 0.5, {1.0, 0.0}, 0.8);
  const ForecastEnsemble e = forecast_point(req, f, &m, 7);
  REQUIRE(e.raw.size() == e.frechet.size());
  for (std::size_t i = 0; i < e.raw.size(); ++i)
    CHECK(e.raw[i] == doctest::Approx(from_frechet(e.frechet[i], m.at(5))).epsilon(1e-12));
}

TEST_CASE("off-domain source errors with the required extent") {
  const SpatialGrid g = make_grid(5, 5);
  const SpaceTimeField f = frechet_noise(g, 2, 16);
  ForecastRequest req;
  req.target_site = g.site_index(1, 1);
  req.t0 = 1;
  req.lead = 3;
  req.ensemble_size = 10;
  req.params = params(1.0, 0.5, {1.0, 0.0}, 0.8);
  CHECK_THROWS_WITH_AS(forecast_point(req, f, nullptr, 8), doctest::Contains("outside the grid"),
                       ValidationError);
  CHECK_THROWS_AS(
      [&] {
        ForecastRequest bad = req;
        bad.lead = 0;
        forecast_point(bad, f, nullptr, 8);
      }(),
      ValidationError);
}

TEST_CASE("grid forecast marks the upwind strip missing") {
  const SpatialGrid g = make_grid(10, 10);
  const SpaceTimeField f = frechet_noise(g, 2, 17);
  const ModelParams m = params(1.5, 0.6, {0.35, -0.14}, 0.9);
  const int u = 7;
  const GridForecast gf = forecast_grid(f, 1, u, 5, m, nullptr, 9);
  // Geometry oracle: source x = i1 - 2.45 must stay >= 1, y = i2 + 0.98 <= 10.
  int expect_missing = 0;
  for (int i1 = 1; i1 <= 10; ++i1)
    for (int i2 = 1; i2 <= 10; ++i2) {
      const double sx = i1 - u * 0.35, sy = i2 + u * 0.14;
      if (sx < 1.0 || sx > 10.0 || sy < 1.0 || sy > 10.0) ++expect_missing;
    }
  CHECK(gf.n_missing == expect_missing);
  CHECK(gf.n_missing > 0);
  // CSV contains one 'missing' row per missing site.
  const std::string csv = grid_forecast_to_csv(gf, g);
  std::size_t rows = 0, pos = 0;
  while ((pos = csv.find(",missing", pos)) != std::string::npos) {
    ++rows;
    pos += 8;
  }
  CHECK(static_cast<int>(rows) == expect_missing);
}

TEST_CASE("zero advection forecasts every site") {
  const SpatialGrid g = make_grid(7, 7);
  const SpaceTimeField f = frechet_noise(g, 2, 18);
  const GridForecast gf = forecast_grid(f, 1, 3, 4, params(1.0, 0.5, {0.0, 0.0}, 0.8), nullptr, 10);
  CHECK(gf.n_missing == 0);
  for (const auto& e : gf.per_site) CHECK(e.conditioning == Conditioning::grid);
}

TEST_CASE("forecast ensembles are calibrated at lead 1 (PIT ranks)") {
  // Simulated truth; on-grid sources. The rank of the realized value in
  // the ensemble should be uniform on {0..N}.
  const SpatialGrid g = make_grid(6, 6);
  const ModelParams m = params(1.5, 0.6, {1.0, 0.0}, 0.8);
  const SpaceTimeField f = simulate_st(g, 150, m, 2024);
  RngStream tie(1, 99);
  const int N = 19;
  std::vector<int> counts(N + 2, 0);
  int used = 0;
  // Stride widely in time and space: the chi-square test needs events
  // without much mutual dependence.
  for (int t = 1; t + 1 <= 150 && used < 600; t += 7) {
    for (int i1 = 2; i1 <= 6 && used < 600; i1 += 2) {
      for (int i2 = 1; i2 <= 6 && used < 600; i2 += 4) {
        ForecastRequest req;
        req.target_site = g.site_index(i1, i2);
        req.t0 = t;
        req.lead = 1;
        req.ensemble_size = N;
        req.params = m;
        const ForecastEnsemble e = forecast_point(req, f, nullptr, 555 + used);
        const double obs = f.at(req.target_site, t + 1);
        const int rank = pit_rank(e.frechet, obs, tie.uniform());
        ++counts[std::min(rank, N + 1)];
        ++used;
      }
    }
  }
  double chi2 = 0.0;
  const double expect = double(used) / (N + 1);
  for (int k = 0; k <= N; ++k) chi2 += (counts[k] - expect) * (counts[k] - expect) / expect;
  CHECK(chi2_sf(chi2, N) > 0.01);
}
