#include "stms/forecast.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "stms/brown_resnick.hpp"
#include "stms/csv.hpp"
#include "stms/errors.hpp"
#include "stms/parallel.hpp"

namespace stms {

namespace {

std::string conditioning_name(Conditioning c) {
  switch (c) {
    case Conditioning::grid: return "grid";
    case Conditioning::simulated: return "simulated";
    case Conditioning::missing: return "missing";
  }
  return "missing";
}

// Source handling shared by point and grid forecasting. Returns false when
// the advected source leaves the grid's bounding box.
struct SourceInfo {
  bool on_domain = false;
  bool on_grid = false;
  int grid_site = -1;
  std::array<int, 4> cell_sites{};  // vertices, when simulated
  Vec2 source;
};

SourceInfo locate_source(const SpatialGrid& g, const Vec2& target, const Vec2& tau, int u) {
  SourceInfo info;
  info.source = target - tau * static_cast<double>(u);
  const double fx = (info.source.x - g.origin.x) / g.mesh;  // in [1, m1] when inside
  const double fy = (info.source.y - g.origin.y) / g.mesh;
  const double snap = 1e-9;
  const int rx = static_cast<int>(std::llround(fx));
  const int ry = static_cast<int>(std::llround(fy));
  if (std::fabs(fx - rx) <= snap && std::fabs(fy - ry) <= snap && g.contains(rx, ry)) {
    info.on_domain = true;
    info.on_grid = true;
    info.grid_site = g.site_index(rx, ry);
    return info;
  }
  if (fx < 1.0 || fx > g.m1 || fy < 1.0 || fy > g.m2) return info;  // off-domain
  info.on_domain = true;
  int i1 = static_cast<int>(std::floor(fx));
  int i2 = static_cast<int>(std::floor(fy));
  i1 = std::min(i1, g.m1 - 1);
  i2 = std::min(i2, g.m2 - 1);
  info.cell_sites = {g.site_index(i1, i2), g.site_index(i1 + 1, i2), g.site_index(i1, i2 + 1),
                     g.site_index(i1 + 1, i2 + 1)};
  return info;
}

ForecastEnsemble forecast_impl(const SourceInfo& src, const ForecastRequest& req,
                               const SpaceTimeField& field, const MarginalModel* marginals,
                               RngStream& rng) {
  const SpatialGrid& g = field.grid();
  const int N = req.ensemble_size;
  const double au = std::pow(req.params.a, req.lead);
  const double w_scale = 1.0 - au;

  ForecastEnsemble ens;
  ens.source = src.source;
  ens.frechet.resize(N);

  std::vector<double> y(N);
  if (src.on_grid) {
    ens.conditioning = Conditioning::grid;
    std::fill(y.begin(), y.end(), field.at(src.grid_site, req.t0));
  } else {
    ens.conditioning = Conditioning::simulated;
    std::vector<Vec2> sites;
    std::vector<double> values;
    for (int v : src.cell_sites) {
      sites.push_back(g.site(v));
      values.push_back(field.at(v, req.t0));
    }
    BrConditionalSampler sampler(sites, values, src.source, req.params.sv);
    for (int i = 0; i < N; ++i) y[i] = sampler.sample(rng);
  }
  for (int i = 0; i < N; ++i) {
    const double w = w_scale / rng.exponential();
    ens.frechet[i] = std::max(au * y[i], w);
  }
  if (marginals) {
    const GevParams& gp = marginals->at(req.target_site);
    // A failed marginal fit leaves the ensemble on the Frechet scale.
    if (gp.sigma > 0.0 && std::isfinite(gp.mu) && std::isfinite(gp.sigma) &&
        std::isfinite(gp.xi)) {
      ens.raw.resize(N);
      for (int i = 0; i < N; ++i) ens.raw[i] = from_frechet(ens.frechet[i], gp);
    }
  }
  return ens;
}

}  // namespace

ForecastEnsemble forecast_point(const ForecastRequest& req, const SpaceTimeField& field,
                                const MarginalModel* marginals, std::uint64_t seed) {
  const SpatialGrid& g = field.grid();
  if (req.lead < 1) throw ValidationError("forecast_point: lead must be >= 1");
  if (req.ensemble_size < 1) throw ValidationError("forecast_point: ensemble size must be >= 1");
  if (req.t0 < 1 || req.t0 > field.T()) throw ValidationError("forecast_point: t0 outside field");
  if (req.target_site < 0 || req.target_site >= g.n_sites())
    throw ValidationError("forecast_point: target site outside grid");
  if (field.scale() != Scale::frechet)
    throw ValidationError("forecast_point: field must be on the Frechet scale");

  const SourceInfo src = locate_source(g, g.site(req.target_site), req.params.tau, req.lead);
  if (!src.on_domain) {
    std::ostringstream msg;
    const auto [i1, i2] = g.site_coords(req.target_site);
    msg << "forecast_point: advected source (" << src.source.x << "," << src.source.y
        << ") for site (" << i1 << "," << i2 << ") lies outside the grid [";
    msg << g.origin.x + g.mesh << "," << g.origin.x + g.mesh * g.m1 << "] x ["
        << g.origin.y + g.mesh << "," << g.origin.y + g.mesh * g.m2
        << "]; extend the domain upwind";
    throw ValidationError(msg.str());
  }
  RngStream rng(seed, (static_cast<std::uint64_t>(req.target_site) << 20) ^
                          (static_cast<std::uint64_t>(req.lead) << 8) ^ 1);
  return forecast_impl(src, req, field, marginals, rng);
}

GridForecast forecast_grid(const SpaceTimeField& field, int t0, int lead, int ensemble_size,
                           const ModelParams& params, const MarginalModel* marginals,
                           std::uint64_t seed) {
  if (lead < 1) throw ValidationError("forecast_grid: lead must be >= 1");
  const SpatialGrid& g = field.grid();
  GridForecast out;
  out.t0 = t0;
  out.lead = lead;
  out.per_site.resize(g.n_sites());
  std::vector<std::string> errors(g.n_sites());
  parallel_for(g.n_sites(), [&](std::size_t site) {
    const SourceInfo src = locate_source(g, g.site(static_cast<int>(site)), params.tau, lead);
    if (!src.on_domain) {
      out.per_site[site].conditioning = Conditioning::missing;
      out.per_site[site].source = src.source;
      return;
    }
    ForecastRequest req;
    req.target_site = static_cast<int>(site);
    req.t0 = t0;
    req.lead = lead;
    req.ensemble_size = ensemble_size;
    req.params = params;
    RngStream rng(seed, (static_cast<std::uint64_t>(site) << 20) ^
                            (static_cast<std::uint64_t>(lead) << 8) ^ 1);
    try {
      out.per_site[site] = forecast_impl(src, req, field, marginals, rng);
    } catch (const std::exception& e) {
      errors[site] = e.what();
    }
  });
  for (int site = 0; site < g.n_sites(); ++site)
    if (!errors[site].empty()) throw NumericalError("forecast_grid: " + errors[site]);
  for (const auto& e : out.per_site)
    if (e.conditioning == Conditioning::missing) ++out.n_missing;
  return out;
}

std::string grid_forecast_to_csv(const GridForecast& f, const SpatialGrid& grid) {
  std::ostringstream out;
  out << "i1,i2,t0,u,member,value_frechet,value_raw,conditioned\n";
  for (int site = 0; site < grid.n_sites(); ++site) {
    const auto [i1, i2] = grid.site_coords(site);
    const ForecastEnsemble& e = f.per_site[site];
    if (e.conditioning == Conditioning::missing) {
      out << i1 << ',' << i2 << ',' << f.t0 << ',' << f.lead << ",0,,,missing\n";
      continue;
    }
    for (std::size_t m = 0; m < e.frechet.size(); ++m) {
      out << i1 << ',' << i2 << ',' << f.t0 << ',' << f.lead << ',' << (m + 1) << ','
          << format_full(e.frechet[m]) << ',';
      if (!e.raw.empty()) out << format_full(e.raw[m]);
      out << ',' << conditioning_name(e.conditioning) << '\n';
    }
  }
  return out.str();
}

}  // namespace stms
