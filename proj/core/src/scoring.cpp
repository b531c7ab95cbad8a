#include "stms/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "stms/csv.hpp"
#include "stms/errors.hpp"
#include "stms/forecast.hpp"
#include "stms/parallel.hpp"
#include "stms/stats.hpp"

namespace stms {

double crps(std::span<const double> ensemble, double obs) {
  const std::size_t n = ensemble.size();
  if (n == 0) throw ValidationError("crps: empty ensemble");
  std::vector<double> x(ensemble.begin(), ensemble.end());
  std::sort(x.begin(), x.end());
  double term1 = 0.0;
  for (double v : x) term1 += std::fabs(v - obs);
  term1 /= n;
  // sum_ij |x_i - x_j| over sorted values: sum_i (2i - n + 1) x_i.
  double spread = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    spread += (2.0 * static_cast<double>(i) - static_cast<double>(n) + 1.0) * x[i];
  spread *= 2.0;
  return term1 - spread / (2.0 * static_cast<double>(n) * static_cast<double>(n));
}

int pit_rank(std::span<const double> ensemble, double obs, double u, double rel_tol) {
  if (!(u >= 0.0 && u < 1.0)) throw ValidationError("pit_rank: u must lie in [0,1)");
  int below = 0, ties = 0;
  for (double v : ensemble) {
    const double tol = rel_tol * std::max(std::fabs(v), std::fabs(obs));
    if (std::fabs(v - obs) <= tol)
      ++ties;
    else if (v < obs)
      ++below;
  }
  return below + static_cast<int>(u * (ties + 1));
}

double rmse_of_mean(const std::vector<VerificationEvent>& events) {
  if (events.empty()) throw ValidationError("rmse_of_mean: no events");
  double acc = 0.0;
  for (const auto& e : events) {
    const double m = mean(e.ensemble);
    acc += (m - e.observed) * (m - e.observed);
  }
  return std::sqrt(acc / events.size());
}

double mean_crps(const std::vector<VerificationEvent>& events) {
  if (events.empty()) throw ValidationError("mean_crps: no events");
  double acc = 0.0;
  for (const auto& e : events) acc += crps(e.ensemble, e.observed);
  return acc / events.size();
}

std::vector<ScoreRow> evaluate_protocol(
    const SpaceTimeField& field, const ModelParams& params, const ProtocolOptions& opt,
    std::vector<std::pair<int, VerificationEvent>>* events_out) {
  if (field.scale() != Scale::frechet)
    throw ValidationError("evaluate_protocol: field must be on the Frechet scale");
  if (opt.leads.empty()) throw ValidationError("evaluate_protocol: no leads");
  const int max_lead = *std::max_element(opt.leads.begin(), opt.leads.end());
  const int min_lead = *std::min_element(opt.leads.begin(), opt.leads.end());
  if (min_lead < 1) throw ValidationError("evaluate_protocol: leads must be >= 1");
  if (field.T() <= max_lead)
    throw ValidationError("evaluate_protocol: field too short for the requested leads");

  // Fixed event set across leads: target times leave room for every lead.
  const SpatialGrid& g = field.grid();
  const long long n_admissible =
      static_cast<long long>(g.n_sites()) * (field.T() - max_lead);
  if (n_admissible < opt.n_events)
    throw ValidationError("evaluate_protocol: only " + std::to_string(n_admissible) +
                          " admissible events available");
  RngStream rng(opt.seed, 7);
  std::vector<std::pair<int, int>> targets(opt.n_events);  // (site, t)
  for (auto& [site, t] : targets) {
    site = static_cast<int>(rng.uniform() * g.n_sites());
    site = std::min(site, g.n_sites() - 1);
    t = max_lead + 1 + static_cast<int>(rng.uniform() * (field.T() - max_lead));
    t = std::min(t, field.T());
  }

  std::vector<ScoreRow> rows;
  for (int u : opt.leads) {
    std::vector<VerificationEvent> events;
    events.reserve(targets.size());
    int excluded = 0;
    std::vector<VerificationEvent> buf(targets.size());
    std::vector<char> ok(targets.size(), 0);
    parallel_for(targets.size(), [&](std::size_t i) {
      const auto [site, t] = targets[i];
      ForecastRequest req;
      req.target_site = site;
      req.t0 = t - u;
      req.lead = u;
      req.ensemble_size = opt.ensemble_size;
      req.params = params;
      try {
        const ForecastEnsemble e =
            forecast_point(req, field, nullptr, opt.seed ^ (0x5EEDull + i));
        VerificationEvent ev;
        ev.site = site;
        ev.t = t;
        ev.observed = opt.gumbel_scale ? std::log(field.at(site, t)) : field.at(site, t);
        ev.ensemble.resize(e.frechet.size());
        for (std::size_t m = 0; m < e.frechet.size(); ++m)
          ev.ensemble[m] = opt.gumbel_scale ? std::log(e.frechet[m]) : e.frechet[m];
        buf[i] = std::move(ev);
        ok[i] = 1;
      } catch (const ValidationError&) {
        ok[i] = 0;  // off-domain source: excluded
      }
    });
    for (std::size_t i = 0; i < targets.size(); ++i) {
      if (ok[i]) {
        if (events_out) events_out->emplace_back(u, buf[i]);
        events.push_back(std::move(buf[i]));
      } else {
        ++excluded;
      }
    }
    if (events.empty())
      throw ValidationError("evaluate_protocol: all events excluded at lead " + std::to_string(u));
    ScoreRow row;
    row.lead = u;
    row.mean_crps = mean_crps(events);
    row.rmse = rmse_of_mean(events);
    row.n_events = static_cast<int>(events.size());
    row.n_excluded = excluded;
    rows.push_back(row);
  }
  return rows;
}

std::string score_table_to_csv(const std::vector<ScoreRow>& rows) {
  std::ostringstream out;
  out << "lead,mean_crps,rmse,n_events,n_excluded\n";
  for (const auto& r : rows)
    out << r.lead << ',' << format_full(r.mean_crps) << ',' << format_full(r.rmse) << ','
        << r.n_events << ',' << r.n_excluded << '\n';
  return out.str();
}

}  // namespace stms
