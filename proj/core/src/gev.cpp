#include "stms/gev.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "stms/csv.hpp"
#include "stms/errors.hpp"
#include "stms/optim.hpp"
#include "stms/parallel.hpp"
#include "stms/stats.hpp"

namespace stms {

namespace {

constexpr double kEulerGamma = 0.57721566490153286060651209008240;
constexpr double kSupportPenalty = 1e10;

// t(x) with F = exp(-t); returns +inf / 0 outside the support.
double gev_t(double x, const GevParams& g) {
  const double s = (x - g.mu) / g.sigma;
  if (g.xi == 0.0) return std::exp(-s);
  const double arg = 1.0 + g.xi * s;
  if (arg <= 0.0) return g.xi > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
  return std::pow(arg, -1.0 / g.xi);
}

}  // namespace

double gev_cdf(double x, const GevParams& g) { return std::exp(-gev_t(x, g)); }

double gev_logpdf(double x, const GevParams& g) {
  const double s = (x - g.mu) / g.sigma;
  if (g.xi == 0.0) return -std::log(g.sigma) - s - std::exp(-s);
  const double arg = 1.0 + g.xi * s;
  if (arg <= 0.0) return -std::numeric_limits<double>::infinity();
  const double logt = -std::log(arg) / g.xi;
  return -std::log(g.sigma) - (1.0 + 1.0 / g.xi) * std::log(arg) - std::exp(logt);
}

double gev_quantile(double p, const GevParams& g) {
  if (!(p > 0.0 && p < 1.0)) throw ValidationError("gev_quantile: p outside (0,1)");
  const double w = -std::log(p);
  if (g.xi == 0.0) return g.mu - g.sigma * std::log(w);
  return g.mu + g.sigma * (std::pow(w, -g.xi) - 1.0) / g.xi;
}

GevFit fit_gev(std::span<const double> samples, const GevFitOptions& opt) {
  return fit_gev(samples, std::span<const double>{}, opt);
}

GevFit fit_gev(std::span<const double> samples, std::span<const double> weights,
               const GevFitOptions& opt) {
  const std::size_t n = samples.size();
  if (n < opt.min_samples)
    throw ValidationError("fit_gev: need at least " + std::to_string(opt.min_samples) +
                          " samples, got " + std::to_string(n));
  if (!weights.empty() && weights.size() != n)
    throw ValidationError("fit_gev: weight length mismatch");
  for (double x : samples)
    if (!std::isfinite(x)) throw ValidationError("fit_gev: non-finite sample");

  double wsum = 0.0, m1 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = weights.empty() ? 1.0 : weights[i];
    wsum += w;
    m1 += w * samples[i];
  }
  if (wsum <= 1.0) throw ValidationError("fit_gev: effective sample too small");
  m1 /= wsum;
  double var = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = weights.empty() ? 1.0 : weights[i];
    var += w * (samples[i] - m1) * (samples[i] - m1);
  }
  var /= wsum;
  const double sd = std::sqrt(var);
  if (sd <= 0.0 || !(sd > 1e-12 * std::max(1.0, std::fabs(m1))))
    throw ValidationError("fit_gev: degenerate sample (zero variance)");

  // Gumbel moment start.
  const double sigma0 = sd * std::sqrt(6.0) / 3.14159265358979323846;
  const double mu0 = m1 - kEulerGamma * sigma0;
  double xi0 = 0.1;
  {
    GevParams start{mu0, sigma0, xi0};
    bool ok = true;
    for (double x : samples)
      if (1.0 + start.xi * (x - start.mu) / start.sigma <= 0.0) ok = false;
    if (!ok) xi0 = 0.0;
  }

  auto nll = [&](const Eigen::VectorXd& q) {
    GevParams g{q[0], std::exp(q[1]), q[2]};
    if (std::fabs(g.xi) > opt.xi_bound) return kSupportPenalty * (1.0 + std::fabs(g.xi));
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double w = weights.empty() ? 1.0 : weights[i];
      if (w == 0.0) continue;
      const double lp = gev_logpdf(samples[i], g);
      if (!std::isfinite(lp)) return kSupportPenalty;
      acc -= w * lp;
    }
    return acc;
  };

  Eigen::VectorXd x0(3);
  x0 << mu0, std::log(sigma0), xi0;
  Eigen::VectorXd step(3);
  step << 0.1 * sigma0, 0.2, 0.1;
  NmOptions nmopt;
  nmopt.max_evals = opt.max_evals;
  nmopt.ftol_abs = 1e-9;
  nmopt.ftol_rel = 1e-11;
  nmopt.xtol = 1e-8;
  const NmResult r = nelder_mead(nll, x0, step, nmopt);

  GevFit fit;
  fit.params = GevParams{r.x[0], std::exp(r.x[1]), r.x[2]};
  fit.loglik = -r.f;
  fit.evals = r.evals;
  if (!r.converged) {
    std::ostringstream msg;
    msg << "fit_gev: no convergence after " << r.evals << " evaluations; best iterate mu="
        << fit.params.mu << " sigma=" << fit.params.sigma << " xi=" << fit.params.xi;
    throw NumericalError(msg.str());
  }
  if (fit.params.xi >= opt.xi_bound - 1e-8 || fit.params.xi <= -opt.xi_bound + 1e-8) {
    // Shape pinned at the box; still a valid constrained MLE.
  }
  return fit;
}

double to_frechet(double x, const GevParams& g) {
  const double t = gev_t(x, g);
  if (!(t > 0.0) || std::isinf(t)) throw ValidationError("to_frechet: x out of support");
  return 1.0 / t;
}

double from_frechet(double z, const GevParams& g) {
  if (!(z > 0.0)) throw ValidationError("from_frechet: z must be positive");
  // F^{-1}(exp(-1/z)) with t = 1/z.
  if (g.xi == 0.0) return g.mu + g.sigma * std::log(z);
  return g.mu + g.sigma * (std::pow(z, g.xi) - 1.0) / g.xi;
}

MarginalModel fit_marginals(const SpaceTimeField& field, const GevFitOptions& opt) {
  const int n = field.grid().n_sites();
  MarginalModel model;
  model.site_params.resize(n);
  std::vector<std::string> failures(n);
  parallel_for(n, [&](std::size_t site) {
    std::vector<double> series(field.T());
    for (int t = 1; t <= field.T(); ++t) series[t - 1] = field.at(static_cast<int>(site), t);
    try {
      model.site_params[site] = fit_gev(series, opt).params;
    } catch (const std::exception& e) {
      failures[site] = e.what();
    }
  });
  for (int site = 0; site < n; ++site) {
    if (!failures[site].empty()) {
      const auto [i1, i2] = field.grid().site_coords(site);
      throw NumericalError("fit_marginals: site (" + std::to_string(i1) + "," +
                           std::to_string(i2) + "): " + failures[site]);
    }
  }
  return model;
}

SpaceTimeField standardize_field(const SpaceTimeField& field, const MarginalModel& model) {
  if (static_cast<int>(model.site_params.size()) != field.grid().n_sites())
    throw ValidationError("standardize_field: marginal model does not cover the grid");
  SpaceTimeField out(field.grid(), field.T(), Scale::frechet);
  std::ostringstream bad;
  int n_bad = 0;
  for (int t = 1; t <= field.T(); ++t) {
    for (int site = 0; site < field.grid().n_sites(); ++site) {
      try {
        out.at(site, t) = to_frechet(field.at(site, t), model.at(site));
      } catch (const std::exception&) {
        const auto [i1, i2] = field.grid().site_coords(site);
        if (n_bad < 50) bad << " (" << i1 << "," << i2 << ",t=" << t << ")";
        ++n_bad;
      }
    }
  }
  if (n_bad > 0)
    throw DataError("standardize_field: " + std::to_string(n_bad) +
                    " cells out of GEV support:" + bad.str());
  return out;
}

void save_marginals(const MarginalModel& model, const SpatialGrid& grid, const std::string& path) {
  std::ostringstream out;
  out << "i1,i2,mu,sigma,xi\n";
  for (int site = 0; site < grid.n_sites(); ++site) {
    const auto [i1, i2] = grid.site_coords(site);
    const GevParams& g = model.at(site);
    out << i1 << ',' << i2 << ',' << format_full(g.mu) << ',' << format_full(g.sigma) << ','
        << format_full(g.xi) << '\n';
  }
  write_text_file(path, out.str());
}

MarginalModel load_marginals(const std::string& path, const SpatialGrid& grid) {
  const CsvTable t = read_csv(path);
  const int c1 = t.column("i1"), c2 = t.column("i2"), cm = t.column("mu"), cs = t.column("sigma"),
            cx = t.column("xi");
  if (c1 < 0 || c2 < 0 || cm < 0 || cs < 0 || cx < 0)
    throw DataError(path + ": expected header i1,i2,mu,sigma,xi");
  MarginalModel model;
  model.site_params.assign(grid.n_sites(), GevParams{});
  std::vector<char> seen(grid.n_sites(), 0);
  for (const auto& row : t.rows) {
    const int i1 = std::stoi(row[c1]);
    const int i2 = std::stoi(row[c2]);
    if (!grid.contains(i1, i2)) throw DataError(path + ": site outside grid");
    const int site = grid.site_index(i1, i2);
    model.site_params[site] = GevParams{std::stod(row[cm]), std::stod(row[cs]), std::stod(row[cx])};
    if (model.site_params[site].sigma <= 0.0) throw DataError(path + ": sigma must be positive");
    seen[site] = 1;
  }
  for (int site = 0; site < grid.n_sites(); ++site)
    if (!seen[site]) {
      const auto [i1, i2] = grid.site_coords(site);
      throw DataError(path + ": missing marginal fit for site (" + std::to_string(i1) + "," +
                      std::to_string(i2) + ")");
    }
  return model;
}

}  // namespace stms
