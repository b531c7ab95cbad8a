#pragma once

#include <span>
#include <string>
#include <vector>

#include "stms/grid.hpp"

namespace stms {

struct GevParams {
  double mu = 0.0;
  double sigma = 1.0;
  double xi = 0.0;
};

double gev_cdf(double x, const GevParams& g);
double gev_logpdf(double x, const GevParams& g);
double gev_quantile(double p, const GevParams& g);

struct GevFit {
  GevParams params;
  double loglik = 0.0;
  int evals = 0;
};

struct GevFitOptions {
  std::size_t min_samples = 20;
  int max_evals = 3000;
  double xi_bound = 0.5;  // shape box [-xi_bound, xi_bound]
};

// Maximum likelihood fit. Weights (if given) multiply per-observation
// log-likelihood contributions; used by the bootstrap. Throws
// NumericalError carrying the best iterate in its message if the simplex
// does not converge, ValidationError on degenerate input.
GevFit fit_gev(std::span<const double> samples, const GevFitOptions& opt = {});
GevFit fit_gev(std::span<const double> samples, std::span<const double> weights,
               const GevFitOptions& opt = {});

// T_s: x -> -1/log F(x). Strictly increasing; errors when F(x) is 0 or 1.
double to_frechet(double x, const GevParams& g);
// Inverse transform: z -> F^{-1}(exp(-1/z)).
double from_frechet(double z, const GevParams& g);

// One GEV fit per grid site (row-major site order).
struct MarginalModel {
  std::vector<GevParams> site_params;

  const GevParams& at(int site) const { return site_params[site]; }
};

MarginalModel fit_marginals(const SpaceTimeField& field, const GevFitOptions& opt = {});

// Cell-wise transform to the standard Frechet scale. Collects all
// out-of-support cells before failing.
SpaceTimeField standardize_field(const SpaceTimeField& field, const MarginalModel& model);

// CSV persistence: header i1,i2,mu,sigma,xi.
void save_marginals(const MarginalModel& model, const SpatialGrid& grid, const std::string& path);
MarginalModel load_marginals(const std::string& path, const SpatialGrid& grid);

}  // namespace stms
