#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "stms/gev.hpp"
#include "stms/grid.hpp"
#include "stms/maxar.hpp"

namespace stms {

// Feasible parameter set: box [eps,1/eps] x [eps,1-eps] x [-1/eps,1/eps]^2
// x [eps,1-eps] with balls of radius eps around every h/u removed from the
// advection plane (there the pair law has a Dirac component and the
// density is undefined).
class PsiEpsilon {
 public:
  PsiEpsilon(double eps, const DesignMask& st_mask);

  double eps() const { return eps_; }
  bool contains(const ModelParams& p) const;
  // Smallest distance from tau to an excluded ball center.
  double tau_clearance(const Vec2& tau) const;
  // Push tau radially out of any violated ball and clamp the box.
  void project(double& kappa, double& hurst, Vec2& tau, double& a) const;
  const std::vector<Vec2>& excluded_centers() const { return centers_; }

 private:
  double eps_;
  std::vector<Vec2> centers_;
};

double default_epsilon(double mesh, int p);

struct FitOptions {
  int max_evals_step1 = 400;
  int max_evals_step2 = 500;
  int restarts_step2 = 5;
  double log_density_floor = -1e8;
};

struct FitResult {
  ModelParams params;
  double spatial_pl_value = 0.0;
  double spacetime_pl_value = 0.0;
  long long n_pairs_spatial = 0;
  long long n_pairs_spacetime = 0;
  int evals_step1 = 0;
  int evals_step2 = 0;
  long long clipped_terms = 0;
  bool boundary_warning = false;

  std::string to_text() const;
};

FitResult parse_fit_result(const std::string& text);

// Spatial pairwise log-likelihood (Frechet-scale field, half-plane mask).
double spatial_pl(const SpaceTimeField& field, const DesignMask& mask, double kappa,
                  double hurst, long long* clipped = nullptr);

// Space-time pairwise log-likelihood over temporal lags u = 1..mask.p.
// Throws ValidationError when psi lies outside PsiEpsilon.
double spacetime_pl(const SpaceTimeField& field, const DesignMask& mask, const PsiEpsilon& psi,
                    const ModelParams& params, long long* clipped = nullptr);

// Closed-form pair counts (for the sums above).
long long count_pairs_spatial(const SpatialGrid& grid, const DesignMask& mask, int T);
long long count_pairs_spacetime(const SpatialGrid& grid, const DesignMask& mask, int T);

// Two-step estimator: (kappa, H) from the spatial likelihood, then
// (tau, a) from the space-time likelihood with the spatial part held
// fixed. Restarts for step 2 follow a coarse grid over (tau, a).
FitResult fit_two_step(const SpaceTimeField& field, const DesignMask& mask_s,
                       const DesignMask& mask_st, double eps, const FitOptions& opt = {});

// One-step maximization of the space-time likelihood over all five
// parameters, seeded by the two-step estimate. Escape hatch only; the
// two-step procedure is the supported path.
FitResult fit_joint(const SpaceTimeField& field, const DesignMask& mask_s,
                    const DesignMask& mask_st, double eps, const FitOptions& opt = {});

struct BootstrapOptions {
  int B = 100;
  double level = 0.95;
  std::uint64_t seed = 1;
  bool resample = true;  // false: every replicate uses the full sample
  FitOptions fit;
  GevFitOptions gev;
};

struct BootstrapResult {
  struct Interval {
    std::string name;
    double lo = 0.0;
    double hi = 0.0;
  };
  std::vector<Interval> intervals;                  // kappa, hurst, tau1, tau2, a
  std::vector<std::array<double, 5>> replicates;    // successful replicates
  FitResult centre;                                 // full-data two-step fit
  int n_failed = 0;
  int B = 0;
  double level = 0.0;

  std::string to_csv() const;  // param,lo,hi,level,B
};

// Term-level bootstrap over time indices: per replicate, GEV refits on the
// resampled times drive the spatial step; the temporal step reuses the
// full-data transform and resamples the t-indexed likelihood terms.
BootstrapResult bootstrap_ci(const SpaceTimeField& raw_field, const DesignMask& mask_s,
                             const DesignMask& mask_st, double eps, const BootstrapOptions& opt);

}  // namespace stms
