#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "stms/brown_resnick.hpp"
#include "stms/grid.hpp"
#include "stms/rng.hpp"

namespace stms {

// Five-parameter model: spatial Brown-Resnick innovations (kappa, H),
// advection tau (physical units per time step) and temporal decay a.
struct ModelParams {
  Semivariogram sv;
  Vec2 tau{0.0, 0.0};
  double a = 0.5;
};

struct StPair {
  Vec2 h{0.0, 0.0};
  int u = 0;
};

// Bivariate exponent measure of (Z(s,t), Z(s+h,t+u)). For h == u*tau the
// degenerate closed form applies and partials are NaN.
BivariateV exponent_V_st(const StPair& pair, double z1, double z2, const ModelParams& p);

// log of the absolutely continuous pair density; throws ValidationError
// for degenerate pairs (h == u*tau).
double log_pair_density(const StPair& pair, double z1, double z2, const ModelParams& p);
double pair_density(const StPair& pair, double z1, double z2, const ModelParams& p);

// Theta(h,u) = V(1,1) in [1,2].
double extremal_coeff(const StPair& pair, const ModelParams& p);

// Corr(log Z(0,0), log Z(h,u)) via Hoeffding's lemma on a truncated
// Gumbel-scale box, Gauss-Legendre with refinement to 1e-4.
double theoretical_crosscorr(const StPair& pair, const ModelParams& p);

// Approximate lag of maximal cross-correlation along direction h for
// a close to 1: <h,tau>/||tau||^2.
double peak_corr_lag(const Vec2& h, const ModelParams& p);

// Comparison hook: cross-correlation of a fully symmetric space-time
// Brown-Resnick field with separable power variogram
//   gamma(h, u) = (||h||/kappa_s)^{psi_s} + (|u|/kappa_t)^{psi_t},
// the competitor dependence structure reported alongside this model.
// Only the curve is computed; no inference for it lives here.
struct SymmetricBrParams {
  double kappa_s = 1.0, kappa_t = 1.0, psi_s = 1.0, psi_t = 1.0;
};
double symmetric_br_crosscorr(const StPair& pair, const SymmetricBrParams& p);

// Law of Z(s,t+u) given Z(s-u*tau,t) = z1: an atom of mass
// exp(-(a^-u - 1)/z1) at a^u z1 plus a truncated Frechet tail.
struct ConditionalLaw {
  double a_pow_u = 0.0;
  double z1 = 0.0;

  double atom() const { return a_pow_u * z1; }
  double atom_mass() const;
  double cdf(double z2) const;
  double sample(RngStream& rng) const;
};

ConditionalLaw conditional_law(int u, double z1, const ModelParams& p);

// Precomputed constants for repeated density evaluations at one (h,u).
class PairDensity {
 public:
  PairDensity(const StPair& pair, const ModelParams& p);

  // lz = log z, iz = 1/z for the two coordinates.
  double log_density(double lz1, double lz2, double iz1, double iz2) const;

 private:
  double au_, one_m_au_, lau_, s2g_, inv_s2g_, half_s2g_;
};

// Space-time simulation by the max-autoregressive recursion. Innovation
// fields are exact Brown-Resnick draws on the observation lattice extended
// upwind by k*tau for k up to the remaining horizon, so no boundary
// approximation enters. The advection must be aligned with the simulation
// lattice: tau * refine / mesh integer. refine > 1 simulates on a finer
// lattice than the observation grid (needed when tau must stay off the
// lattice of observed spatial lags).
class MaxArSimulator {
 public:
  MaxArSimulator(const SpatialGrid& grid, int T, const ModelParams& params, int refine = 1);
  ~MaxArSimulator();
  MaxArSimulator(MaxArSimulator&&) noexcept;

  // Field on the observation grid, slices t = 1..T, Frechet scale.
  SpaceTimeField simulate(std::uint64_t seed) const;

  // Strip representation of one draw: innovations and the folded field on
  // the extended site lists, for closed-form checks.
  struct DrawDetail {
    std::vector<std::vector<double>> log_w;  // t = 0..T
    std::vector<std::vector<double>> log_z;  // t = 0..T
  };
  DrawDetail simulate_detailed(std::uint64_t seed) const;

  // Z(., t) reconstructed from Z(., t-u) and the intermediate innovations
  // through the lag-u closed form; bit-identical to the recursion.
  std::vector<double> lagu_slice(const DrawDetail& d, int t, int u) const;

  int n_strip(int t) const;  // sites needed for the slice at time t

  class Impl;

 private:
  std::unique_ptr<Impl> impl_;
};

SpaceTimeField simulate_st(const SpatialGrid& grid, int T, const ModelParams& params,
                           std::uint64_t seed, int refine = 1);

}  // namespace stms
