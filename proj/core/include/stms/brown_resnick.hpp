#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "stms/grid.hpp"
#include "stms/rng.hpp"

namespace stms {

// Isotropic power semivariogram gamma(h) = (||h||/kappa)^(2H).
struct Semivariogram {
  double kappa = 1.0;
  double hurst = 0.5;

  double operator()(const Vec2& h) const { return at_distance(h.norm()); }
  double at_distance(double d) const;
};

// Bivariate exponent measure value and its partial derivatives at (z1, z2).
// Partials follow the sign convention of the positive exponent V, so
// V1 < 0, V2 < 0 and the pair density is exp(-V) (V1 V2 - V12).
struct BivariateV {
  double V = 0.0;
  double V1 = 0.0;
  double V2 = 0.0;
  double V12 = 0.0;
};

// Spatial Brown-Resnick pair exponent for semivariogram value gamma_h > 0.
// gamma_h == 0 is the comonotone case: V = 1/min(z1,z2), partials are NaN
// and callers must treat the pair as degenerate.
BivariateV exponent_V_spatial(double z1, double z2, double gamma_h);

// Exact simulation of a simple max-stable Brown-Resnick vector on a fixed
// finite site set, by sequential record-breaking over sites with
// log-Gaussian spectral functions. The increment covariance pins the
// first site; draws can be restricted to any prefix of the site list,
// against the one shared Cholesky factor.
class BrFieldSimulator {
 public:
  // Arbitrary site list (dense semivariogram table, suitable for small n).
  BrFieldSimulator(std::vector<Vec2> sites, const Semivariogram& sv);
  // Integer lattice sites at spacing `mesh` (table indexed by offsets,
  // suitable for large strips).
  BrFieldSimulator(std::vector<std::pair<int, int>> lattice_sites, double mesh,
                   const Semivariogram& sv);
  ~BrFieldSimulator();
  BrFieldSimulator(BrFieldSimulator&&) noexcept;
  BrFieldSimulator& operator=(BrFieldSimulator&&) noexcept;

  int n_sites() const;

  // One exact draw of log Z on the first n_active sites (-1 = all).
  void draw_log(RngStream& rng, std::span<double> log_out, int n_active = -1) const;
  void draw(RngStream& rng, std::span<double> out, int n_active = -1) const;

  class Impl;

 private:
  std::unique_ptr<Impl> impl_;
};

// Convenience wrapper for one draw on an explicit site list.
std::vector<double> simulate_br(const std::vector<Vec2>& sites, const Semivariogram& sv,
                                std::uint64_t seed);

// Conditional simulation of the Brown-Resnick field at one target site
// given observed values at up to 6 sites, by exact hitting-scenario
// enumeration over set partitions of the conditioning points.
class BrConditionalSampler {
 public:
  BrConditionalSampler(const std::vector<Vec2>& obs_sites, const std::vector<double>& obs_values,
                       const Vec2& target, const Semivariogram& sv);
  ~BrConditionalSampler();
  BrConditionalSampler(BrConditionalSampler&&) noexcept;

  double sample(RngStream& rng) const;

  // Scenario weights, one per set partition (diagnostic).
  const std::vector<double>& partition_weights() const;

  class Impl;

 private:
  std::unique_ptr<Impl> impl_;
};

std::vector<double> conditional_sample_br(const std::vector<std::pair<Vec2, double>>& obs,
                                          const Vec2& target, const Semivariogram& sv,
                                          std::uint64_t seed, int n);

}  // namespace stms
