#pragma once

#include <Eigen/Dense>

namespace stms {

// Standard normal density.
double norm_pdf(double x);

// Standard normal CDF, Cody-style rational approximation of erfc.
// Absolute error below 1e-14 over the full range.
double norm_cdf(double x);

// Inverse standard normal CDF (Wichura AS241, ~1e-15 relative).
double norm_quantile(double p);

// P(X <= h, Y <= k) for standard bivariate normal with correlation rho.
double bvn_cdf(double h, double k, double rho);

// P(X_i <= b_i, i=1..d) for X ~ N(0, cov). Upper limits may be +inf.
// d <= 1 falls back to norm_cdf; d == 2 to bvn_cdf; larger d uses the
// Genz sequential transformation integrated over a fixed lattice rule,
// accurate to roughly 1e-5 for the dimensions used here (d <= 8).
double mvn_cdf(const Eigen::VectorXd& upper, const Eigen::MatrixXd& cov);

}  // namespace stms
