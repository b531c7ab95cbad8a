#pragma once

#include <Eigen/Dense>
#include <functional>

namespace stms {

struct NmOptions {
  int max_evals = 4000;
  double ftol_abs = 1e-10;
  double ftol_rel = 1e-10;
  double xtol = 1e-9;
};

struct NmResult {
  Eigen::VectorXd x;
  double f = 0.0;
  int evals = 0;
  bool converged = false;
};

// Nelder-Mead simplex minimization. `step` sets the initial simplex edge
// per coordinate. The objective may return +inf to reject a point.
NmResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                     const Eigen::VectorXd& x0, const Eigen::VectorXd& step,
                     const NmOptions& opt = {});

}  // namespace stms
