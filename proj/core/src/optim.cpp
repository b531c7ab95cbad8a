#include "stms/optim.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "stms/errors.hpp"

namespace stms {

NmResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                     const Eigen::VectorXd& x0, const Eigen::VectorXd& step,
                     const NmOptions& opt) {
  const int n = static_cast<int>(x0.size());
  if (n < 1) throw ValidationError("nelder_mead: empty parameter vector");
  if (step.size() != n) throw ValidationError("nelder_mead: step size mismatch");

  std::vector<Eigen::VectorXd> xs(n + 1, x0);
  std::vector<double> fs(n + 1);
  int evals = 0;
  auto eval = [&](const Eigen::VectorXd& x) {
    ++evals;
    const double v = f(x);
    return std::isnan(v) ? std::numeric_limits<double>::infinity() : v;
  };
  for (int i = 1; i <= n; ++i) xs[i][i - 1] += step[i - 1];
  for (int i = 0; i <= n; ++i) fs[i] = eval(xs[i]);

  std::vector<int> ord(n + 1);
  NmResult res;
  while (true) {
    for (int i = 0; i <= n; ++i) ord[i] = i;
    std::sort(ord.begin(), ord.end(), [&](int a, int b) { return fs[a] < fs[b]; });
    const int lo = ord[0], hi = ord[n], second_hi = ord[n - 1];

    double diam = 0.0;
    for (int i = 1; i <= n; ++i) diam = std::max(diam, (xs[ord[i]] - xs[lo]).cwiseAbs().maxCoeff());
    const double fspread = std::fabs(fs[hi] - fs[lo]);
    if (fspread <= opt.ftol_abs + opt.ftol_rel * std::fabs(fs[lo]) && diam <= opt.xtol) {
      res.converged = true;
      break;
    }
    if (evals >= opt.max_evals) break;

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
    for (int i = 0; i <= n; ++i)
      if (i != hi) centroid += xs[i];
    centroid /= n;

    const Eigen::VectorXd xr = centroid + (centroid - xs[hi]);
    const double fr = eval(xr);
    if (fr < fs[lo]) {
      const Eigen::VectorXd xe = centroid + 2.0 * (centroid - xs[hi]);
      const double fe = eval(xe);
      if (fe < fr) {
        xs[hi] = xe;
        fs[hi] = fe;
      } else {
        xs[hi] = xr;
        fs[hi] = fr;
      }
    } else if (fr < fs[second_hi]) {
      xs[hi] = xr;
      fs[hi] = fr;
    } else {
      const bool outside = fr < fs[hi];
      Eigen::VectorXd xc;
      if (outside)
        xc = centroid + 0.5 * (xr - centroid);
      else
        xc = centroid - 0.5 * (centroid - xs[hi]);
      const double fc = eval(xc);
      if (fc < std::min(fr, fs[hi])) {
        xs[hi] = xc;
        fs[hi] = fc;
      } else {
        for (int i = 0; i <= n; ++i) {
          if (i == lo) continue;
          xs[i] = xs[lo] + 0.5 * (xs[i] - xs[lo]);
          fs[i] = eval(xs[i]);
        }
      }
    }
  }

  int best = 0;
  for (int i = 1; i <= n; ++i)
    if (fs[i] < fs[best]) best = i;
  res.x = xs[best];
  res.f = fs[best];
  res.evals = evals;
  return res;
}

}  // namespace stms
