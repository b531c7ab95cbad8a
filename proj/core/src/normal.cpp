#include "stms/normal.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "stms/errors.hpp"

namespace stms {

namespace {

constexpr double kSqrt2 = 1.4142135623730950488016887242097;
constexpr double kInvSqrt2Pi = 0.39894228040143267793994605993438;
constexpr double kInvSqrtPi = 0.56418958354775628694807945156077;

// erfc via Cody's rational Chebyshev approximations (calerf).
double erfc_cody(double x) {
  const double y = std::fabs(x);
  double result;
  if (y <= 0.46875) {
    static const double a[5] = {3.16112374387056560e00, 1.13864154151050156e02,
                                3.77485237685302021e02, 3.20937758913846947e03,
                                1.85777706184603153e-1};
    static const double b[4] = {2.36012909523441209e01, 2.44024637934444173e02,
                                1.28261652607737228e03, 2.84423683343917062e03};
    const double z = y * y;
    double num = a[4] * z;
    double den = z;
    for (int i = 0; i < 3; ++i) {
      num = (num + a[i]) * z;
      den = (den + b[i]) * z;
    }
    return 1.0 - x * (num + a[3]) / (den + b[3]);
  }
  if (y <= 4.0) {
    static const double c[9] = {5.64188496988670089e-1, 8.88314979438837594e00,
                                6.61191906371416295e01, 2.98635138197400131e02,
                                8.81952221241769090e02, 1.71204761263407058e03,
                                2.05107837782607147e03, 1.23033935479799725e03,
                                2.15311535474403846e-8};
    static const double d[8] = {1.57449261107098347e01, 1.17693950891312499e02,
                                5.37181101862009858e02, 1.62138957456669019e03,
                                3.29079923573345963e03, 4.36261909014324716e03,
                                3.43936767414372164e03, 1.23033935480374942e03};
    double num = c[8] * y;
    double den = y;
    for (int i = 0; i < 7; ++i) {
      num = (num + c[i]) * y;
      den = (den + d[i]) * y;
    }
    result = (num + c[7]) / (den + d[7]);
  } else if (y < 26.6) {
    static const double p[6] = {3.05326634961232344e-1, 3.60344899949804439e-1,
                                1.25781726111229246e-1, 1.60837851487422766e-2,
                                6.58749161529837803e-4, 1.63153871373020978e-2};
    static const double q[5] = {2.56852019228982242e00, 1.87295284992346047e00,
                                5.27905102951428412e-1, 6.05183413124413191e-2,
                                2.33520497626869185e-3};
    const double z = 1.0 / (y * y);
    double num = p[5] * z;
    double den = z;
    for (int i = 0; i < 4; ++i) {
      num = (num + p[i]) * z;
      den = (den + q[i]) * z;
    }
    const double r = z * (num + p[4]) / (den + q[4]);
    result = (kInvSqrtPi - r) / y;
  } else {
    result = 0.0;
  }
  // exp(-y^2) split to preserve tail accuracy.
  const double ysq = std::trunc(y * 16.0) / 16.0;
  const double del = (y - ysq) * (y + ysq);
  result *= std::exp(-ysq * ysq) * std::exp(-del);
  if (x < 0.0) result = 2.0 - result;
  return result;
}

}  // namespace

double norm_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

double norm_cdf(double x) { return 0.5 * erfc_cody(-x / kSqrt2); }

double norm_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    if (p == 0.0) return -std::numeric_limits<double>::infinity();
    if (p == 1.0) return std::numeric_limits<double>::infinity();
    throw ValidationError("norm_quantile: p outside [0,1]");
  }
  const double q = p - 0.5;
  double r;
  if (std::fabs(q) <= 0.425) {
    r = 0.180625 - q * q;
    return q *
           (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r +
                 6.7265770927008700853e4) *
                    r +
                4.5921953931549871457e4) *
                   r +
               1.3731693765509461125e4) *
                  r +
              1.9715909503065514427e3) *
                 r +
             1.3314166789178437745e2) *
                r +
            3.3871328727963666080e0) /
           (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r +
                 3.9307895800092710610e4) *
                    r +
                2.1213794301586595867e4) *
                   r +
               5.3941960214247511077e3) *
                  r +
              6.8718700749205790830e2) *
                 r +
             4.2313330701600911252e1) *
                r +
            1.0);
  }
  r = (q < 0.0) ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double val;
  if (r <= 5.0) {
    r -= 1.6;
    val = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                2.41780725177450611770e-1) *
                   r +
               1.27045825245236838258e0) *
                  r +
              3.64784832476320460504e0) *
                 r +
             5.76949722146069140550e0) *
                r +
            4.63033784615654529590e0) *
               r +
           1.42343711074968357734e0) /
          (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                1.51986665636164571966e-2) *
                   r +
               1.48103976427480074590e-1) *
                  r +
              6.89767334985100004550e-1) *
                 r +
             1.67638483018380384940e0) *
                r +
            2.05319162663775882187e0) *
               r +
           1.0);
  } else {
    r -= 5.0;
    val = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                1.24266094738807843860e-3) *
                   r +
               2.65321895265761230930e-2) *
                  r +
              2.96560571828504891230e-1) *
                 r +
             1.78482653991729133580e0) *
                r +
            5.46378491116411436990e0) *
               r +
           6.65790464350110377720e0) /
          (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                1.84631831751005468180e-5) *
                   r +
               7.86869131145613259100e-4) *
                  r +
              1.48753612908506148525e-2) *
                 r +
             1.36929880922735805310e-1) *
                r +
            5.99832206555887937690e-1) *
               r +
           1.0);
  }
  return (q < 0.0) ? -val : val;
}

double bvn_cdf(double h, double k, double rho) {
  if (rho < -1.0 || rho > 1.0) throw ValidationError("bvn_cdf: |rho| > 1");
  if (std::isinf(h) && h > 0) return norm_cdf(k);
  if (std::isinf(k) && k > 0) return norm_cdf(h);
  if (std::isinf(h) || std::isinf(k)) return 0.0;
  if (rho == 1.0) return norm_cdf(std::min(h, k));
  if (rho == -1.0) return std::max(0.0, norm_cdf(h) + norm_cdf(k) - 1.0);
  // P(X<=h, Y<=k) = int_{-inf}^{h} phi(x) Phi((k - rho x)/s) dx, s = sqrt(1-rho^2),
  // integrated by 96-point Gauss-Legendre over [max(-9, ...), h].
  static const int n = 96;
  static thread_local bool init = false;
  static thread_local double xs[n], ws[n];
  if (!init) {
    // Nodes via Newton on Legendre P_n, same recurrence as quadrature.cpp;
    // duplicated locally to keep this file self-contained.
    for (int i = 0; i < n / 2 + 1; ++i) {
      double x = std::cos(3.14159265358979323846 * (i + 0.75) / (n + 0.5));
      double pp = 0.0;
      for (int it = 0; it < 100; ++it) {
        double p0 = 1.0, p1 = 0.0;
        for (int j = 0; j < n; ++j) {
          const double p2 = p1;
          p1 = p0;
          p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
        }
        pp = n * (x * p0 - p1) / (x * x - 1.0);
        const double dx = p0 / pp;
        x -= dx;
        if (std::fabs(dx) < 1e-15) break;
      }
      xs[i] = -x;
      xs[n - 1 - i] = x;
      ws[i] = 2.0 / ((1.0 - x * x) * pp * pp);
      ws[n - 1 - i] = ws[i];
    }
    init = true;
  }
  const double lo = -9.0;
  if (h <= lo) return 0.0;
  const double s = std::sqrt((1.0 - rho) * (1.0 + rho));
  const double mid = 0.5 * (lo + h), half = 0.5 * (h - lo);
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = mid + half * xs[i];
    acc += ws[i] * norm_pdf(x) * norm_cdf((k - rho * x) / s);
  }
  return std::max(0.0, std::min(1.0, half * acc));
}

double mvn_cdf(const Eigen::VectorXd& upper, const Eigen::MatrixXd& cov) {
  const int d = static_cast<int>(upper.size());
  if (cov.rows() != d || cov.cols() != d) throw ValidationError("mvn_cdf: shape mismatch");
  if (d == 0) return 1.0;
  if (d == 1) return norm_cdf(upper[0] / std::sqrt(cov(0, 0)));
  if (d == 2) {
    const double s1 = std::sqrt(cov(0, 0)), s2 = std::sqrt(cov(1, 1));
    return bvn_cdf(upper[0] / s1, upper[1] / s2, cov(0, 1) / (s1 * s2));
  }

  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) throw NumericalError("mvn_cdf: covariance not positive definite");
  const Eigen::MatrixXd C = llt.matrixL();

  // Genz sequential transformation, integrated over a Richtmyer lattice
  // with antithetic pairing; deterministic.
  static const double kPrimes[8] = {2, 3, 5, 7, 11, 13, 17, 19};
  if (d > 9) throw ValidationError("mvn_cdf: dimension too large");
  const int npts = 8192;
  double total = 0.0;
  std::vector<double> y(d - 1);
  for (int ipt = 1; ipt <= npts; ++ipt) {
    for (int anti = 0; anti < 2; ++anti) {
      const double e0 = norm_cdf(upper[0] / C(0, 0));
      double prod = e0;
      double ei_prev_limit = e0;
      for (int i = 1; i < d; ++i) {
        double w = std::fmod(ipt * std::sqrt(kPrimes[i - 1]), 1.0);
        if (anti) w = 1.0 - w;
        const double z = std::min(std::max(w * ei_prev_limit, 1e-300), 1.0 - 1e-16);
        y[i - 1] = norm_quantile(z);
        double dot = 0.0;
        for (int j = 0; j < i; ++j) dot += C(i, j) * y[j];
        const double ei = norm_cdf((upper[i] - dot) / C(i, i));
        prod *= ei;
        ei_prev_limit = ei;
        if (prod == 0.0) break;
      }
      total += prod;
    }
  }
  double v = total / (2.0 * npts);
  return std::max(0.0, std::min(1.0, v));
}

}  // namespace stms
