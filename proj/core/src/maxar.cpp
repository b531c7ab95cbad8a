#include "stms/maxar.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <unordered_map>

#include "stms/errors.hpp"
#include "stms/normal.hpp"
#include "stms/parallel.hpp"
#include "stms/quadrature.hpp"

namespace stms {

namespace {

constexpr double kInvSqrt2Pi = 0.39894228040143267793994605993438;
constexpr double kPiSq6 = 1.6449340668482264364724151666460;

double log_norm_cdf(double x) {
  if (x > -37.0) return std::log(norm_cdf(x));
  // Asymptotic tail expansion.
  const double x2 = x * x;
  const double corr = std::log1p(-1.0 / x2 + 3.0 / (x2 * x2));
  return -0.5 * x2 - std::log(-x) - 0.91893853320467274178 + corr;
}

}  // namespace

BivariateV exponent_V_st(const StPair& pair, double z1, double z2, const ModelParams& p) {
  if (!(z1 > 0.0) || !(z2 > 0.0)) throw ValidationError("exponent_V_st: z must be positive");
  if (pair.u < 0) throw ValidationError("exponent_V_st: temporal lag must be >= 0");
  if (!(p.a > 0.0 && p.a < 1.0)) throw ValidationError("exponent_V_st: a must be in (0,1)");
  const double au = std::pow(p.a, pair.u);
  const Vec2 d = pair.h - p.tau * static_cast<double>(pair.u);
  const double g = p.sv(d);
  BivariateV out;
  if (g == 0.0) {
    out.V = 1.0 / std::min(z1, z2 / au) + (1.0 - au) / z2;
    out.V1 = out.V2 = out.V12 = std::numeric_limits<double>::quiet_NaN();
    return out;
  }
  const double s2g = std::sqrt(2.0 * g);
  const double q1 = std::log(z2 / (au * z1)) / s2g + 0.5 * s2g;
  const double q2 = s2g - q1;
  const double P1 = norm_cdf(q1);
  const double P2 = norm_cdf(q2);
  const double B = au * P2 + (1.0 - au);
  out.V = P1 / z1 + B / z2;
  out.V1 = -P1 / (z1 * z1);
  out.V2 = -B / (z2 * z2);
  out.V12 = -kInvSqrt2Pi * std::exp(-0.5 * q1 * q1) / (z1 * z1 * z2 * s2g);
  return out;
}

PairDensity::PairDensity(const StPair& pair, const ModelParams& p) {
  if (pair.u < 0) throw ValidationError("PairDensity: temporal lag must be >= 0");
  if (!(p.a > 0.0 && p.a < 1.0)) throw ValidationError("PairDensity: a must be in (0,1)");
  au_ = std::pow(p.a, pair.u);
  one_m_au_ = 1.0 - au_;
  lau_ = std::log(au_);
  const Vec2 d = pair.h - p.tau * static_cast<double>(pair.u);
  const double g = p.sv(d);
  if (g == 0.0)
    throw ValidationError("degenerate pair: density undefined (h equals u*tau)");
  s2g_ = std::sqrt(2.0 * g);
  inv_s2g_ = 1.0 / s2g_;
  half_s2g_ = 0.5 * s2g_;
}

double PairDensity::log_density(double lz1, double lz2, double iz1, double iz2) const {
  const double q1 = (lz2 - lz1 - lau_) * inv_s2g_ + half_s2g_;
  const double q2 = s2g_ - q1;
  const double P1 = norm_cdf(q1);
  const double B = au_ * norm_cdf(q2) + one_m_au_;
  const double V = P1 * iz1 + B * iz2;
  const double C = kInvSqrt2Pi * std::exp(-0.5 * q1 * q1) * inv_s2g_;
  const double t = P1 * B + C / iz2;
  if (t > 1e-290) return -V + std::log(t) - 2.0 * (lz1 + lz2);
  // Deep tail: assemble in log space.
  const double term1 = log_norm_cdf(q1) + std::log(B);
  const double term2 = -0.5 * q1 * q1 - 0.91893853320467274178 - std::log(s2g_) + lz2;
  const double hi = std::max(term1, term2);
  const double lse = hi + std::log1p(std::exp(std::min(term1, term2) - hi));
  return -V + lse - 2.0 * (lz1 + lz2);
}

double log_pair_density(const StPair& pair, double z1, double z2, const ModelParams& p) {
  if (!(z1 > 0.0) || !(z2 > 0.0)) throw ValidationError("log_pair_density: z must be positive");
  const PairDensity d(pair, p);
  return d.log_density(std::log(z1), std::log(z2), 1.0 / z1, 1.0 / z2);
}

double pair_density(const StPair& pair, double z1, double z2, const ModelParams& p) {
  return std::exp(log_pair_density(pair, z1, z2, p));
}

double extremal_coeff(const StPair& pair, const ModelParams& p) {
  return exponent_V_st(pair, 1.0, 1.0, p).V;
}

double theoretical_crosscorr(const StPair& pair, const ModelParams& p) {
  if (pair.u == 0 && pair.h.norm() == 0.0) return 1.0;
  const double au = std::pow(p.a, pair.u);
  const Vec2 d = pair.h - p.tau * static_cast<double>(pair.u);
  const double g = p.sv(d);
  const double lau = std::log(au);
  const bool degen = (g == 0.0);
  const double s2g = degen ? 0.0 : std::sqrt(2.0 * g);

  // Hoeffding integral of P(logZ1<=x, logZ2<=y) - P(..x)P(..y) over a
  // Gumbel-scale box; mass outside [-7,14]^2 is below 1e-6. In the
  // degenerate case (h = u tau) the joint CDF kinks along
  // e^-x = a^u e^-y, so the inner integral is split there.
  const double lo = -7.0, hi = 14.0;
  auto integrate = [&](int n) {
    const QuadRule& q = gauss_legendre(n);
    const double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
    std::vector<double> x(n), w(n);
    for (int i = 0; i < n; ++i) {
      x[i] = mid + half * q.nodes[i];
      w[i] = half * q.weights[i];
    }
    auto inner = [&](double xi, double yj) {
      const double exi = std::exp(-xi), eyj = std::exp(-yj);
      double V;
      if (degen) {
        V = std::max(exi, au * eyj) + (1.0 - au) * eyj;
      } else {
        const double q1 = (yj - xi - lau) / s2g + 0.5 * s2g;
        const double q2 = s2g - q1;
        V = norm_cdf(q1) * exi + (au * norm_cdf(q2) + 1.0 - au) * eyj;
      }
      return std::exp(-V) - std::exp(-exi - eyj);
    };
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
      double row = 0.0;
      if (degen) {
        const double kink = x[i] + lau;
        const int m = std::max(8, n / 2);
        const QuadRule& qi = gauss_legendre(m);
        for (const auto& [a_seg, b_seg] :
             {std::pair<double, double>{lo, std::clamp(kink, lo, hi)},
              std::pair<double, double>{std::clamp(kink, lo, hi), hi}}) {
          if (b_seg - a_seg < 1e-14) continue;
          const double smid = 0.5 * (a_seg + b_seg), shalf = 0.5 * (b_seg - a_seg);
          for (int j = 0; j < m; ++j)
            row += shalf * qi.weights[j] * inner(x[i], smid + shalf * qi.nodes[j]);
        }
      } else {
        for (int j = 0; j < n; ++j) row += w[j] * inner(x[i], x[j]);
      }
      acc += w[i] * row;
    }
    return acc;
  };

  double prev = integrate(64);
  double delta = 0.0;
  for (int n : {96, 144, 216, 324}) {
    const double cur = integrate(n);
    delta = std::fabs(cur - prev);
    if (delta < 1e-4) return cur / kPiSq6;
    prev = cur;
  }
  std::ostringstream msg;
  msg << "theoretical_crosscorr: quadrature did not settle below 1e-4 (last delta " << delta
      << " at n=324)";
  throw NumericalError(msg.str());
}

double peak_corr_lag(const Vec2& h, const ModelParams& p) {
  const double t2 = p.tau.dot(p.tau);
  if (t2 == 0.0) throw ValidationError("peak_corr_lag: tau must be nonzero");
  return h.dot(p.tau) / t2;
}

double symmetric_br_crosscorr(const StPair& pair, const SymmetricBrParams& p) {
  if (pair.u == 0 && pair.h.norm() == 0.0) return 1.0;
  const double g = std::pow(pair.h.norm() / p.kappa_s, p.psi_s) +
                   std::pow(std::fabs(static_cast<double>(pair.u)) / p.kappa_t, p.psi_t);
  const double lo = -7.0, hi = 14.0;
  auto integrate = [&](int n) {
    const QuadRule& q = gauss_legendre(n);
    const double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
      const double x = mid + half * q.nodes[i];
      double row = 0.0;
      for (int j = 0; j < n; ++j) {
        const double y = mid + half * q.nodes[j];
        const double V = exponent_V_spatial(std::exp(x), std::exp(y), g).V;
        row += half * q.weights[j] * (std::exp(-V) - std::exp(-std::exp(-x) - std::exp(-y)));
      }
      acc += half * q.weights[i] * row;
    }
    return acc;
  };
  double prev = integrate(64);
  for (int n : {96, 144, 216}) {
    const double cur = integrate(n);
    if (std::fabs(cur - prev) < 1e-4) return cur / kPiSq6;
    prev = cur;
  }
  return prev / kPiSq6;
}

double ConditionalLaw::atom_mass() const {
  return std::exp(-(1.0 / a_pow_u - 1.0) / z1);
}

double ConditionalLaw::cdf(double z2) const {
  if (z2 < a_pow_u * z1) return 0.0;
  return std::exp(-(1.0 - a_pow_u) / z2);
}

double ConditionalLaw::sample(RngStream& rng) const {
  const double w = (1.0 - a_pow_u) / rng.exponential();
  return std::max(a_pow_u * z1, w);
}

ConditionalLaw conditional_law(int u, double z1, const ModelParams& p) {
  if (u < 1) throw ValidationError("conditional_law: u must be >= 1");
  if (!(z1 > 0.0)) throw ValidationError("conditional_law: z1 must be positive");
  if (!(p.a > 0.0 && p.a < 1.0)) throw ValidationError("conditional_law: a must be in (0,1)");
  return ConditionalLaw{std::pow(p.a, u), z1};
}

// ---------------------------------------------------------------------------
// Space-time simulation on layered strips.
// ---------------------------------------------------------------------------

class MaxArSimulator::Impl {
 public:
  SpatialGrid grid;
  int T = 0;
  ModelParams params;
  int refine = 1;
  int dx = 0, dy = 0;                       // advection in fine cells
  std::vector<std::pair<int, int>> coords;  // fine lattice coords, layered order
  std::vector<int> layer_end;               // prefix sizes per shift count 0..T
  std::vector<int> shift;                   // index of site - tau, or -1
  std::unique_ptr<BrFieldSimulator> engine;

  int n_needed(int t) const { return layer_end[T - t]; }

  void draw_innovations(std::uint64_t seed, std::vector<std::vector<double>>& log_w) const {
    log_w.resize(T + 1);
    parallel_for(static_cast<std::size_t>(T) + 1, [&](std::size_t t) {
      const int m = n_needed(static_cast<int>(t));
      log_w[t].resize(m);
      RngStream rng(seed, t);
      engine->draw_log(rng, log_w[t], m);
    });
  }
};

MaxArSimulator::MaxArSimulator(const SpatialGrid& grid, int T, const ModelParams& params,
                               int refine)
    : impl_(std::make_unique<Impl>()) {
  if (T < 1) throw ValidationError("MaxArSimulator: T must be >= 1");
  if (!(params.a > 0.0 && params.a < 1.0))
    throw ValidationError("MaxArSimulator: a must be in (0,1)");
  if (refine < 1) throw ValidationError("MaxArSimulator: refine must be >= 1");
  if (grid.m1 < 1 || grid.m2 < 1 || grid.mesh <= 0.0)
    throw ValidationError("MaxArSimulator: bad grid");

  Impl& im = *impl_;
  im.grid = grid;
  im.T = T;
  im.params = params;
  im.refine = refine;

  const double fine_mesh = grid.mesh / refine;
  const double fx = params.tau.x / fine_mesh;
  const double fy = params.tau.y / fine_mesh;
  im.dx = static_cast<int>(std::llround(fx));
  im.dy = static_cast<int>(std::llround(fy));
  if (std::fabs(fx - im.dx) > 1e-9 || std::fabs(fy - im.dy) > 1e-9) {
    std::ostringstream msg;
    msg << "advection (" << params.tau.x << "," << params.tau.y
        << ") is not aligned with the simulation lattice of mesh " << fine_mesh
        << "; use a finer lattice (refine)";
    throw ValidationError(msg.str());
  }

  // Layered site construction: observation sites first, then the sites
  // reached by shifting k steps upwind, k = 1..T.
  std::unordered_map<long long, int> index;
  auto key = [](int x, int y) {
    return (static_cast<long long>(x) << 24) ^ (static_cast<long long>(y) & 0xFFFFFF);
  };
  im.layer_end.resize(T + 1);
  for (int i2 = 1; i2 <= grid.m2; ++i2)
    for (int i1 = 1; i1 <= grid.m1; ++i1) {
      const int x = i1 * refine, y = i2 * refine;
      index.emplace(key(x, y), static_cast<int>(im.coords.size()));
      im.coords.emplace_back(x, y);
    }
  im.layer_end[0] = static_cast<int>(im.coords.size());
  for (int k = 1; k <= T; ++k) {
    if (im.dx == 0 && im.dy == 0) {
      im.layer_end[k] = im.layer_end[k - 1];
      continue;
    }
    for (int s = 0; s < im.layer_end[0]; ++s) {
      const int x = im.coords[s].first - k * im.dx;
      const int y = im.coords[s].second - k * im.dy;
      if (index.emplace(key(x, y), static_cast<int>(im.coords.size())).second)
        im.coords.emplace_back(x, y);
    }
    im.layer_end[k] = static_cast<int>(im.coords.size());
  }
  im.shift.assign(im.coords.size(), -1);
  for (std::size_t i = 0; i < im.coords.size(); ++i) {
    const auto it = index.find(key(im.coords[i].first - im.dx, im.coords[i].second - im.dy));
    if (it != index.end()) im.shift[i] = it->second;
  }
  im.engine = std::make_unique<BrFieldSimulator>(im.coords, fine_mesh, im.params.sv);
}

MaxArSimulator::~MaxArSimulator() = default;
MaxArSimulator::MaxArSimulator(MaxArSimulator&&) noexcept = default;

int MaxArSimulator::n_strip(int t) const {
  if (t < 0 || t > impl_->T) throw ValidationError("n_strip: t out of range");
  return impl_->n_needed(t);
}

SpaceTimeField MaxArSimulator::simulate(std::uint64_t seed) const {
  const Impl& im = *impl_;
  std::vector<std::vector<double>> log_w;
  im.draw_innovations(seed, log_w);

  const double la = std::log(im.params.a);
  const double l1a = std::log(1.0 - im.params.a);
  SpaceTimeField out(im.grid, im.T, Scale::frechet);
  const int n_obs = im.layer_end[0];

  std::vector<double> prev = std::move(log_w[0]);
  for (int t = 1; t <= im.T; ++t) {
    std::vector<double> cur = std::move(log_w[t]);
    const int m = im.n_needed(t);
    for (int i = 0; i < m; ++i)
      cur[i] = std::max(la + prev[im.shift[i]], l1a + cur[i]);
    double* slice = out.slice(t);
    for (int i = 0; i < n_obs; ++i) slice[i] = std::exp(cur[i]);
    prev = std::move(cur);
  }
  return out;
}

MaxArSimulator::DrawDetail MaxArSimulator::simulate_detailed(std::uint64_t seed) const {
  const Impl& im = *impl_;
  DrawDetail d;
  im.draw_innovations(seed, d.log_w);
  d.log_z.resize(im.T + 1);
  d.log_z[0] = d.log_w[0];
  const double la = std::log(im.params.a);
  const double l1a = std::log(1.0 - im.params.a);
  for (int t = 1; t <= im.T; ++t) {
    const int m = im.n_needed(t);
    d.log_z[t].resize(m);
    for (int i = 0; i < m; ++i)
      d.log_z[t][i] = std::max(la + d.log_z[t - 1][im.shift[i]], l1a + d.log_w[t][i]);
  }
  return d;
}

std::vector<double> MaxArSimulator::lagu_slice(const DrawDetail& d, int t, int u) const {
  const Impl& im = *impl_;
  if (u < 1 || u > t || t > im.T) throw ValidationError("lagu_slice: need 1 <= u <= t <= T");
  const double la = std::log(im.params.a);
  const double l1a = std::log(1.0 - im.params.a);
  const int m = im.n_needed(t);
  std::vector<double> out(m);
  for (int i = 0; i < m; ++i) {
    // a^u Z(s - u tau, t-u), scaled step by step to match the recursion
    // bit for bit.
    int idx = i;
    double best;
    {
      for (int k = 0; k < u; ++k) idx = im.shift[idx];
      double acc = d.log_z[t - u][idx];
      for (int k = 0; k < u; ++k) acc = la + acc;
      best = acc;
    }
    // (1-a^u) W-tilde expanded: a^k (1-a) W_{t-k}(s - k tau).
    idx = i;
    for (int k = 0; k < u; ++k) {
      double acc = l1a + d.log_w[t - k][idx];
      for (int j = 0; j < k; ++j) acc = la + acc;
      if (acc > best) best = acc;
      idx = im.shift[idx];
    }
    out[i] = best;
  }
  return out;
}

SpaceTimeField simulate_st(const SpatialGrid& grid, int T, const ModelParams& params,
                           std::uint64_t seed, int refine) {
  return MaxArSimulator(grid, T, params, refine).simulate(seed);
}

}  // namespace stms
