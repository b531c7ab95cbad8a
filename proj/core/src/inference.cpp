#include "stms/inference.hpp"

#include <algorithm>
#include <atomic>
#include <mutex>
#include <cmath>
#include <map>
#include <sstream>

#include "stms/csv.hpp"
#include "stms/errors.hpp"
#include "stms/optim.hpp"
#include "stms/parallel.hpp"
#include "stms/stats.hpp"

namespace stms {

double default_epsilon(double mesh, int p) {
  if (mesh <= 0.0 || p < 1) throw ValidationError("default_epsilon: bad arguments");
  return std::min(0.5, mesh / p) / 10.0;
}

PsiEpsilon::PsiEpsilon(double eps, const DesignMask& st_mask) : eps_(eps) {
  const double bound = std::min(0.5, st_mask.mesh / st_mask.p);
  if (!(eps > 0.0 && eps < bound))
    throw ValidationError("PsiEpsilon: eps must lie in (0, min(1/2, mesh/p))");
  std::map<std::pair<long long, long long>, Vec2> dedup;
  for (int u = 1; u <= st_mask.p; ++u) {
    for (std::size_t i = 0; i < st_mask.lags.size(); ++i) {
      const Vec2 c = st_mask.lag_vec(i) * (1.0 / u);
      dedup[{static_cast<long long>(std::llround(c.x * 1e12)),
             static_cast<long long>(std::llround(c.y * 1e12))}] = c;
    }
  }
  centers_.reserve(dedup.size());
  for (const auto& [k, c] : dedup) centers_.push_back(c);
}

double PsiEpsilon::tau_clearance(const Vec2& tau) const {
  double best = std::numeric_limits<double>::infinity();
  for (const Vec2& c : centers_) best = std::min(best, (tau - c).norm());
  return best;
}

bool PsiEpsilon::contains(const ModelParams& p) const {
  const double inv = 1.0 / eps_;
  if (!(p.sv.kappa >= eps_ && p.sv.kappa <= inv)) return false;
  if (!(p.sv.hurst >= eps_ && p.sv.hurst <= 1.0 - eps_)) return false;
  if (!(std::fabs(p.tau.x) <= inv && std::fabs(p.tau.y) <= inv)) return false;
  if (!(p.a >= eps_ && p.a <= 1.0 - eps_)) return false;
  return tau_clearance(p.tau) >= eps_;
}

void PsiEpsilon::project(double& kappa, double& hurst, Vec2& tau, double& a) const {
  const double inv = 1.0 / eps_;
  kappa = std::clamp(kappa, eps_, inv);
  hurst = std::clamp(hurst, eps_, 1.0 - eps_);
  a = std::clamp(a, eps_, 1.0 - eps_);
  tau.x = std::clamp(tau.x, -inv, inv);
  tau.y = std::clamp(tau.y, -inv, inv);
  for (int pass = 0; pass < 8; ++pass) {
    bool moved = false;
    for (const Vec2& c : centers_) {
      const Vec2 d = tau - c;
      const double dist = d.norm();
      if (dist >= eps_) continue;
      moved = true;
      if (dist < 1e-14) {
        tau = c + Vec2{eps_ * 1.0000001, 0.0};
      } else {
        tau = c + d * (eps_ * 1.0000001 / dist);
      }
    }
    if (!moved) break;
  }
}

std::string FitResult::to_text() const {
  std::ostringstream out;
  out << "kappa=" << format_full(params.sv.kappa) << '\n';
  out << "hurst=" << format_full(params.sv.hurst) << '\n';
  out << "tau1=" << format_full(params.tau.x) << '\n';
  out << "tau2=" << format_full(params.tau.y) << '\n';
  out << "a=" << format_full(params.a) << '\n';
  out << "spatial_pl=" << format_full(spatial_pl_value) << '\n';
  out << "spacetime_pl=" << format_full(spacetime_pl_value) << '\n';
  out << "n_pairs_spatial=" << n_pairs_spatial << '\n';
  out << "n_pairs_spacetime=" << n_pairs_spacetime << '\n';
  out << "evals_step1=" << evals_step1 << '\n';
  out << "evals_step2=" << evals_step2 << '\n';
  out << "clipped_terms=" << clipped_terms << '\n';
  out << "boundary_warning=" << (boundary_warning ? 1 : 0) << '\n';
  return out.str();
}

FitResult parse_fit_result(const std::string& text) {
  FitResult r;
  std::istringstream in(text);
  std::string line;
  std::map<std::string, std::string> kv;
  while (std::getline(in, line)) {
    const auto pos = line.find('=');
    if (pos == std::string::npos) continue;
    kv[line.substr(0, pos)] = line.substr(pos + 1);
  }
  auto need = [&](const std::string& k) {
    const auto it = kv.find(k);
    if (it == kv.end()) throw DataError("fit result text missing key: " + k);
    return it->second;
  };
  r.params.sv.kappa = std::stod(need("kappa"));
  r.params.sv.hurst = std::stod(need("hurst"));
  r.params.tau = {std::stod(need("tau1")), std::stod(need("tau2"))};
  r.params.a = std::stod(need("a"));
  if (kv.count("spatial_pl")) r.spatial_pl_value = std::stod(kv["spatial_pl"]);
  if (kv.count("spacetime_pl")) r.spacetime_pl_value = std::stod(kv["spacetime_pl"]);
  return r;
}

namespace {

constexpr double kFloor = -1e8;

// Shared evaluation core. Terms are grouped by time block; block sums are
// pairwise-reduced in a fixed order so the total does not depend on the
// worker count. Weights, when present, multiply whole time slices.
struct PlData {
  const SpaceTimeField* field;
  std::vector<double> lz;  // log values
  std::vector<double> iz;  // reciprocals

  explicit PlData(const SpaceTimeField& f) : field(&f) {
    const std::size_t n = f.values().size();
    lz.resize(n);
    iz.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double v = f.values()[i];
      if (!(v > 0.0)) throw ValidationError("pairwise likelihood: field must be Frechet scale");
      lz[i] = std::log(v);
      iz[i] = 1.0 / v;
    }
  }
};

struct LagCtx {
  int z1, z2, u;
  PairDensity dens;
};

double eval_pl(const PlData& data, const std::vector<LagCtx>& ctxs,
               const std::vector<double>* weights, long long* clipped,
               long long* n_terms) {
  const SpaceTimeField& f = *data.field;
  const SpatialGrid& g = f.grid();
  const int m1 = g.m1, m2 = g.m2, T = f.T();
  const std::size_t ns = static_cast<std::size_t>(g.n_sites());

  std::vector<double> block_sums(T, 0.0);
  std::vector<long long> block_clips(T, 0);
  std::vector<long long> block_terms(T, 0);
  std::atomic<bool> bad{false};
  std::string bad_msg;
  std::mutex bad_mu;

  parallel_for(T, [&](std::size_t tb) {
    const int t = static_cast<int>(tb) + 1;
    const double w = weights ? (*weights)[tb] : 1.0;
    if (w == 0.0) return;
    double acc = 0.0;
    long long clips = 0, terms = 0;
    for (const LagCtx& c : ctxs) {
      if (t + c.u > T) continue;
      const std::size_t base1 = static_cast<std::size_t>(t - 1) * ns;
      const std::size_t base2 = static_cast<std::size_t>(t + c.u - 1) * ns;
      const int i1_lo = std::max(1, 1 - c.z1), i1_hi = std::min(m1, m1 - c.z1);
      const int i2_lo = std::max(1, 1 - c.z2), i2_hi = std::min(m2, m2 - c.z2);
      const int off = c.z1 + c.z2 * m1;
      for (int i2 = i2_lo; i2 <= i2_hi; ++i2) {
        const int row = (i2 - 1) * m1 - 1;
        for (int i1 = i1_lo; i1 <= i1_hi; ++i1) {
          const int s = row + i1;
          const std::size_t a = base1 + s;
          const std::size_t b = base2 + s + off;
          double term = c.dens.log_density(data.lz[a], data.lz[b], data.iz[a], data.iz[b]);
          if (std::isnan(term)) {
            std::lock_guard<std::mutex> lock(bad_mu);
            if (!bad.exchange(true)) {
              std::ostringstream msg;
              msg << "pairwise likelihood: non-finite term at site (" << i1 << "," << i2
                  << "), t=" << t << ", lag=(" << c.z1 << "," << c.z2 << "), u=" << c.u;
              bad_msg = msg.str();
            }
            return;
          }
          if (term < kFloor) {
            term = kFloor;
            ++clips;
          }
          acc += term;
          ++terms;
        }
      }
    }
    block_sums[tb] = w * acc;
    block_clips[tb] = clips;
    block_terms[tb] = terms;
  });
  if (bad.load()) throw NumericalError(bad_msg);
  if (clipped) {
    long long c = 0;
    for (long long v : block_clips) c += v;
    *clipped += c;
  }
  if (n_terms) {
    long long c = 0;
    for (long long v : block_terms) c += v;
    *n_terms = c;
  }
  return pairwise_sum(block_sums);
}

std::vector<LagCtx> spatial_ctxs(const DesignMask& mask, double kappa, double hurst) {
  ModelParams p;
  p.sv = Semivariogram{kappa, hurst};
  p.a = 0.5;  // does not enter u = 0 densities
  std::vector<LagCtx> ctxs;
  ctxs.reserve(mask.lags.size());
  for (std::size_t i = 0; i < mask.lags.size(); ++i) {
    const auto [z1, z2] = mask.lags[i];
    if (z1 == 0 && z2 == 0)
      throw ValidationError("spatial_pl: zero lag in a spatial-only mask");
    ctxs.push_back(LagCtx{z1, z2, 0, PairDensity{StPair{mask.lag_vec(i), 0}, p}});
  }
  return ctxs;
}

std::vector<LagCtx> st_ctxs(const DesignMask& mask, const ModelParams& params) {
  std::vector<LagCtx> ctxs;
  ctxs.reserve(mask.lags.size() * mask.p);
  for (int u = 1; u <= mask.p; ++u)
    for (std::size_t i = 0; i < mask.lags.size(); ++i) {
      const auto [z1, z2] = mask.lags[i];
      ctxs.push_back(LagCtx{z1, z2, u, PairDensity{StPair{mask.lag_vec(i), u}, params}});
    }
  return ctxs;
}

}  // namespace

double spatial_pl(const SpaceTimeField& field, const DesignMask& mask, double kappa, double hurst,
                  long long* clipped) {
  if (field.scale() != Scale::frechet)
    throw ValidationError("spatial_pl: field must be on the Frechet scale");
  if (!mask.spatial_only) throw ValidationError("spatial_pl: mask must be spatial-only");
  if (!(kappa > 0.0) || !(hurst > 0.0 && hurst <= 1.0))
    throw ValidationError("spatial_pl: bad (kappa, hurst)");
  const PlData data(field);
  return eval_pl(data, spatial_ctxs(mask, kappa, hurst), nullptr, clipped, nullptr);
}

double spacetime_pl(const SpaceTimeField& field, const DesignMask& mask, const PsiEpsilon& psi,
                    const ModelParams& params, long long* clipped) {
  if (field.scale() != Scale::frechet)
    throw ValidationError("spacetime_pl: field must be on the Frechet scale");
  if (mask.spatial_only) throw ValidationError("spacetime_pl: mask must be the full mask");
  if (!psi.contains(params))
    throw ValidationError("spacetime_pl: parameters outside Psi_epsilon");
  const PlData data(field);
  return eval_pl(data, st_ctxs(mask, params), nullptr, clipped, nullptr);
}

long long count_pairs_spatial(const SpatialGrid& grid, const DesignMask& mask, int T) {
  long long per_slice = 0;
  for (const auto& [z1, z2] : mask.lags) {
    const long long o1 = std::max(0, grid.m1 - std::abs(z1));
    const long long o2 = std::max(0, grid.m2 - std::abs(z2));
    per_slice += o1 * o2;
  }
  return per_slice * T;
}

long long count_pairs_spacetime(const SpatialGrid& grid, const DesignMask& mask, int T) {
  long long per_slice = 0;
  for (const auto& [z1, z2] : mask.lags) {
    const long long o1 = std::max(0, grid.m1 - std::abs(z1));
    const long long o2 = std::max(0, grid.m2 - std::abs(z2));
    per_slice += o1 * o2;
  }
  long long total = 0;
  for (int u = 1; u <= mask.p; ++u) total += per_slice * std::max(0, T - u);
  return total;
}

namespace {

struct StepResult {
  Eigen::VectorXd x;
  double value;
  int evals;
  bool boundary;
};

// Step 1: maximize the spatial likelihood over (kappa, H).
StepResult run_step1(const PlData& data, const DesignMask& mask_s, double eps,
                     const std::vector<double>* weights, const FitOptions& opt,
                     std::optional<std::pair<double, double>> start) {
  long long dummy = 0;
  auto objective = [&](const Eigen::VectorXd& q) {
    double kappa = q[0], hurst = q[1];
    const double k0 = kappa, h0 = hurst;
    kappa = std::clamp(kappa, eps, 1.0 / eps);
    hurst = std::clamp(hurst, eps, 1.0 - eps);
    const double pen = (k0 - kappa) * (k0 - kappa) + (h0 - hurst) * (h0 - hurst);
    double value;
    try {
      value = eval_pl(data, spatial_ctxs(mask_s, kappa, hurst), weights, &dummy, nullptr);
    } catch (const NumericalError&) {
      return std::numeric_limits<double>::infinity();
    }
    return -value + pen * (1.0 + std::fabs(value));
  };

  std::vector<std::pair<double, double>> starts;
  if (start) {
    starts.push_back(*start);
  } else {
    for (double k : {mask_s.mesh, 4.0 * mask_s.mesh})
      for (double h : {0.35, 0.7}) starts.emplace_back(k, h);
  }
  double best_val = std::numeric_limits<double>::infinity();
  std::pair<double, double> best_start = starts.front();
  if (starts.size() > 1) {
    for (const auto& s : starts) {
      Eigen::VectorXd q(2);
      q << s.first, s.second;
      const double v = objective(q);
      if (v < best_val) {
        best_val = v;
        best_start = s;
      }
    }
  }
  Eigen::VectorXd x0(2);
  x0 << best_start.first, best_start.second;
  Eigen::VectorXd step(2);
  step << 0.3 * best_start.first, 0.1;
  NmOptions nm;
  nm.max_evals = opt.max_evals_step1;
  nm.ftol_abs = 1e-7;
  nm.ftol_rel = 1e-10;
  nm.xtol = 1e-6;
  const NmResult r = nelder_mead(objective, x0, step, nm);

  StepResult out;
  out.x = r.x;
  out.x[0] = std::clamp(out.x[0], eps, 1.0 / eps);
  out.x[1] = std::clamp(out.x[1], eps, 1.0 - eps);
  out.value = -r.f;
  out.evals = r.evals;
  const double tol = 1e-6;
  out.boundary = out.x[0] <= eps + tol || out.x[0] >= 1.0 / eps - tol || out.x[1] <= eps + tol ||
                 out.x[1] >= 1.0 - eps - tol;
  return out;
}

// Step 2: maximize the space-time likelihood over (tau, a), spatial part fixed.
StepResult run_step2(const PlData& data, const DesignMask& mask_st, const PsiEpsilon& psi,
                     const Semivariogram& sv, const std::vector<double>* weights,
                     const FitOptions& opt, std::optional<std::array<double, 3>> start) {
  long long dummy = 0;
  auto objective = [&](const Eigen::VectorXd& q) {
    double kappa = sv.kappa, hurst = sv.hurst, a = q[2];
    Vec2 tau{q[0], q[1]};
    psi.project(kappa, hurst, tau, a);
    const double pen = (tau - Vec2{q[0], q[1]}).dot(tau - Vec2{q[0], q[1]}) + (a - q[2]) * (a - q[2]);
    ModelParams p{sv, tau, a};
    double value;
    try {
      value = eval_pl(data, st_ctxs(mask_st, p), weights, &dummy, nullptr);
    } catch (const NumericalError&) {
      return std::numeric_limits<double>::infinity();
    }
    return -value + pen * (1.0 + std::fabs(value));
  };

  std::vector<std::array<double, 3>> cands;
  if (start) {
    cands.push_back(*start);
  } else {
    for (double s : {0.25, 0.5, 1.0})
      for (const auto& [ex, ey] : std::vector<std::pair<double, double>>{{1, 0}, {-1, 0}, {0, 1}, {0, -1}})
        for (double a : {0.3, 0.6, 0.9})
          cands.push_back({s * mask_st.mesh * ex, s * mask_st.mesh * ey, a});
  }
  std::vector<std::pair<double, std::array<double, 3>>> ranked;
  for (auto& c : cands) {
    double kappa = sv.kappa, hurst = sv.hurst, a = c[2];
    Vec2 tau{c[0], c[1]};
    psi.project(kappa, hurst, tau, a);
    c = {tau.x, tau.y, a};
    Eigen::VectorXd q(3);
    q << c[0], c[1], c[2];
    ranked.emplace_back(objective(q), c);
  }
  std::sort(ranked.begin(), ranked.end(),
            [](const auto& l, const auto& r) { return l.first < r.first; });
  const int n_starts = start ? 1 : std::min<int>(opt.restarts_step2, static_cast<int>(ranked.size()));

  NmOptions nm;
  nm.max_evals = opt.max_evals_step2;
  nm.ftol_abs = 1e-7;
  nm.ftol_rel = 1e-10;
  nm.xtol = 1e-7;
  NmResult best;
  best.f = std::numeric_limits<double>::infinity();
  int evals = 0;
  for (int i = 0; i < n_starts; ++i) {
    Eigen::VectorXd x0(3);
    x0 << ranked[i].second[0], ranked[i].second[1], ranked[i].second[2];
    Eigen::VectorXd step(3);
    step << 0.25 * mask_st.mesh, 0.25 * mask_st.mesh, 0.08;
    const NmResult r = nelder_mead(objective, x0, step, nm);
    evals += r.evals;
    if (r.f < best.f) best = r;
  }

  StepResult out;
  double kappa = sv.kappa, hurst = sv.hurst, a = best.x[2];
  Vec2 tau{best.x[0], best.x[1]};
  psi.project(kappa, hurst, tau, a);
  out.x = Eigen::VectorXd(3);
  out.x << tau.x, tau.y, a;
  out.value = -best.f;
  out.evals = evals;
  const double tol = 1e-6;
  out.boundary = a <= psi.eps() + tol || a >= 1.0 - psi.eps() - tol ||
                 psi.tau_clearance(tau) <= psi.eps() * (1.0 + 1e-5) + tol;
  return out;
}

}  // namespace

FitResult fit_two_step(const SpaceTimeField& field, const DesignMask& mask_s,
                       const DesignMask& mask_st, double eps, const FitOptions& opt) {
  if (field.scale() != Scale::frechet)
    throw ValidationError("fit_two_step: field must be on the Frechet scale");
  const PsiEpsilon psi(eps, mask_st);
  const PlData data(field);

  const StepResult s1 = run_step1(data, mask_s, eps, nullptr, opt, std::nullopt);
  const Semivariogram sv{s1.x[0], s1.x[1]};
  const StepResult s2 = run_step2(data, mask_st, psi, sv, nullptr, opt, std::nullopt);

  FitResult r;
  r.params = ModelParams{sv, Vec2{s2.x[0], s2.x[1]}, s2.x[2]};
  long long clipped = 0;
  r.spatial_pl_value = eval_pl(data, spatial_ctxs(mask_s, sv.kappa, sv.hurst), nullptr, &clipped, nullptr);
  r.spacetime_pl_value = eval_pl(data, st_ctxs(mask_st, r.params), nullptr, &clipped, nullptr);
  r.clipped_terms = clipped;
  r.n_pairs_spatial = count_pairs_spatial(field.grid(), mask_s, field.T());
  r.n_pairs_spacetime = count_pairs_spacetime(field.grid(), mask_st, field.T());
  r.evals_step1 = s1.evals;
  r.evals_step2 = s2.evals;
  r.boundary_warning = s1.boundary || s2.boundary;
  return r;
}

FitResult fit_joint(const SpaceTimeField& field, const DesignMask& mask_s,
                    const DesignMask& mask_st, double eps, const FitOptions& opt) {
  FitResult r = fit_two_step(field, mask_s, mask_st, eps, opt);
  const PsiEpsilon psi(eps, mask_st);
  const PlData data(field);
  long long dummy = 0;
  auto objective = [&](const Eigen::VectorXd& q) {
    double kappa = q[0], hurst = q[1], a = q[4];
    Vec2 tau{q[2], q[3]};
    psi.project(kappa, hurst, tau, a);
    const double pen = (kappa - q[0]) * (kappa - q[0]) + (hurst - q[1]) * (hurst - q[1]) +
                       (tau - Vec2{q[2], q[3]}).dot(tau - Vec2{q[2], q[3]}) +
                       (a - q[4]) * (a - q[4]);
    ModelParams p{Semivariogram{kappa, hurst}, tau, a};
    double value;
    try {
      value = eval_pl(data, st_ctxs(mask_st, p), nullptr, &dummy, nullptr);
    } catch (const NumericalError&) {
      return std::numeric_limits<double>::infinity();
    }
    return -value + pen * (1.0 + std::fabs(value));
  };
  Eigen::VectorXd x0(5), step(5);
  x0 << r.params.sv.kappa, r.params.sv.hurst, r.params.tau.x, r.params.tau.y, r.params.a;
  step << 0.2 * r.params.sv.kappa, 0.05, 0.2 * mask_st.mesh, 0.2 * mask_st.mesh, 0.05;
  NmOptions nm;
  nm.max_evals = opt.max_evals_step2;
  const NmResult best = nelder_mead(objective, x0, step, nm);
  double kappa = best.x[0], hurst = best.x[1], a = best.x[4];
  Vec2 tau{best.x[2], best.x[3]};
  psi.project(kappa, hurst, tau, a);
  r.params = ModelParams{Semivariogram{kappa, hurst}, tau, a};
  r.evals_step2 += best.evals;
  long long clipped = 0;
  r.spacetime_pl_value = eval_pl(data, st_ctxs(mask_st, r.params), nullptr, &clipped, nullptr);
  r.spatial_pl_value =
      eval_pl(data, spatial_ctxs(mask_s, kappa, hurst), nullptr, &clipped, nullptr);
  r.clipped_terms = clipped;
  return r;
}

std::string BootstrapResult::to_csv() const {
  std::ostringstream out;
  out << "param,lo,hi,level,B\n";
  for (const auto& iv : intervals)
    out << iv.name << ',' << format_full(iv.lo) << ',' << format_full(iv.hi) << ','
        << format_full(level) << ',' << B << '\n';
  return out.str();
}

BootstrapResult bootstrap_ci(const SpaceTimeField& raw_field, const DesignMask& mask_s,
                             const DesignMask& mask_st, double eps, const BootstrapOptions& opt) {
  if (opt.B < 50) throw ValidationError("bootstrap_ci: B must be >= 50");
  if (!(opt.level > 0.0 && opt.level < 1.0)) throw ValidationError("bootstrap_ci: bad level");
  const int T = raw_field.T();
  const int ns = raw_field.grid().n_sites();

  // Full-data pipeline: marginals, transform, two-step fit (the centre).
  const MarginalModel full_marg = fit_marginals(raw_field, opt.gev);
  const SpaceTimeField z_full = standardize_field(raw_field, full_marg);
  const FitResult centre = fit_two_step(z_full, mask_s, mask_st, eps, opt.fit);
  const PsiEpsilon psi(eps, mask_st);
  const PlData data_full(z_full);

  std::vector<std::array<double, 5>> reps(opt.B);
  std::vector<char> failed(opt.B, 0);

  parallel_for(opt.B, [&](std::size_t b) {
    RngStream rng(opt.seed, 1000003 + b);
    try {
      std::vector<double> w(T, 0.0);
      if (opt.resample) {
        for (int i = 0; i < T; ++i) {
          const int t = static_cast<int>(rng.uniform() * T);
          w[std::min(t, T - 1)] += 1.0;
        }
      } else {
        std::fill(w.begin(), w.end(), 1.0);
      }

      // GEV refit per site on the resampled times, then transform those
      // times only (other slices never enter the step-1 sum).
      SpaceTimeField zb(raw_field.grid(), T, Scale::frechet);
      std::vector<double> series(T), weights(T);
      for (int t = 0; t < T; ++t) weights[t] = w[t];
      for (int site = 0; site < ns; ++site) {
        for (int t = 1; t <= T; ++t) series[t - 1] = raw_field.at(site, t);
        const GevParams g = fit_gev(series, weights, opt.gev).params;
        for (int t = 1; t <= T; ++t)
          zb.at(site, t) = w[t - 1] > 0.0 ? to_frechet(series[t - 1], g) : 1.0;
      }

      const PlData data_b(zb);
      const StepResult s1 =
          run_step1(data_b, mask_s, eps, &w, opt.fit,
                    std::make_pair(centre.params.sv.kappa, centre.params.sv.hurst));
      const Semivariogram sv{s1.x[0], s1.x[1]};
      const StepResult s2 = run_step2(
          data_full, mask_st, psi, sv, &w, opt.fit,
          std::array<double, 3>{centre.params.tau.x, centre.params.tau.y, centre.params.a});
      reps[b] = {sv.kappa, sv.hurst, s2.x[0], s2.x[1], s2.x[2]};
    } catch (const std::exception&) {
      failed[b] = 1;
    }
  });

  BootstrapResult out;
  out.centre = centre;
  out.B = opt.B;
  out.level = opt.level;
  for (int b = 0; b < opt.B; ++b) {
    if (failed[b])
      ++out.n_failed;
    else
      out.replicates.push_back(reps[b]);
  }
  if (out.n_failed * 5 > opt.B)
    throw NumericalError("bootstrap_ci: more than 20% of replicates failed (" +
                         std::to_string(out.n_failed) + "/" + std::to_string(opt.B) + ")");

  const char* names[5] = {"kappa", "hurst", "tau1", "tau2", "a"};
  const double alpha = (1.0 - opt.level) / 2.0;
  for (int j = 0; j < 5; ++j) {
    std::vector<double> v;
    v.reserve(out.replicates.size());
    for (const auto& r : out.replicates) v.push_back(r[j]);
    BootstrapResult::Interval iv;
    iv.name = names[j];
    iv.lo = quantile(v, alpha);
    iv.hi = quantile(v, 1.0 - alpha);
    out.intervals.push_back(iv);
  }
  return out;
}

}  // namespace stms
