#include "stms/brown_resnick.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <sstream>

#include "stms/errors.hpp"
#include "stms/normal.hpp"

namespace stms {

double Semivariogram::at_distance(double d) const {
  if (kappa <= 0.0) throw ValidationError("Semivariogram: kappa must be positive");
  if (d == 0.0) return 0.0;
  return std::pow(d / kappa, 2.0 * hurst);
}

BivariateV exponent_V_spatial(double z1, double z2, double gamma_h) {
  if (!(z1 > 0.0) || !(z2 > 0.0)) throw ValidationError("exponent_V_spatial: z must be positive");
  BivariateV out;
  if (gamma_h == 0.0) {
    out.V = 1.0 / std::min(z1, z2);
    out.V1 = out.V2 = out.V12 = std::numeric_limits<double>::quiet_NaN();
    return out;
  }
  const double s2g = std::sqrt(2.0 * gamma_h);
  const double q1 = std::log(z2 / z1) / s2g + 0.5 * s2g;
  const double q2 = s2g - q1;
  const double P1 = norm_cdf(q1);
  const double P2 = norm_cdf(q2);
  const double pdf1 = 0.39894228040143267794 * std::exp(-0.5 * q1 * q1);
  out.V = P1 / z1 + P2 / z2;
  out.V1 = -P1 / (z1 * z1);
  out.V2 = -P2 / (z2 * z2);
  out.V12 = -pdf1 / (z1 * z1 * z2 * s2g);
  return out;
}

// ---------------------------------------------------------------------------
// Exact simulation machinery.
// ---------------------------------------------------------------------------

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Dense semivariogram lookup for arbitrary site lists.
struct GammaDense {
  const double* tab;
  int n;
  double operator()(int i, int j) const { return tab[static_cast<std::size_t>(i) * n + j]; }
};

// Offset-indexed lookup for integer lattice sites.
struct GammaLattice {
  const double* tab;
  const std::int32_t* cx;
  const std::int32_t* cy;
  int span_y = 0;
  int ox = 0, oy = 0;
  double operator()(int i, int j) const {
    return tab[static_cast<std::size_t>(cx[i] - cx[j] + ox) * span_y + (cy[i] - cy[j] + oy)];
  }
};

// E rows [d0,d1) for a 16-column panel: E[r][b] = sum_{c<=r} L[r][c] G[c][b].
// L is packed row-major lower triangular. Written with GCC vector types;
// the b-dimension maps onto one 16-lane float vector.
#if defined(__GNUC__)
typedef float v16f __attribute__((vector_size(64), aligned(4)));

void panel16(const float* Lp, int d0, int d1, const float* G, float* E) {
  const v16f* g = reinterpret_cast<const v16f*>(G);
  v16f* e = reinterpret_cast<v16f*>(E);
  for (int r = d0; r < d1; ++r) {
    const float* Lrow = Lp + static_cast<std::size_t>(r) * (r + 1) / 2;
    v16f a0 = {}, a1 = {}, a2 = {}, a3 = {}, a4 = {}, a5 = {}, a6 = {}, a7 = {};
    int c = 0;
    for (; c + 8 <= r + 1; c += 8) {
      a0 += Lrow[c] * g[c];
      a1 += Lrow[c + 1] * g[c + 1];
      a2 += Lrow[c + 2] * g[c + 2];
      a3 += Lrow[c + 3] * g[c + 3];
      a4 += Lrow[c + 4] * g[c + 4];
      a5 += Lrow[c + 5] * g[c + 5];
      a6 += Lrow[c + 6] * g[c + 6];
      a7 += Lrow[c + 7] * g[c + 7];
    }
    for (; c <= r; ++c) a0 += Lrow[c] * g[c];
    e[r] = ((a0 + a1) + (a2 + a3)) + ((a4 + a5) + (a6 + a7));
  }
}
#else
void panel16(const float* Lp, int d0, int d1, const float* G, float* E) {
  for (int r = d0; r < d1; ++r) {
    const float* Lrow = Lp + static_cast<std::size_t>(r) * (r + 1) / 2;
    float acc[16] = {0};
    for (int c = 0; c <= r; ++c) {
      const float l = Lrow[c];
      const float* gr = G + static_cast<std::size_t>(c) * 16;
      for (int b = 0; b < 16; ++b) acc[b] += l * gr[b];
    }
    float* er = E + static_cast<std::size_t>(r) * 16;
    for (int b = 0; b < 16; ++b) er[b] = acc[b];
  }
}
#endif

// Accepted spectral functions awaiting extension to deeper rows. Only the
// Gaussian inputs are kept; E rows are folded into logZ and discarded.
struct PendingBlock {
  std::vector<float> G;        // nr x 16, row-major
  int used = 0;
  int root[16];
  double offset[16];
};

}  // namespace

class BrFieldSimulator::Impl {
 public:
  int n = 0;                       // sites
  std::vector<Vec2> sites;
  std::vector<float> Lf;           // packed lower triangular, (n-1) rows
  bool lattice = false;
  // dense gamma
  std::vector<double> gtab_dense;
  // lattice gamma
  std::vector<double> gtab_lat;
  std::vector<std::int32_t> cx, cy;
  int span_y = 0, ox = 0, oy = 0;

  template <class Gamma>
  void draw_log_impl(const Gamma& gamma, RngStream& rng, std::span<double> out, int m) const;

  void factorize(const Eigen::MatrixXd& sigma);
};

void BrFieldSimulator::Impl::factorize(const Eigen::MatrixXd& sigma) {
  const int nr = static_cast<int>(sigma.rows());
  Lf.resize(static_cast<std::size_t>(nr) * (nr + 1) / 2);
  if (nr == 0) return;
  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success) {
    // Re-run an unblocked factorization to locate the failing pivot.
    Eigen::MatrixXd A = sigma;
    for (int j = 0; j < nr; ++j) {
      double d = A(j, j);
      for (int c = 0; c < j; ++c) d -= A(j, c) * A(j, c);
      if (!(d > 0.0)) {
        int nearest = 0;
        double best = std::numeric_limits<double>::infinity();
        for (int i = 0; i <= j; ++i) {
          const double dist = (sites[i] - sites[j + 1]).norm();
          if (dist < best) {
            best = dist;
            nearest = i;
          }
        }
        std::ostringstream msg;
        msg << "increment covariance not positive definite at site (" << sites[j + 1].x << ","
            << sites[j + 1].y << "); nearest conflicting site (" << sites[nearest].x << ","
            << sites[nearest].y << ")";
        throw NumericalError(msg.str());
      }
      A(j, j) = std::sqrt(d);
      for (int i = j + 1; i < nr; ++i) {
        double v = A(i, j);
        for (int c = 0; c < j; ++c) v -= A(i, c) * A(j, c);
        A(i, j) = v / A(j, j);
      }
    }
    throw NumericalError("increment covariance factorization failed");
  }
  const Eigen::MatrixXd L = llt.matrixL();
  for (int r = 0; r < nr; ++r)
    for (int c = 0; c <= r; ++c)
      Lf[static_cast<std::size_t>(r) * (r + 1) / 2 + c] = static_cast<float>(L(r, c));
}

template <class Gamma>
void BrFieldSimulator::Impl::draw_log_impl(const Gamma& gamma, RngStream& rng,
                                           std::span<double> out, int m) const {
  const int nr = m - 1;
  std::vector<double> logZ(m, kNegInf);

  constexpr int B = 16;
  std::vector<float> G(static_cast<std::size_t>(std::max(nr, 1)) * B);
  std::vector<float> E(static_cast<std::size_t>(std::max(nr, 1)) * B);
  std::vector<float> Escratch(static_cast<std::size_t>(std::max(nr, 1)) * B);
  std::vector<PendingBlock> pending;
  int depth = 0;     // materialized reduced rows [0, depth)
  int next_col = B;  // force initial refill

  auto eps_pool = [&](int site, int col) -> double {
    return site == 0 ? 0.0 : static_cast<double>(E[static_cast<std::size_t>(site - 1) * B + col]);
  };

  auto fill_gaussians = [&](float* g, int r0, int r1) {
    for (int r = r0; r < r1; ++r)
      for (int b = 0; b < B; ++b) g[static_cast<std::size_t>(r) * B + b] = static_cast<float>(rng.normal());
  };

  // Extend materialized rows to `target` for the pool and all pending
  // blocks, folding freshly computed pending rows into logZ.
  auto extend_depth = [&](int target) {
    if (target <= depth) return;
    const int d0 = depth, d1 = target;
    fill_gaussians(G.data(), d0, d1);
    panel16(Lf.data(), d0, d1, G.data(), E.data());
    for (auto& blk : pending) {
      fill_gaussians(blk.G.data(), d0, d1);
      panel16(Lf.data(), d0, d1, blk.G.data(), Escratch.data());
      for (int r = d0; r < d1; ++r) {
        const int site = r + 1;
        const float* e = Escratch.data() + static_cast<std::size_t>(r) * B;
        for (int c = 0; c < blk.used; ++c) {
          const double v = static_cast<double>(e[c]) - blk.offset[c] - gamma(site, blk.root[c]);
          if (v > logZ[site]) logZ[site] = v;
        }
      }
    }
    depth = d1;
  };

  auto refill_pool = [&]() {
    fill_gaussians(G.data(), 0, depth);
    panel16(Lf.data(), 0, depth, G.data(), E.data());
    next_col = 0;
  };

  const int chunk = 192;
  long long guard = 0;
  for (int k = 0; k < m; ++k) {
    if (k > depth) extend_depth(std::min(nr, std::max(k, depth + chunk)));
    double zeta = rng.exponential();
    while (-std::log(zeta) > logZ[k]) {
      if (++guard > 400LL * (m + 64)) throw NumericalError("simulate_br: proposal budget exceeded");
      if (next_col == B) refill_pool();
      const int col = next_col++;
      const double off = eps_pool(k, col) + std::log(zeta);
      bool ok = true;
      for (int j = k - 1; j >= 0; --j) {
        if (eps_pool(j, col) - off - gamma(j, k) >= logZ[j]) {
          ok = false;
          break;
        }
      }
      if (ok) {
        const int site_hi = std::min(m - 1, depth);
        for (int j = 0; j <= site_hi; ++j) {
          const double v = eps_pool(j, col) - off - gamma(j, k);
          if (v > logZ[j]) logZ[j] = v;
        }
        if (depth < nr) {
          if (pending.empty() || pending.back().used == B) {
            pending.emplace_back();
            pending.back().G.resize(static_cast<std::size_t>(nr) * B);
          }
          PendingBlock& blk = pending.back();
          const int c = blk.used++;
          for (int r = 0; r < depth; ++r)
            blk.G[static_cast<std::size_t>(r) * B + c] = G[static_cast<std::size_t>(r) * B + col];
          blk.root[c] = k;
          blk.offset[c] = off;
        }
      }
      zeta += rng.exponential();
    }
  }

  std::copy(logZ.begin(), logZ.end(), out.begin());
}

BrFieldSimulator::BrFieldSimulator(std::vector<Vec2> sites, const Semivariogram& sv)
    : impl_(std::make_unique<Impl>()) {
  const int n = static_cast<int>(sites.size());
  if (n < 1) throw ValidationError("BrFieldSimulator: need at least one site");
  impl_->n = n;
  impl_->sites = std::move(sites);
  impl_->lattice = false;
  impl_->gtab_dense.resize(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      impl_->gtab_dense[static_cast<std::size_t>(i) * n + j] = sv(impl_->sites[i] - impl_->sites[j]);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if ((impl_->sites[i] - impl_->sites[j]).norm() == 0.0)
        throw ValidationError("BrFieldSimulator: duplicate sites");

  const int nr = n - 1;
  Eigen::MatrixXd sigma(nr, nr);
  const auto& g = impl_->gtab_dense;
  for (int u = 0; u < nr; ++u)
    for (int v = 0; v < nr; ++v)
      sigma(u, v) = g[static_cast<std::size_t>(u + 1) * n] + g[static_cast<std::size_t>(v + 1) * n] -
                    g[static_cast<std::size_t>(u + 1) * n + (v + 1)];
  impl_->factorize(sigma);
}

BrFieldSimulator::BrFieldSimulator(std::vector<std::pair<int, int>> lattice_sites, double mesh,
                                   const Semivariogram& sv)
    : impl_(std::make_unique<Impl>()) {
  const int n = static_cast<int>(lattice_sites.size());
  if (n < 1) throw ValidationError("BrFieldSimulator: need at least one site");
  if (mesh <= 0.0) throw ValidationError("BrFieldSimulator: mesh must be positive");
  impl_->n = n;
  impl_->lattice = true;
  impl_->sites.resize(n);
  impl_->cx.resize(n);
  impl_->cy.resize(n);
  int xmin = lattice_sites[0].first, xmax = xmin;
  int ymin = lattice_sites[0].second, ymax = ymin;
  for (int i = 0; i < n; ++i) {
    impl_->cx[i] = lattice_sites[i].first;
    impl_->cy[i] = lattice_sites[i].second;
    impl_->sites[i] = {mesh * lattice_sites[i].first, mesh * lattice_sites[i].second};
    xmin = std::min(xmin, lattice_sites[i].first);
    xmax = std::max(xmax, lattice_sites[i].first);
    ymin = std::min(ymin, lattice_sites[i].second);
    ymax = std::max(ymax, lattice_sites[i].second);
  }
  const int sx = xmax - xmin, sy = ymax - ymin;
  impl_->ox = sx;
  impl_->oy = sy;
  impl_->span_y = 2 * sy + 1;
  impl_->gtab_lat.resize(static_cast<std::size_t>(2 * sx + 1) * (2 * sy + 1));
  for (int dx = -sx; dx <= sx; ++dx)
    for (int dy = -sy; dy <= sy; ++dy)
      impl_->gtab_lat[static_cast<std::size_t>(dx + sx) * impl_->span_y + (dy + sy)] =
          sv.at_distance(mesh * std::hypot(static_cast<double>(dx), static_cast<double>(dy)));

  GammaLattice gl{impl_->gtab_lat.data(), impl_->cx.data(), impl_->cy.data(),
                  impl_->span_y, impl_->ox, impl_->oy};
  const int nr = n - 1;
  Eigen::MatrixXd sigma(nr, nr);
  for (int u = 0; u < nr; ++u)
    for (int v = 0; v < nr; ++v) sigma(u, v) = gl(u + 1, 0) + gl(v + 1, 0) - gl(u + 1, v + 1);
  impl_->factorize(sigma);
}

BrFieldSimulator::~BrFieldSimulator() = default;
BrFieldSimulator::BrFieldSimulator(BrFieldSimulator&&) noexcept = default;
BrFieldSimulator& BrFieldSimulator::operator=(BrFieldSimulator&&) noexcept = default;

int BrFieldSimulator::n_sites() const { return impl_->n; }

void BrFieldSimulator::draw_log(RngStream& rng, std::span<double> out, int n_active) const {
  const int m = n_active < 0 ? impl_->n : n_active;
  if (m < 1 || m > impl_->n) throw ValidationError("draw_log: bad prefix size");
  if (static_cast<int>(out.size()) < m) throw ValidationError("draw_log: output too small");
  if (impl_->lattice) {
    GammaLattice g{impl_->gtab_lat.data(), impl_->cx.data(), impl_->cy.data(),
                   impl_->span_y, impl_->ox, impl_->oy};
    impl_->draw_log_impl(g, rng, out, m);
  } else {
    GammaDense g{impl_->gtab_dense.data(), impl_->n};
    impl_->draw_log_impl(g, rng, out, m);
  }
}

void BrFieldSimulator::draw(RngStream& rng, std::span<double> out, int n_active) const {
  draw_log(rng, out, n_active);
  const int m = n_active < 0 ? impl_->n : n_active;
  for (int i = 0; i < m; ++i) out[i] = std::exp(out[i]);
}

std::vector<double> simulate_br(const std::vector<Vec2>& sites, const Semivariogram& sv,
                                std::uint64_t seed) {
  BrFieldSimulator sim(sites, sv);
  RngStream rng(seed, 0);
  std::vector<double> out(sites.size());
  sim.draw(rng, out);
  return out;
}

}  // namespace stms
