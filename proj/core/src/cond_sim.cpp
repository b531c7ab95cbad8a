#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "stms/brown_resnick.hpp"
#include "stms/errors.hpp"
#include "stms/normal.hpp"

namespace stms {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

// All set partitions of {0..k-1} as restricted growth strings; each
// partition is a list of blocks, each block a list of indices.
std::vector<std::vector<std::vector<int>>> set_partitions(int k) {
  std::vector<std::vector<std::vector<int>>> out;
  std::vector<int> rgs(k, 0);
  while (true) {
    int nblocks = 0;
    for (int i = 0; i < k; ++i) nblocks = std::max(nblocks, rgs[i] + 1);
    std::vector<std::vector<int>> part(nblocks);
    for (int i = 0; i < k; ++i) part[rgs[i]].push_back(i);
    out.push_back(std::move(part));
    // next restricted growth string
    int i = k - 1;
    for (; i > 0; --i) {
      int maxprev = 0;
      for (int j = 0; j < i; ++j) maxprev = std::max(maxprev, rgs[j]);
      if (rgs[i] <= maxprev) {
        ++rgs[i];
        for (int j = i + 1; j < k; ++j) rgs[j] = 0;
        break;
      }
    }
    if (i == 0) break;
  }
  return out;
}

// Precomputed sampling data for one block of conditioning points.
struct BlockData {
  std::vector<int> members;       // indices into obs
  std::vector<int> others;        // obs complement followed by the target slot
  double log_intensity = 0.0;     // log lambda_b(z_b)
  double log_below = 0.0;         // log P(phi < z on obs complement | phi_b = z_b)
  // Conditional law of the pinned Gaussian at `others` given the block:
  Eigen::VectorXd cond_mean;
  Eigen::MatrixXd cond_chol;      // lower factor of the conditional covariance
  std::vector<double> xub;        // acceptance thresholds for obs-complement coords
  int pin = 0;
  double base_target = 0.0;       // log z_pin - gamma(target, pin)
};

}  // namespace

class BrConditionalSampler::Impl {
 public:
  int K = 0;
  std::vector<BlockData> blocks;               // indexed by subset bitmask
  std::vector<std::vector<int>> partitions_as_masks;
  std::vector<double> weights;                 // normalized partition probabilities
  std::vector<double> cum_weights;
  // Sub-extremal machinery (pinned at the target).
  Eigen::MatrixXd sub_chol;                    // K x K
  std::vector<double> sub_gamma;               // gamma(obs_c, target)
  std::vector<double> log_obs;
};

namespace {

BlockData make_block(const std::vector<int>& members, const std::vector<Vec2>& sites,
                     const std::vector<double>& logz, const Eigen::MatrixXd& G, int K) {
  // sites: obs 0..K-1, target at index K. G = pairwise semivariogram matrix.
  BlockData b;
  b.members = members;
  b.pin = members[0];
  for (int c = 0; c < K; ++c)
    if (std::find(members.begin(), members.end(), c) == members.end()) b.others.push_back(c);
  const int n_comp = static_cast<int>(b.others.size());
  b.others.push_back(K);  // target slot last

  const int pin = b.pin;
  std::vector<int> rest;  // block members beyond the pin
  for (std::size_t i = 1; i < members.size(); ++i) rest.push_back(members[i]);
  const int nb = static_cast<int>(rest.size());
  const int no = static_cast<int>(b.others.size());

  auto cov = [&](int i, int j) { return G(i, pin) + G(j, pin) - G(i, j); };

  Eigen::MatrixXd Sbb(nb, nb), Sob(no, nb), Soo(no, no);
  for (int i = 0; i < nb; ++i)
    for (int j = 0; j < nb; ++j) Sbb(i, j) = cov(rest[i], rest[j]);
  for (int i = 0; i < no; ++i)
    for (int j = 0; j < nb; ++j) Sob(i, j) = cov(b.others[i], rest[j]);
  for (int i = 0; i < no; ++i)
    for (int j = 0; j < no; ++j) Soo(i, j) = cov(b.others[i], b.others[j]);

  Eigen::VectorXd eta(nb);
  for (int i = 0; i < nb; ++i) eta[i] = logz[rest[i]] - logz[pin] + G(rest[i], pin);

  // log lambda_b(z_b)
  b.log_intensity = -2.0 * logz[pin];
  for (int i = 0; i < nb; ++i) b.log_intensity -= logz[rest[i]];
  Eigen::MatrixXd cond_cov;
  if (nb > 0) {
    Eigen::LLT<Eigen::MatrixXd> llt(Sbb);
    if (llt.info() != Eigen::Success)
      throw NumericalError("conditional_sample_br: degenerate covariance within a block");
    const Eigen::VectorXd alpha = llt.solve(eta);
    double logdet = 0.0;
    const Eigen::MatrixXd Lb = llt.matrixL();
    for (int i = 0; i < nb; ++i) logdet += 2.0 * std::log(Lb(i, i));
    b.log_intensity += -0.5 * (nb * kLog2Pi + logdet + eta.dot(alpha));
    b.cond_mean = Sob * alpha;
    cond_cov = Soo - Sob * llt.solve(Sob.transpose());
  } else {
    b.cond_mean = Eigen::VectorXd::Zero(no);
    cond_cov = Soo;
  }
  cond_cov = 0.5 * (cond_cov + cond_cov.transpose());

  // Acceptance thresholds in the pinned-Gaussian coordinates.
  b.xub.resize(n_comp);
  for (int i = 0; i < n_comp; ++i)
    b.xub[i] = logz[b.others[i]] - logz[pin] + G(b.others[i], pin);

  // P(phi < z on the obs complement | block values).
  if (n_comp > 0) {
    Eigen::VectorXd ub(n_comp);
    for (int i = 0; i < n_comp; ++i) ub[i] = b.xub[i] - b.cond_mean[i];
    const Eigen::MatrixXd cc = cond_cov.topLeftCorner(n_comp, n_comp);
    const double p = mvn_cdf(ub, cc);
    b.log_below = p > 0.0 ? std::log(p) : -std::numeric_limits<double>::infinity();
  }

  // Factor for sampling the joint conditional at others (incl. target).
  Eigen::LLT<Eigen::MatrixXd> llt(cond_cov);
  if (llt.info() != Eigen::Success) {
    // Small negative eigenvalues can appear through cancellation; retry
    // with a tiny ridge before giving up.
    Eigen::MatrixXd jit = cond_cov + 1e-12 * Eigen::MatrixXd::Identity(no, no);
    Eigen::LLT<Eigen::MatrixXd> llt2(jit);
    if (llt2.info() != Eigen::Success)
      throw NumericalError("conditional_sample_br: degenerate conditional covariance");
    b.cond_chol = llt2.matrixL();
  } else {
    b.cond_chol = llt.matrixL();
  }
  b.base_target = logz[pin] - G(K, pin);
  return b;
}

}  // namespace

BrConditionalSampler::BrConditionalSampler(const std::vector<Vec2>& obs_sites,
                                           const std::vector<double>& obs_values,
                                           const Vec2& target, const Semivariogram& sv)
    : impl_(std::make_unique<Impl>()) {
  const int K = static_cast<int>(obs_sites.size());
  if (K < 1) throw ValidationError("conditional_sample_br: need at least one conditioning site");
  if (K > 6) throw ValidationError("conditional_sample_br: too many conditioning sites (max 6)");
  if (obs_values.size() != obs_sites.size())
    throw ValidationError("conditional_sample_br: site/value length mismatch");
  for (double z : obs_values)
    if (!(z > 0.0)) throw ValidationError("conditional_sample_br: observed values must be positive");
  for (int i = 0; i < K; ++i) {
    if ((obs_sites[i] - target).norm() == 0.0)
      throw ValidationError("conditional_sample_br: target coincides with a conditioning site");
    for (int j = i + 1; j < K; ++j)
      if ((obs_sites[i] - obs_sites[j]).norm() == 0.0)
        throw ValidationError("conditional_sample_br: duplicate conditioning sites");
  }

  impl_->K = K;
  std::vector<Vec2> sites = obs_sites;
  sites.push_back(target);
  Eigen::MatrixXd G(K + 1, K + 1);
  for (int i = 0; i <= K; ++i)
    for (int j = 0; j <= K; ++j) G(i, j) = sv(sites[i] - sites[j]);

  std::vector<double> logz(K);
  for (int i = 0; i < K; ++i) logz[i] = std::log(obs_values[i]);
  impl_->log_obs = logz;

  // One BlockData per nonempty subset of the conditioning points.
  impl_->blocks.resize(std::size_t{1} << K);
  std::vector<char> have(std::size_t{1} << K, 0);
  const auto parts = set_partitions(K);
  std::vector<double> logw(parts.size(), 0.0);
  impl_->partitions_as_masks.resize(parts.size());
  for (std::size_t p = 0; p < parts.size(); ++p) {
    for (const auto& blk : parts[p]) {
      int mask = 0;
      for (int i : blk) mask |= 1 << i;
      if (!have[mask]) {
        impl_->blocks[mask] = make_block(blk, sites, logz, G, K);
        have[mask] = 1;
      }
      impl_->partitions_as_masks[p].push_back(mask);
      logw[p] += impl_->blocks[mask].log_intensity + impl_->blocks[mask].log_below;
    }
  }
  const double wmax = *std::max_element(logw.begin(), logw.end());
  if (!std::isfinite(wmax))
    throw NumericalError("conditional_sample_br: all hitting scenarios have zero weight");
  impl_->weights.resize(parts.size());
  double tot = 0.0;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    impl_->weights[p] = std::exp(logw[p] - wmax);
    tot += impl_->weights[p];
  }
  impl_->cum_weights.resize(parts.size());
  double run = 0.0;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    impl_->weights[p] /= tot;
    run += impl_->weights[p];
    impl_->cum_weights[p] = run;
  }

  // Pinned-at-target covariance for the sub-extremal component.
  Eigen::MatrixXd S(K, K);
  for (int i = 0; i < K; ++i)
    for (int j = 0; j < K; ++j) S(i, j) = G(i, K) + G(j, K) - G(i, j);
  Eigen::LLT<Eigen::MatrixXd> llt(S);
  if (llt.info() != Eigen::Success)
    throw NumericalError("conditional_sample_br: degenerate covariance at the target");
  impl_->sub_chol = llt.matrixL();
  impl_->sub_gamma.resize(K);
  for (int i = 0; i < K; ++i) impl_->sub_gamma[i] = G(i, K);
}

BrConditionalSampler::~BrConditionalSampler() = default;
BrConditionalSampler::BrConditionalSampler(BrConditionalSampler&&) noexcept = default;

const std::vector<double>& BrConditionalSampler::partition_weights() const {
  return impl_->weights;
}

double BrConditionalSampler::sample(RngStream& rng) const {
  const Impl& s = *impl_;
  // Hitting scenario.
  const double u = rng.uniform();
  std::size_t pick = std::lower_bound(s.cum_weights.begin(), s.cum_weights.end(), u) -
                     s.cum_weights.begin();
  if (pick >= s.cum_weights.size()) pick = s.cum_weights.size() - 1;

  double log_zplus = -std::numeric_limits<double>::infinity();
  for (int mask : s.partitions_as_masks[pick]) {
    const BlockData& b = s.blocks[mask];
    const int no = static_cast<int>(b.others.size());
    const int n_comp = no - 1;
    Eigen::VectorXd g(no), x(no);
    for (int tries = 0;; ++tries) {
      if (tries > 2000000) throw NumericalError("conditional_sample_br: block rejection stalled");
      for (int i = 0; i < no; ++i) g[i] = rng.normal();
      x = b.cond_mean + b.cond_chol * g;
      bool ok = true;
      for (int i = 0; i < n_comp; ++i)
        if (x[i] >= b.xub[i]) {
          ok = false;
          break;
        }
      if (ok) break;
    }
    const double lp = b.base_target + x[no - 1];
    if (lp > log_zplus) log_zplus = lp;
  }

  // Sub-extremal part: largest thinned spectral function at the target.
  const int K = s.K;
  double zeta = rng.exponential();
  Eigen::VectorXd g(K), x(K);
  for (int tries = 0;; ++tries) {
    if (tries > 2000000) throw NumericalError("conditional_sample_br: sub-extremal loop stalled");
    const double v = -std::log(zeta);
    if (v <= log_zplus) break;  // cannot change the maximum
    for (int i = 0; i < K; ++i) g[i] = rng.normal();
    x = s.sub_chol * g;
    bool ok = true;
    for (int i = 0; i < K; ++i)
      if (v + x[i] - s.sub_gamma[i] >= s.log_obs[i]) {
        ok = false;
        break;
      }
    if (ok) {
      if (v > log_zplus) log_zplus = v;
      break;
    }
    zeta += rng.exponential();
  }
  return std::exp(log_zplus);
}

std::vector<double> conditional_sample_br(const std::vector<std::pair<Vec2, double>>& obs,
                                          const Vec2& target, const Semivariogram& sv,
                                          std::uint64_t seed, int n) {
  std::vector<Vec2> sites;
  std::vector<double> values;
  for (const auto& [site, value] : obs) {
    sites.push_back(site);
    values.push_back(value);
  }
  BrConditionalSampler sampler(sites, values, target, sv);
  RngStream rng(seed, 0);
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) out[i] = sampler.sample(rng);
  return out;
}

}  // namespace stms
