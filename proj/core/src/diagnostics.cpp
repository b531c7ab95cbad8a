#include "stms/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "stms/errors.hpp"
#include "stms/stats.hpp"

namespace stms {

double RatioFieldCdf::cdf(double z) const {
  const auto it = std::upper_bound(sorted_values.begin(), sorted_values.end(), z);
  return static_cast<double>(it - sorted_values.begin()) / sorted_values.size();
}

RatioFieldCdf ratio_field_cdf(const SpaceTimeField& field, std::pair<int, int> lag, int u) {
  if (u < 1) throw ValidationError("ratio_field_cdf: u must be >= 1");
  if (field.scale() != Scale::frechet)
    throw ValidationError("ratio_field_cdf: field must be on the Frechet scale");
  const SpatialGrid& g = field.grid();
  const auto [z1, z2] = lag;
  const int i1_lo = std::max(1, 1 - z1), i1_hi = std::min(g.m1, g.m1 - z1);
  const int i2_lo = std::max(1, 1 - z2), i2_hi = std::min(g.m2, g.m2 - z2);
  if (i1_lo > i1_hi || i2_lo > i2_hi || field.T() <= u)
    throw ValidationError("ratio_field_cdf: empty overlap for this lag");

  RatioFieldCdf out;
  out.h = {g.mesh * z1, g.mesh * z2};
  out.u = u;
  const double inv_u = 1.0 / u;
  const int off = z1 + z2 * g.m1;
  for (int t = 1; t + u <= field.T(); ++t) {
    for (int i2 = i2_lo; i2 <= i2_hi; ++i2) {
      for (int i1 = i1_lo; i1 <= i1_hi; ++i1) {
        const int s = g.site_index(i1, i2);
        out.sorted_values.push_back(
            std::pow(field.at(s + off, t + u) / field.at(s, t), inv_u));
      }
    }
  }
  std::sort(out.sorted_values.begin(), out.sorted_values.end());
  return out;
}

std::optional<AtomEstimate> detect_atom(const RatioFieldCdf& cdf, double threshold) {
  // Values carrying an atom agree only up to floating-point rounding of
  // the ratio, so runs are coalesced within a relative 1e-9 window.
  const auto& v = cdf.sorted_values;
  const double n = static_cast<double>(v.size());
  std::size_t i = 0;
  AtomEstimate best;
  while (i < v.size()) {
    std::size_t j = i;
    while (j + 1 < v.size() && v[j + 1] <= v[i] + 1e-9 * std::fabs(v[i])) ++j;
    const double mass = (j - i + 1) / n;
    if (mass > best.mass) best = {v[(i + j) / 2], mass};
    i = j + 1;
  }
  if (best.mass >= threshold) return best;
  return std::nullopt;
}

namespace {

double frechet_cdf(double z) { return std::exp(-1.0 / z); }

FmadogramPoint theta_from_series(const SpaceTimeField& field, int s1, int s2) {
  double acc = 0.0;
  for (int t = 1; t <= field.T(); ++t)
    acc += std::fabs(frechet_cdf(field.at(s1, t)) - frechet_cdf(field.at(s2, t)));
  const double nu = 0.5 * acc / field.T();
  FmadogramPoint p;
  p.distance = (field.grid().site(s1) - field.grid().site(s2)).norm();
  if (nu >= 0.5) {
    p.theta = 2.0;
    p.clipped = true;
  } else {
    p.theta = (1.0 + 2.0 * nu) / (1.0 - 2.0 * nu);
    if (p.theta > 2.0) {
      p.theta = 2.0;
      p.clipped = true;
    }
  }
  return p;
}

}  // namespace

std::vector<FmadogramPoint> fmadogram_theta(const SpaceTimeField& field,
                                            const std::vector<std::pair<int, int>>& site_pairs) {
  if (field.scale() != Scale::frechet)
    throw ValidationError("fmadogram_theta: field must be on the Frechet scale");
  std::vector<FmadogramPoint> out;
  out.reserve(site_pairs.size());
  for (const auto& [s1, s2] : site_pairs) out.push_back(theta_from_series(field, s1, s2));
  return out;
}

std::vector<FmadogramPoint> fmadogram_binned(const SpaceTimeField& field, double bin_width) {
  if (bin_width <= 0.0) throw ValidationError("fmadogram_binned: bin width must be positive");
  if (field.scale() != Scale::frechet)
    throw ValidationError("fmadogram_binned: field must be on the Frechet scale");
  const int n = field.grid().n_sites();
  std::map<long long, std::pair<double, long long>> bins;  // bin -> (sum theta, count)
  for (int s1 = 0; s1 < n; ++s1) {
    for (int s2 = s1 + 1; s2 < n; ++s2) {
      const FmadogramPoint p = theta_from_series(field, s1, s2);
      const long long b = static_cast<long long>(std::floor(p.distance / bin_width));
      auto& acc = bins[b];
      acc.first += p.theta;
      acc.second += 1;
    }
  }
  std::vector<FmadogramPoint> out;
  for (const auto& [b, acc] : bins) {
    FmadogramPoint p;
    p.distance = (b + 0.5) * bin_width;
    p.theta = acc.first / acc.second;
    out.push_back(p);
  }
  return out;
}

CrossCorrEstimate empirical_crosscorr(const SpaceTimeField& field, std::pair<int, int> lag,
                                      int u) {
  if (u < 0) throw ValidationError("empirical_crosscorr: u must be >= 0");
  if (field.scale() != Scale::frechet)
    throw ValidationError("empirical_crosscorr: field must be on the Frechet scale");
  const SpatialGrid& g = field.grid();
  const int T = field.T();
  if (T - u < 2) throw ValidationError("empirical_crosscorr: too few time steps for this lag");
  const auto [z1, z2] = lag;
  const int i1_lo = std::max(1, 1 - z1), i1_hi = std::min(g.m1, g.m1 - z1);
  const int i2_lo = std::max(1, 1 - z2), i2_hi = std::min(g.m2, g.m2 - z2);

  // Per-site means of log Z over the full record.
  std::vector<double> mu(g.n_sites(), 0.0);
  for (int t = 1; t <= T; ++t)
    for (int s = 0; s < g.n_sites(); ++s) mu[s] += std::log(field.at(s, t));
  for (double& m : mu) m /= T;

  const double norm = 6.0 / (9.8696044010893586188344909998762 * (T - u));
  const int off = z1 + z2 * g.m1;
  std::vector<double> rhos;
  for (int i2 = i2_lo; i2 <= i2_hi; ++i2) {
    for (int i1 = i1_lo; i1 <= i1_hi; ++i1) {
      const int s = g.site_index(i1, i2);
      double acc = 0.0;
      for (int t = 1; t + u <= T; ++t)
        acc += (std::log(field.at(s, t)) - mu[s]) * (std::log(field.at(s + off, t + u)) - mu[s + off]);
      rhos.push_back(norm * acc);
    }
  }
  if (rhos.size() < 3)
    throw ValidationError("empirical_crosscorr: fewer than 3 admissible sites for this lag");
  CrossCorrEstimate out;
  out.n_sites = static_cast<int>(rhos.size());
  out.mean = mean(rhos);
  out.q025 = quantile(rhos, 0.025);
  out.q975 = quantile(rhos, 0.975);
  return out;
}

}  // namespace stms
