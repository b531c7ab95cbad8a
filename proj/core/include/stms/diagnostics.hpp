#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "stms/grid.hpp"
#include "stms/maxar.hpp"

namespace stms {

// Empirical distribution of the ratio field
// chi_{h,u}(s,t) = (Z(s+h,t+u)/Z(s,t))^(1/u) over all admissible (s,t).
struct RatioFieldCdf {
  Vec2 h;
  int u = 1;
  std::vector<double> sorted_values;

  double cdf(double z) const;
};

RatioFieldCdf ratio_field_cdf(const SpaceTimeField& field, std::pair<int, int> lag, int u);

struct AtomEstimate {
  double location = 0.0;
  double mass = 0.0;
};

// Largest single-point jump of the empirical CDF above `threshold`;
// a detected atom near location a with tau ~ h/u signals a degenerate
// design pair ahead of likelihood fitting.
std::optional<AtomEstimate> detect_atom(const RatioFieldCdf& cdf, double threshold = 0.05);

struct FmadogramPoint {
  double distance = 0.0;
  double theta = 0.0;
  bool clipped = false;
};

// Pairwise extremal coefficient estimates from the F-madogram on a
// Frechet-scale field, one entry per site pair (site order row-major).
std::vector<FmadogramPoint> fmadogram_theta(const SpaceTimeField& field,
                                            const std::vector<std::pair<int, int>>& site_pairs);

// Distance-binned version over all pairs (bins of width `bin_width`).
std::vector<FmadogramPoint> fmadogram_binned(const SpaceTimeField& field, double bin_width);

struct CrossCorrEstimate {
  double mean = 0.0;
  double q025 = 0.0;
  double q975 = 0.0;
  int n_sites = 0;
};

// Average of per-site lag-(h,u) correlation estimates of log Z with the
// Gumbel variance normalization, plus 2.5%/97.5% quantiles of the set.
CrossCorrEstimate empirical_crosscorr(const SpaceTimeField& field, std::pair<int, int> lag, int u);

}  // namespace stms
