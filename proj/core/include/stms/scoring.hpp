#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "stms/gev.hpp"
#include "stms/grid.hpp"
#include "stms/maxar.hpp"

namespace stms {

// Continuous ranked probability score of an ensemble against one
// observation, via the closed form
//   mean|x_i - obs| - (1/2N^2) sum_ij |x_i - x_j|.
double crps(std::span<const double> ensemble, double obs);

struct VerificationEvent {
  int site = 0;
  int t = 0;                     // target time
  double observed = 0.0;         // Gumbel scale
  std::vector<double> ensemble;  // Gumbel scale
};

double rmse_of_mean(const std::vector<VerificationEvent>& events);
double mean_crps(const std::vector<VerificationEvent>& events);

// Rank of obs within the ensemble with ties broken by u ~ U(0,1).
// The pair law has an atom, and its location is reproduced only to
// rounding across code paths, so values within rel_tol count as tied.
int pit_rank(std::span<const double> ensemble, double obs, double u, double rel_tol = 1e-11);

struct ScoreRow {
  int lead = 0;
  double mean_crps = 0.0;
  double rmse = 0.0;
  int n_events = 0;
  int n_excluded = 0;
};

struct ProtocolOptions {
  std::vector<int> leads{1, 2, 3, 4, 5, 6, 7};
  int n_events = 2000;
  int ensemble_size = 500;
  std::uint64_t seed = 1;
  bool gumbel_scale = true;  // scores on log Z, as reported
};

// Evaluation protocol: a fixed set of target (site, t) events is drawn
// once (same seed for every lead); for each lead u the forecast is built
// from the field at t-u and scored. Targets whose advected source falls
// off the grid are excluded and counted. events_out, when given, receives
// the scored events per lead (for obs-vs-forecast scatter exports).
std::vector<ScoreRow> evaluate_protocol(
    const SpaceTimeField& field, const ModelParams& params, const ProtocolOptions& opt,
    std::vector<std::pair<int, VerificationEvent>>* events_out = nullptr);

std::string score_table_to_csv(const std::vector<ScoreRow>& rows);

}  // namespace stms
