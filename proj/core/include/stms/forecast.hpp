#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "stms/gev.hpp"
#include "stms/grid.hpp"
#include "stms/maxar.hpp"

namespace stms {

enum class Conditioning { grid, simulated, missing };

struct ForecastRequest {
  int target_site = 0;  // index into the grid
  int t0 = 0;           // base time (1..T of the supplying field)
  int lead = 1;         // u >= 1
  int ensemble_size = 1;
  ModelParams params;
};

struct ForecastEnsemble {
  std::vector<double> frechet;  // N draws
  std::vector<double> raw;      // back-transformed; empty if no marginals
  Conditioning conditioning = Conditioning::grid;
  Vec2 source{0.0, 0.0};        // advected source location s0 - u*tau
};

// One-point Markovian forecast from the full field at t0. The advected
// source s0 - u*tau is read off the grid when it lands on a site (within
// 1e-9*mesh) and otherwise simulated conditionally on the 4 vertices of
// the cell containing it. marginals may be null: output stays on the
// Frechet scale.
ForecastEnsemble forecast_point(const ForecastRequest& req, const SpaceTimeField& field,
                                const MarginalModel* marginals, std::uint64_t seed);

struct GridForecast {
  int t0 = 0;
  int lead = 0;
  std::vector<ForecastEnsemble> per_site;  // conditioning == missing when off-domain
  int n_missing = 0;
};

GridForecast forecast_grid(const SpaceTimeField& field, int t0, int lead, int ensemble_size,
                           const ModelParams& params, const MarginalModel* marginals,
                           std::uint64_t seed);

// CSV: i1,i2,t0,u,member,value_frechet,value_raw,conditioned
std::string grid_forecast_to_csv(const GridForecast& f, const SpatialGrid& grid);

}  // namespace stms
