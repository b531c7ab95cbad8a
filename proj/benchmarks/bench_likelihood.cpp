#include <benchmark/benchmark.h>

#include "stms/inference.hpp"
#include "stms/rng.hpp"

namespace {

stms::SpaceTimeField frechet_field(int m, int T) {
  stms::SpatialGrid g;
  g.mesh = 1.0;
  g.m1 = m;
  g.m2 = m;
  stms::SpaceTimeField f(g, T, stms::Scale::frechet);
  stms::RngStream rng(3, 0);
  for (int t = 1; t <= T; ++t)
    for (int s = 0; s < g.n_sites(); ++s) f.at(s, t) = rng.frechet();
  return f;
}

void BM_SpatialPl(benchmark::State& state) {
  const auto f = frechet_field(20, 100);
  const auto mask = stms::build_mask(1.0, state.range(0), 1, true);
  long long terms = stms::count_pairs_spatial(f.grid(), mask, f.T());
  for (auto _ : state) {
    benchmark::DoNotOptimize(stms::spatial_pl(f, mask, 1.5, 0.6));
  }
  state.SetItemsProcessed(state.iterations() * terms);
}
BENCHMARK(BM_SpatialPl)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_SpacetimePl(benchmark::State& state) {
  const auto f = frechet_field(20, 100);
  const auto mask = stms::build_mask(1.0, 1.0, 1, false);
  const stms::PsiEpsilon psi(0.05, mask);
  const stms::ModelParams p{stms::Semivariogram{1.5, 0.6}, {0.45, -0.2}, 0.8};
  long long terms = stms::count_pairs_spacetime(f.grid(), mask, f.T());
  for (auto _ : state) {
    benchmark::DoNotOptimize(stms::spacetime_pl(f, mask, psi, p));
  }
  state.SetItemsProcessed(state.iterations() * terms);
}
BENCHMARK(BM_SpacetimePl)->Arg(0)->Unit(benchmark::kMillisecond);

}  // namespace
