#include <benchmark/benchmark.h>

#include <vector>

#include "stms/brown_resnick.hpp"
#include "stms/maxar.hpp"
#include "stms/rng.hpp"

namespace {

// One exact Brown-Resnick draw on an n x 20 lattice strip, the shape the
// space-time simulator works with.
void BM_BrStripDraw(benchmark::State& state) {
  const int nx = static_cast<int>(state.range(0));
  std::vector<std::pair<int, int>> sites;
  for (int y = 0; y < 20; ++y)
    for (int x = 0; x < nx; ++x) sites.push_back({x, 2 * y});
  stms::BrFieldSimulator sim(sites, 1.0, stms::Semivariogram{2.0, 0.6});
  stms::RngStream rng(1, 0);
  std::vector<double> out(sites.size());
  for (auto _ : state) {
    sim.draw_log(rng, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * sites.size());
}
BENCHMARK(BM_BrStripDraw)->Arg(30)->Arg(60)->Arg(120)->Arg(240)->Unit(benchmark::kMillisecond);

void BM_NormalDraws(benchmark::State& state) {
  stms::RngStream rng(2, 0);
  double acc = 0.0;
  for (auto _ : state) {
    for (int i = 0; i < 1024; ++i) acc += rng.normal();
    benchmark::DoNotOptimize(acc);
  }
  state.SetItemsProcessed(state.iterations() * 1024);
}
BENCHMARK(BM_NormalDraws);

void BM_SimulateSt(benchmark::State& state) {
  stms::SpatialGrid g;
  g.mesh = 1.0;
  g.m1 = 10;
  g.m2 = 10;
  const stms::ModelParams p{stms::Semivariogram{1.5, 0.6}, {1.0, 0.0}, 0.8};
  const int T = static_cast<int>(state.range(0));
  std::uint64_t seed = 1;
  for (auto _ : state) {
    const stms::SpaceTimeField f = stms::simulate_st(g, T, p, seed++);
    benchmark::DoNotOptimize(f.values().data());
  }
  state.SetItemsProcessed(state.iterations() * g.n_sites() * T);
}
BENCHMARK(BM_SimulateSt)->Arg(40)->Arg(80)->Unit(benchmark::kMillisecond);

}  // namespace
