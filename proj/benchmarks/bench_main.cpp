#include <benchmark/benchmark.h>

#include <vector>

#include "tsci/forest.hpp"
#include "tsci/sim.hpp"
#include "tsci/strength.hpp"
#include "tsci/violation.hpp"

using namespace tsci;

namespace {

struct Fixture {
  SimData sim;
  SplitIndex split;
  Matrix cov;
  CovariateBasis w;

  explicit Fixture(Index n) {
    SimConfig cfg;
    cfg.n = n;
    sim = generate(cfg, 1);
    split = split_sample(n, 2);
    cov = sim.data.covariates();
    w = build_w(sim.data.x(), WMode{});
  }

  Forest forest(int trees) const {
    ForestParams p;
    p.num_trees = trees;
    p.seed = 3;
    return fit_forest(take_rows(cov, split.a2), take_rows(sim.data.d(), split.a2), p);
  }
};

void BM_ForestFit(benchmark::State& state) {
  const Fixture fx(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(fx.forest(50));
}
BENCHMARK(BM_ForestFit)->Arg(1000)->Arg(3000)->Unit(benchmark::kMillisecond);

void BM_ForestWeights(benchmark::State& state) {
  const Fixture fx(state.range(0));
  const Forest f = fx.forest(200);
  const Matrix a1 = take_rows(fx.cov, fx.split.a1);
  for (auto _ : state) benchmark::DoNotOptimize(forest_weights(f, a1));
}
BENCHMARK(BM_ForestWeights)->Arg(1000)->Arg(3000)->Unit(benchmark::kMillisecond);

void BM_TransformChain(benchmark::State& state) {
  const Fixture fx(state.range(0));
  const WeightMatrix om = forest_weights(fx.forest(100), take_rows(fx.cov, fx.split.a1));
  const Matrix w_a1 = take_rows(fx.w.w, fx.split.a1);
  std::vector<Matrix> v_a1;
  for (int q = 0; q <= 3; ++q)
    v_a1.push_back(take_rows(polynomial_violation_basis(fx.sim.data.z(), q).v, fx.split.a1));
  for (auto _ : state) {
    const TransformBuilder builder(om);
    for (const Matrix& v : v_a1) benchmark::DoNotOptimize(builder.build(v, w_a1));
  }
}
BENCHMARK(BM_TransformChain)->Arg(1000)->Arg(3000)->Unit(benchmark::kMillisecond);

void BM_StrengthBootstrap(benchmark::State& state) {
  const Fixture fx(state.range(0));
  const WeightMatrix om = forest_weights(fx.forest(100), take_rows(fx.cov, fx.split.a1));
  const Vector d = take_rows(fx.sim.data.d(), fx.split.a1);
  const Vector f_hat = om.predict(d);
  const TransformMatrix tm = transform_matrix(om, polynomial_violation_basis(fx.sim.data.z(), 1), fx.w, fx.split);
  for (auto _ : state) {
    const StrengthBootstrap boot(om, d, f_hat, 300, 4);
    benchmark::DoNotOptimize(boot.quantile(tm, 0.025));
  }
}
BENCHMARK(BM_StrengthBootstrap)->Arg(1000)->Arg(3000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
