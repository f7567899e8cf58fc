#include "lapcert/bvm.hpp"
#include "lapcert/glm.hpp"
#include "lapcert/laplace.hpp"
#include "lapcert/metrics.hpp"
#include "lapcert/pmf.hpp"
#include "lapcert/potential.hpp"
#include "lapcert/tv.hpp"

#include <benchmark/benchmark.h>

using namespace lapcert;

static void BM_TensorOpNorm3(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  const SymmetricKForm T = random_symmetric_3form(d, 1);
  const MetricContext ctx = MetricContext::identity(d);
  for (auto _ : state) benchmark::DoNotOptimize(tensor_op_norm(T, ctx).value);
}
BENCHMARK(BM_TensorOpNorm3)->Arg(2)->Arg(5)->Arg(10)->Arg(20);

static GlmModel logistic_model(int n, int d) {
  const LinkFamily link = make_link("logistic");
  const Vec ts = Vec::Constant(d, 0.2);
  const Design X = gaussian_design(n, d, 3);
  return GlmModel(link, X, ts, glm_sample(link, X, ts, 4));
}

static void BM_GlmNll(benchmark::State& state) {
  const GlmModel m = logistic_model(static_cast<int>(state.range(0)), 5);
  const Vec t = Vec::Constant(5, 0.1);
  for (auto _ : state) benchmark::DoNotOptimize(glm_nll(m, t).value);
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_GlmNll)->Arg(1000)->Arg(10000)->Arg(100000);

static void BM_FindModeLogistic(benchmark::State& state) {
  const GlmModel m = logistic_model(static_cast<int>(state.range(0)), 5);
  const TargetPotential f = m.potential();
  for (auto _ : state) benchmark::DoNotOptimize(find_mode(f, Vec::Zero(5)).mode);
}
BENCHMARK(BM_FindModeLogistic)->Arg(1000)->Arg(10000);

static void BM_TvQuadrature2d(benchmark::State& state) {
  const TargetPotential f = make_cubic_radial(2, 1000.0);
  const LaplaceFit fit = find_mode(f, Vec::Zero(2));
  QuadratureOptions o;
  o.grid = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(tv_quadrature(f, laplace_gaussian(fit), o).value);
}
BENCHMARK(BM_TvQuadrature2d)->Arg(101)->Arg(401);

static void BM_Delta3Empirical(benchmark::State& state) {
  const TargetPotential f = make_ones_cubic(3, 1e5);
  const LaplaceFit fit = find_mode(f, Vec::Zero(3));
  Delta3Options o;
  o.force_empirical = true;
  o.budget = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(estimate_delta3(f, fit, 6.0, o).value);
}
BENCHMARK(BM_Delta3Empirical)->Arg(500)->Arg(2000);

BENCHMARK_MAIN();
