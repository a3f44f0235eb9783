#include <benchmark/benchmark.h>

#include "kubecs/linalg.hpp"
#include "kubecs/pipeline.hpp"
#include "kubecs/rng.hpp"
#include "kubecs/solvers.hpp"
#include "kubecs/synth.hpp"
#include "kubecs/weighting.hpp"

#include <string>

using namespace kubecs;

namespace {

// Three square factors of side n, i.e. an n^3 cube.
void BM_KronApply(benchmark::State& state) {
  const Index n = state.range(0);
  Rng rng(7);
  const KroneckerOperator op({gaussian_sensing(n, n, rng), dct_matrix(n), dct_matrix(n)});
  Vector x(op.input_dim());
  for (Index i = 0; i < x.size(); ++i) x(i) = rng.normal();
  for (auto _ : state) benchmark::DoNotOptimize(op.apply(x));
  state.SetItemsProcessed(state.iterations() * x.size());
}
BENCHMARK(BM_KronApply)->Arg(4)->Arg(8)->Arg(16);

void BM_KronMaterializedApply(benchmark::State& state) {
  const Index n = state.range(0);
  Rng rng(7);
  const KroneckerOperator op({gaussian_sensing(n, n, rng), dct_matrix(n), dct_matrix(n)});
  const Matrix dense = kron_materialize(op);
  Vector x(op.input_dim());
  for (Index i = 0; i < x.size(); ++i) x(i) = rng.normal();
  for (auto _ : state) benchmark::DoNotOptimize(Vector(dense * x));
  state.SetItemsProcessed(state.iterations() * x.size());
}
BENCHMARK(BM_KronMaterializedApply)->Arg(4)->Arg(8);

// One 8x8x8 cube of the synthetic sequence at rate 0.3.
void BM_SolveCube(benchmark::State& state) {
  SensingConfig cfg;
  cfg.variant = static_cast<Variant>(state.range(0));
  cfg.rate = 0.3;
  const SensingOperators ops = build_operators(cfg);
  const ConstraintSystem system(ops.theta);
  const auto cubes = partition_gop(synth_moving_square({}), 8, PadMode::Error);
  const Vector y = ops.phi->apply(cubes[5].data.array() - kPixelOffset);
  const Vector w =
      normalize_max(extend_temporal(perceptual_weights(jpeg_luminance_q(), 8), 8));
  for (auto _ : state) {
    const SolveReport r = weighted_bp(system, y, w);
    state.counters["iterations"] = r.iterations;
  }
  state.SetLabel(std::string(to_string(cfg.variant)));
}
BENCHMARK(BM_SolveCube)
    ->Arg(static_cast<int>(Variant::CsIndependent))
    ->Arg(static_cast<int>(Variant::Kcs))
    ->Arg(static_cast<int>(Variant::Cube3d))
    ->Unit(benchmark::kMillisecond);

void BM_ConstraintSystem(benchmark::State& state) {
  SensingConfig cfg;
  cfg.variant = static_cast<Variant>(state.range(0));
  cfg.rate = 0.3;
  const SensingOperators ops = build_operators(cfg);
  for (auto _ : state) benchmark::DoNotOptimize(ConstraintSystem(ops.theta));
}
BENCHMARK(BM_ConstraintSystem)
    ->Arg(static_cast<int>(Variant::Kcs))
    ->Arg(static_cast<int>(Variant::Cube3d))
    ->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
