#include <benchmark/benchmark.h>

#include <vector>

#include "ojaflow/closed_form.hpp"
#include "ojaflow/energy.hpp"
#include "ojaflow/flows.hpp"
#include "ojaflow/integrator.hpp"
#include "ojaflow/online.hpp"
#include "ojaflow/random.hpp"
#include "ojaflow/stable_manifold.hpp"

using namespace ojaflow;

namespace {

SpectralMatrix spectrum(std::size_t n) {
  std::vector<double> l(n);
  for (std::size_t i = 0; i < n; ++i) l[i] = static_cast<double>(n - i);
  return SpectralMatrix::diagonal(l);
}

void BM_SgaField(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  const auto a = spectrum(n);
  const Matrix q = random_orthogonal(n, rng);
  for (auto _ : state) benchmark::DoNotOptimize(fields::sga(a.matrix(), q));
}

void BM_ComponentwiseField(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  const auto a = spectrum(n);
  const Matrix q = random_orthogonal(n, rng);
  for (auto _ : state) benchmark::DoNotOptimize(fields::componentwise(a.matrix(), q));
}

void BM_IntegrateToLimit(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(2);
  const auto a = spectrum(n);
  const auto flow = sga_system(a, WeightVector::defaults(n));
  const Matrix q0 = random_orthogonal(n, rng);
  IntegratorConfig cfg;
  cfg.sample_stride = 1000;
  for (auto _ : state) benchmark::DoNotOptimize(integrate_to_limit(flow, a, q0, cfg).raw);
}

void BM_ClosedForm(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(3);
  const auto a = spectrum(n);
  const StiefelPoint q0(random_orthogonal(n, rng));
  for (auto _ : state) benchmark::DoNotOptimize(closed_form_Q(a, q0, 5.0).matrix());
}

void BM_PredictLimit(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(4);
  const StiefelPoint q0(random_structured_orthogonal(n, rng));
  for (auto _ : state) benchmark::DoNotOptimize(predict_limit(q0).limit);
}

void BM_OnlineSgaStep(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(5);
  const auto a = spectrum(n);
  SampleStream stream(a, 6);
  EstimatorState st{random_orthogonal(n, rng), 0};
  for (auto _ : state) {
    sga_step(st, stream.next(), 1e-4);
    benchmark::DoNotOptimize(st.w);
  }
}

void BM_OnlineGsoStep(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(7);
  const auto a = spectrum(n);
  SampleStream stream(a, 8);
  EstimatorState st{random_stiefel(n, 2, rng), 0};
  for (auto _ : state) {
    gso_step(st, stream.next(), 1e-4);
    benchmark::DoNotOptimize(st.w);
  }
}

}  // namespace

BENCHMARK(BM_SgaField)->Arg(4)->Arg(8)->Arg(16);
BENCHMARK(BM_ComponentwiseField)->Arg(4)->Arg(8)->Arg(16);
BENCHMARK(BM_IntegrateToLimit)->Arg(3)->Arg(6)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ClosedForm)->Arg(4)->Arg(8);
BENCHMARK(BM_PredictLimit)->Arg(4)->Arg(6)->Arg(8);
BENCHMARK(BM_OnlineSgaStep)->Arg(4)->Arg(16);
BENCHMARK(BM_OnlineGsoStep)->Arg(4)->Arg(16);

BENCHMARK_MAIN();
