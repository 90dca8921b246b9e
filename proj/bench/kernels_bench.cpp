// Serial reference vs OpenMP blocked kernels on synthetic measurement data.
#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "qim/kernels.hpp"

namespace {

using namespace qim::kernels;

struct Fixture {
  std::vector<double> q, y, r, s, dq;
  Denominator den{0.0, 1.0, 0.0, 1.0};  // QIM2, beta = 1

  explicit Fixture(std::size_t m) : q(m), y(m), r(m), s(m), dq(m) {
    std::mt19937_64 gen(7);
    std::normal_distribution<double> normal;
    for (std::size_t k = 0; k < m; ++k) {
      r[k] = normal(gen);
      s[k] = normal(gen);
      q[k] = r[k] * r[k];
      const double a = normal(gen);
      y[k] = a * a;
    }
  }
  Measurements meas() const { return {q, y, {}}; }
  CurvatureInputs curv() const { return {r, s, y, {}, 0.3, 1.0}; }
};

template <class Fn>
void run(benchmark::State& state, Fn fn) {
  Fixture f(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(fn(f));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_LossSerial(benchmark::State& state) {
  run(state, [](const Fixture& f) { return serial::loss_sum(f.den, f.meas(), 1.0); });
}
void BM_LossParallel(benchmark::State& state) {
  run(state, [](const Fixture& f) { return parallel::loss_sum(f.den, f.meas(), 1.0); });
}
void BM_GradientSerial(benchmark::State& state) {
  run(state, [](Fixture& f) {
    return serial::gradient_weights(f.den, f.meas(), 1.0, f.dq).loss;
  });
}
void BM_GradientParallel(benchmark::State& state) {
  run(state, [](Fixture& f) {
    return parallel::gradient_weights(f.den, f.meas(), 1.0, f.dq).loss;
  });
}
void BM_CurvatureSerial(benchmark::State& state) {
  run(state, [](const Fixture& f) { return serial::curvature_sum(f.den, f.curv(), 1.0); });
}
void BM_CurvatureParallel(benchmark::State& state) {
  run(state,
      [](const Fixture& f) { return parallel::curvature_sum(f.den, f.curv(), 1.0); });
}

}  // namespace

BENCHMARK(BM_LossSerial)->RangeMultiplier(8)->Range(1 << 12, 1 << 21);
BENCHMARK(BM_LossParallel)->RangeMultiplier(8)->Range(1 << 12, 1 << 21);
BENCHMARK(BM_GradientSerial)->RangeMultiplier(8)->Range(1 << 12, 1 << 21);
BENCHMARK(BM_GradientParallel)->RangeMultiplier(8)->Range(1 << 12, 1 << 21);
BENCHMARK(BM_CurvatureSerial)->RangeMultiplier(8)->Range(1 << 12, 1 << 21);
BENCHMARK(BM_CurvatureParallel)->RangeMultiplier(8)->Range(1 << 12, 1 << 21);

BENCHMARK_MAIN();
