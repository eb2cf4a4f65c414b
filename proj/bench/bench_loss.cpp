#include "cdpinn/formulations.hpp"
#include "cdpinn/network.hpp"
#include "cdpinn/sampling.hpp"

#include <benchmark/benchmark.h>

#include <vector>

namespace {

using namespace cdpinn;

// Loss + gradient of one method at K uniform points.
void run(benchmark::State& state, Method method, Execution exec, Precision precision)
{
    const int k = static_cast<int>(state.range(0));
    const auto form = Formulation::make(method, ProblemSpec::benchmark(0.1));
    LossEngine engine(form, uniform_rule(k, form.domain_end), Architecture::standard(), precision, exec);
    const auto params = init_params(Architecture::standard(), 0, precision);
    std::vector<double> grad(params.theta.size());
    for (auto _ : state) {
        const auto loss = engine.evaluate(params.theta, grad);
        benchmark::DoNotOptimize(loss.total);
        benchmark::DoNotOptimize(grad.data());
    }
    state.SetItemsProcessed(state.iterations() * k);
}

void BM_Serial_V_f64(benchmark::State& s) { run(s, Method::V, Execution::Serial, Precision::Double); }
void BM_Parallel_V_f64(benchmark::State& s) { run(s, Method::V, Execution::Parallel, Precision::Double); }
void BM_Serial_Wz_f32(benchmark::State& s) { run(s, Method::Wz, Execution::Serial, Precision::Single); }
void BM_Parallel_Wz_f32(benchmark::State& s) { run(s, Method::Wz, Execution::Parallel, Precision::Single); }

BENCHMARK(BM_Serial_V_f64)->RangeMultiplier(10)->Range(100, 10000);
BENCHMARK(BM_Parallel_V_f64)->RangeMultiplier(10)->Range(100, 10000);
BENCHMARK(BM_Serial_Wz_f32)->RangeMultiplier(10)->Range(100, 10000);
BENCHMARK(BM_Parallel_Wz_f32)->RangeMultiplier(10)->Range(100, 10000);

} // namespace

BENCHMARK_MAIN();
