#include <benchmark/benchmark.h>

#include "zeroloss/constructor.hpp"
#include "zeroloss/descent.hpp"
#include "zeroloss/jacobian.hpp"
#include "zeroloss/linalg.hpp"
#include "zeroloss/network.hpp"

namespace {

using namespace zeroloss;

void BM_Bvtp(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const Matrix a = gaussian_matrix(n, 8, 1);
    const Matrix b = gaussian_matrix(n, 12, 2);
    for (auto _ : state) benchmark::DoNotOptimize(bvtp(a, b));
}
BENCHMARK(BM_Bvtp)->Arg(8)->Arg(64)->Arg(256);

void BM_NumericalRank(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const Matrix a = gaussian_matrix(n, 2 * n, 3);
    for (auto _ : state) benchmark::DoNotOptimize(numerical_rank(a));
}
BENCHMARK(BM_NumericalRank)->Arg(8)->Arg(32)->Arg(128);

void BM_JacobianAnalytic(benchmark::State& state) {
    const auto depth = static_cast<std::size_t>(state.range(0));
    std::vector<std::size_t> dims(depth + 2, 16);
    dims.back() = 2;
    const NetworkSpec spec(dims, Activation::tanh());
    const TrainingSet ts = generate_generic_data(16, 10, 2, 5);
    const NetworkParams p = initial_params(spec, GaussianInit{}, 7);
    for (auto _ : state) benchmark::DoNotOptimize(jacobian_matrix(spec, p, ts.x0));
}
BENCHMARK(BM_JacobianAnalytic)->Arg(1)->Arg(2)->Arg(4);

void BM_PositiveSector(benchmark::State& state) {
    const auto depth = static_cast<std::size_t>(state.range(0));
    std::vector<std::size_t> dims(depth + 2, 12);
    dims.back() = 3;
    const NetworkSpec spec(dims, Activation::softplus());
    const TrainingSet ts = generate_generic_data(12, 8, 3, 11);
    for (auto _ : state) benchmark::DoNotOptimize(construct_positive_sector(spec, ts));
}
BENCHMARK(BM_PositiveSector)->Arg(1)->Arg(3);

void BM_GradCost(benchmark::State& state) {
    const NetworkSpec spec({8, 8, 8, 1}, Activation::mollified_relu(0.01));
    const TrainingSet ts = generate_generic_data(8, 5, 1, 1);
    const NetworkParams p = initial_params(spec, GaussianInit{}, 3);
    for (auto _ : state) benchmark::DoNotOptimize(grad_cost(spec, p, ts));
}
BENCHMARK(BM_GradCost);

}  // namespace
BENCHMARK_MAIN();
