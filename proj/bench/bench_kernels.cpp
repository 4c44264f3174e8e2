#include <benchmark/benchmark.h>

#include "fsoqos/atmos.hpp"
#include "fsoqos/kernels.hpp"
#include "fsoqos/rng.hpp"

using namespace fsoqos;

namespace {

Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed)
{
    Rng rng(seed);
    Matrix x(rows, cols);
    for (double& v : x.data()) v = rng.normal();
    return x;
}

Matrix centered(std::size_t n, std::size_t m)
{
    Matrix x = random_matrix(n, m, 1);
    for (std::size_t r = 0; r < n; ++r) {
        double mean = 0.0;
        for (double v : x.row(r)) mean += v;
        mean /= static_cast<double>(m);
        for (double& v : x.row(r)) v -= mean;
    }
    return x;
}

template <Matrix (*Kernel)(const Matrix&)>
void covariance(benchmark::State& state)
{
    const auto x = centered(static_cast<std::size_t>(state.range(0)), static_cast<std::size_t>(state.range(1)));
    for (auto _ : state) benchmark::DoNotOptimize(Kernel(x));
    state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(0) * state.range(1));
}

template <kernels::LossAndGradients (*Kernel)(const mlp::MlpNetwork&, const mlp::Batch&)>
void gradients(benchmark::State& state)
{
    const auto samples = static_cast<std::size_t>(state.range(0));
    const auto inputs = static_cast<std::size_t>(state.range(1));
    const auto net = mlp::init_network({inputs, 10, 1}, 3);
    const mlp::Batch batch{random_matrix(samples, inputs, 2), random_matrix(samples, 1, 4)};
    for (auto _ : state) benchmark::DoNotOptimize(Kernel(net, batch));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void attenuation_sweep(benchmark::State& state)
{
    const auto vis = atmos::linspace(0.05, 50.0, static_cast<int>(state.range(0)));
    const std::vector<double> wavelengths{760.0, 860.0, 960.0, 1260.0, 1550.0};
    for (auto _ : state)
        benchmark::DoNotOptimize(atmos::attenuation_sweep(vis, wavelengths, atmos::SizeModel::Kim));
    state.SetItemsProcessed(state.iterations() * state.range(0) * 5);
}

} // namespace

BENCHMARK(covariance<kernels::covariance_serial>)->Name("covariance/serial")->Args({9, 1400})->Args({64, 20000});
BENCHMARK(covariance<kernels::covariance_parallel>)->Name("covariance/parallel")->Args({9, 1400})->Args({64, 20000});
BENCHMARK(gradients<kernels::loss_and_gradients_serial>)->Name("gradients/serial")->Args({1400, 1})->Args({50000, 9});
BENCHMARK(gradients<kernels::loss_and_gradients_parallel>)->Name("gradients/parallel")->Args({1400, 1})->Args({50000, 9});
BENCHMARK(attenuation_sweep)->Arg(1000)->Arg(100000);

BENCHMARK_MAIN();
