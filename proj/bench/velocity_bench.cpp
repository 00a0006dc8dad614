#include <nonlocal/particle_kernels.hpp>
#include <nonlocal/velocity.hpp>

#include <benchmark/benchmark.h>

#include <random>

using namespace nonlocal;

namespace {

struct Setup
{
    VelocityModel model;
    MeasureVector rho;
    std::vector<double> points;
};

Setup make_setup(std::size_t n)
{
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> pos(2 * n), w(n, 1.0 / static_cast<double>(n));
    for (double& p : pos) p = u(rng);
    return {pedestrian_field(linear_speed_law(1.0, 2.0), target_direction({3.0, 0.0}, 0.5),
                             kernel_library("cosine-lobe", 2, {0.6, 1.0})),
            MeasureVector({ParticleMeasure(2, pos, w)}), pos};
}

void BM_serial(benchmark::State& state)
{
    const Setup s = make_setup(static_cast<std::size_t>(state.range(0)));
    std::vector<double> out(s.points.size());
    for (auto _ : state) {
        reference::point_velocities(s.model, s.rho, 0, 0.0, s.points, out);
        benchmark::DoNotOptimize(out.data());
    }
    state.SetComplexityN(state.range(0));
}

void BM_openmp(benchmark::State& state)
{
    parallel::apply_worker_limit_from_env();
    const Setup s = make_setup(static_cast<std::size_t>(state.range(0)));
    std::vector<double> out(s.points.size());
    for (auto _ : state) {
        parallel::point_velocities(s.model, s.rho, 0, 0.0, s.points, out);
        benchmark::DoNotOptimize(out.data());
    }
    state.counters["workers"] = parallel::worker_count();
    state.SetComplexityN(state.range(0));
}

}  // namespace

BENCHMARK(BM_serial)->RangeMultiplier(2)->Range(256, 4096)->Complexity(benchmark::oNSquared);
BENCHMARK(BM_openmp)->RangeMultiplier(2)->Range(256, 4096)->Complexity(benchmark::oNSquared);

BENCHMARK_MAIN();
