// Serial reference vs OpenMP kernels.

#include <benchmark/benchmark.h>

#include "chaomask/kernels.hpp"
#include "chaomask/synthesis.hpp"

using namespace chaomask;

namespace {

Matrix aircraft_A()
{
    Matrix a(4, 4);
    a << -0.5717, 0, 1.005, -0.0006, 0, 0, 1, 0, -0.1049, 0, -0.6803, 0.0002, -4.6726, -9.7942, -0.1463, -0.0062;
    return a;
}

const ExtendedSystem& extended()
{
    static const ExtendedSystem e = [] {
        Matrix b(4, 3), c(2, 4), lambda(2, 3);
        b << 0, 0, 0, 0, 0, 0, -1.5539, 0.0154, -0.1556, 0, 1.3287, 0.2;
        c << 1, 0, 0, 1, 0, 0, 1, 1;
        lambda << 1, 0, 0, 0, 2, 1;
        ChaoticMask m = scale_mask(rossler_p4(0.5, 0.5), 100.0);
        m.Lambda = lambda;
        m = populate_mask(m, (Vector(3) << 0.1, 0.3, 0.0).finished());
        return build_extended(LtiPlant(aircraft_A(), b, c), m);
    }();
    return e;
}

std::vector<double> grid(std::size_t n)
{
    std::vector<double> w(n);
    for (std::size_t k = 0; k < n; ++k)
        w[k] = 0.01 * static_cast<double>(k);
    return w;
}

void BM_SigmaProfileSerial(benchmark::State& st)
{
    const auto w = grid(static_cast<std::size_t>(st.range(0)));
    for (auto _ : st)
        benchmark::DoNotOptimize(kernels::sigma_min_profile_serial(extended().A, extended().C, w));
}

void BM_SigmaProfileParallel(benchmark::State& st)
{
    const auto w = grid(static_cast<std::size_t>(st.range(0)));
    for (auto _ : st)
        benchmark::DoNotOptimize(kernels::sigma_min_profile(extended().A, extended().C, w));
}

void BM_JacobianSupSerial(benchmark::State& st)
{
    const auto& m = extended().mask;
    for (auto _ : st)
        benchmark::DoNotOptimize(kernels::max_jacobian_norm_serial(m.phi, *m.sigma, static_cast<int>(st.range(0))));
}

void BM_JacobianSupParallel(benchmark::State& st)
{
    const auto& m = extended().mask;
    for (auto _ : st)
        benchmark::DoNotOptimize(kernels::max_jacobian_norm(m.phi, *m.sigma, static_cast<int>(st.range(0))));
}

void BM_SynthesisSerial(benchmark::State& st)
{
    for (auto _ : st)
        benchmark::DoNotOptimize(synthesize_gain(extended(), Execution::Serial));
}

void BM_SynthesisParallel(benchmark::State& st)
{
    for (auto _ : st)
        benchmark::DoNotOptimize(synthesize_gain(extended(), Execution::Parallel));
}

} // namespace

BENCHMARK(BM_SigmaProfileSerial)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SigmaProfileParallel)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_JacobianSupSerial)->Arg(21)->Arg(41)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_JacobianSupParallel)->Arg(21)->Arg(41)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SynthesisSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SynthesisParallel)->Unit(benchmark::kMillisecond);

int main(int argc, char** argv)
{
    extended(); // keep the mask estimation out of the first measurement
    benchmark::Initialize(&argc, argv);
    if (benchmark::ReportUnrecognizedArguments(argc, argv))
        return 1;
    benchmark::RunSpecifiedBenchmarks();
    benchmark::Shutdown();
    return 0;
}
