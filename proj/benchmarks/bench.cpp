#include <benchmark/benchmark.h>

#include <cmath>

#include "r3bp/flow.hpp"
#include "r3bp/manifolds.hpp"
#include "r3bp/melnikov.hpp"
#include "r3bp/orbits.hpp"

namespace {

// Shared setup: the reference orbit and its homoclinic data, computed once.
struct Setup {
    r3bp::SystemParams params;
    r3bp::QuadratureConfig quad;
    r3bp::LyapunovOrbit orbit;
    r3bp::MonodromyData mono;
    std::vector<r3bp::HomoclinicPoint> points;

    static const Setup& get() {
        static const Setup s = [] {
            Setup out;
            r3bp::CorrectorConfig cc;
            r3bp::HomoclinicSearchConfig hc;
            out.orbit = r3bp::solve_lyapunov_auto(-0.95, out.params, cc);
            out.mono = r3bp::monodromy(out.orbit, out.params, out.quad.flow);
            out.points =
                r3bp::find_symmetric_homoclinics(out.orbit, out.mono, out.params, hc);
            return out;
        }();
        return s;
    }
};

void BM_FlowOnePeriod(benchmark::State& state) {
    const auto& s = Setup::get();
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            r3bp::flow(s.orbit.seed(), s.orbit.period, s.params, s.quad.flow));
    }
}
BENCHMARK(BM_FlowOnePeriod)->Unit(benchmark::kMicrosecond);

void BM_VariationalFlowOnePeriod(benchmark::State& state) {
    const auto& s = Setup::get();
    for (auto _ : state) {
        benchmark::DoNotOptimize(r3bp::flow_with_variational(s.orbit.seed(), s.orbit.period,
                                                             s.params, s.quad.flow));
    }
}
BENCHMARK(BM_VariationalFlowOnePeriod)->Unit(benchmark::kMicrosecond);

void BM_CorrectorSolve(benchmark::State& state) {
    const auto& s = Setup::get();
    r3bp::CorrectorConfig cc;
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            r3bp::solve_lyapunov(-0.95, s.orbit.kappa + 1e-5, s.params, cc));
    }
}
BENCHMARK(BM_CorrectorSolve)->Unit(benchmark::kMillisecond);

void BM_DerivativeSample(benchmark::State& state) {
    const auto& s = Setup::get();
    const auto channels = r3bp::standard_channels();
    const auto& ch = channels[static_cast<std::size_t>(state.range(0))];
    const r3bp::HomoclinicPoint* hp = nullptr;
    for (const auto& p : s.points)
        if (p.branch == ch.branch_i) hp = &p;
    const double theta = 2.0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(r3bp::dS_dtheta(s.orbit, s.mono, *hp, ch, theta, 0.0,
                                                 s.params, s.quad));
    }
}
BENCHMARK(BM_DerivativeSample)->DenseRange(0, 3)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
