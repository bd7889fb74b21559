#include "qbsde/approx.hpp"
#include "qbsde/lyapunov.hpp"
#include "qbsde/registry.hpp"
#include "qbsde/solver.hpp"
#include "qbsde/spanning.hpp"

#include <benchmark/benchmark.h>

using namespace qbsde;

namespace {

SystemBundle scalar() {
    SystemOptions o;
    o.name = "scalar";
    o.terminal = "tanh";
    return make_system(o);
}

void BM_GridSolve(benchmark::State& st) {
    auto b = scalar();
    GridConfig g;
    g.lo = Vec::Constant(1, -6.0);
    g.hi = Vec::Constant(1, 6.0);
    g.dx = 12.0 / static_cast<double>(st.range(0));
    for (auto _ : st) benchmark::DoNotOptimize(solve_pde_grid(b.spec, b.driver, b.terminal, g));
}
BENCHMARK(BM_GridSolve)->Arg(120)->Arg(240)->Unit(benchmark::kMillisecond);

void BM_Regression(benchmark::State& st) {
    auto b = scalar();
    RegressionConfig r;
    r.n_paths = static_cast<int>(st.range(0));
    r.n_steps = 20;
    for (auto _ : st) benchmark::DoNotOptimize(solve_regression_mc(b.spec, b.driver, b.terminal, r, 7));
}
BENCHMARK(BM_Regression)->Arg(2000)->Arg(8000)->Unit(benchmark::kMillisecond);

void BM_Spanning(benchmark::State& st) {
    const int N = static_cast<int>(st.range(0));
    Mat a(N, 2 * N);
    a << Mat::Identity(N, N), -Mat::Identity(N, N);
    SpanningSet s(a);
    for (auto _ : st) benchmark::DoNotOptimize(positively_spans(s));
}
BENCHMARK(BM_Spanning)->Arg(2)->Arg(4)->Arg(8);

void BM_LyapunovVerify(benchmark::State& st) {
    auto b = scalar();
    double radius = 0.5 * max_lyapunov_radius(b);
    auto pair = bundle_lyapunov(b, radius);
    auto gen = assemble(*b.bf);
    VerifyOptions vo;
    vo.f_k = b.bf->f_k;
    for (auto _ : st)
        benchmark::DoNotOptimize(verify_lyapunov(pair, gen, b.spec, radius, 1, 10000, 1e4, 44, vo));
}
BENCHMARK(BM_LyapunovVerify)->Unit(benchmark::kMillisecond);

void BM_Mollify(benchmark::State& st) {
    const int dim = static_cast<int>(st.range(0));
    MollifierKernel k(8.0, dim);
    Grid g;
    for (int j = 0; j < dim; ++j) g.axes.push_back(Axis{-1.0, 1.0, dim == 1 ? 401 : 101});
    GridFunction f(g, 1);
    for (long i = 0; i < g.size(); ++i) f.set(i, Vec::Constant(1, std::abs(g.point(i)[0])));
    for (auto _ : st) benchmark::DoNotOptimize(mollify(f, k));
}
BENCHMARK(BM_Mollify)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
