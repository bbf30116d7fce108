#include "pimspec/hwmodel.hpp"
#include "pimspec/nmc.hpp"
#include "pimspec/scheduler.hpp"
#include "pimspec/simloop.hpp"

#include <benchmark/benchmark.h>

using namespace pimspec;

static void BM_EstimateIteration(benchmark::State& state) {
    const auto model = build_model_spec("llama2-7b");
    const SystemConfig sys;
    const auto l = state.range(0);
    const auto ops = decode_op_graph(model, KVState{256}, l);
    for (auto _ : state)
        benchmark::DoNotOptimize(estimate_iteration(ops, sys, sys.pim, Placement::CoProcess, 0.9, l));
}
BENCHMARK(BM_EstimateIteration)->Arg(1)->Arg(8)->Arg(32);

static void BM_ExploreTree(benchmark::State& state) {
    const auto model = build_model_spec("llama2-7b");
    const SystemConfig sys;
    const auto stats = HeadStats::prior(4, 3);
    CostEstimator hw = [&](std::int64_t n) {
        const auto l = std::max<std::int64_t>(1, n);
        auto ops = decode_op_graph(model, KVState{256}, l);
        auto e = estimate_iteration(ops, sys, sys.pim, Placement::CoProcess, 0.9, l);
        return IterationCost{e.latency.t_total, e.energy.e_total()};
    };
    for (auto _ : state)
        benchmark::DoNotOptimize(explore_tree(stats, hw, Objective{ObjectiveMode::Throughput, state.range(0)}));
}
BENCHMARK(BM_ExploreTree)->Arg(8)->Arg(32);

static void BM_CopyWrite(benchmark::State& state) {
    const TimingParams t;
    for (auto _ : state) {
        NearMemoryController ctl(t);
        ctl.read_stream(RankKind::Dram, 0, 0, 16 * 1024, 0, BusOwner::NpuDram);
        benchmark::DoNotOptimize(ctl.copy_write({RankKind::Dram, 1, 0}, {RankKind::Pim, 0, 0},
                                                static_cast<std::uint64_t>(state.range(0)), 0));
    }
    state.SetBytesProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_CopyWrite)->Arg(4096)->Arg(32768);

static void BM_RunDecode(benchmark::State& state) {
    SimContext ctx;
    ctx.model = build_model_spec("llama2-7b");
    RunConfig rc;
    rc.mode = static_cast<Mode>(state.range(0));
    rc.l_out = 256;
    rc.fixed_l_spec = 16;
    for (auto _ : state) benchmark::DoNotOptimize(run_decode(rc, ctx));
}
BENCHMARK(BM_RunDecode)
    ->Arg(static_cast<int>(Mode::NpuSi))
    ->Arg(static_cast<int>(Mode::LpSpecCoproc))
    ->Arg(static_cast<int>(Mode::LpSpecCoprocSched))
    ->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
