#include "oracles.hpp"

#include "pimspec/error.hpp"
#include "pimspec/hwmodel.hpp"

#include <gtest/gtest.h>

using namespace pimspec;

namespace {

OpDescriptor fc(std::uint64_t bytes, std::uint64_t flops = 0) {
    OpDescriptor op;
    op.kind = OpKind::FC;
    op.name = "w";
    op.weight_bytes = bytes;
    op.flops = flops;
    op.pim_eligible = true;
    return op;
}

PIMConfig pim_1228() {
    PIMConfig p;
    p.internal_bw_per_die = 102.4e9;
    return p;
}

} // namespace

TEST(HwModel, PeakAndBandwidthIdentities) {
    PIMConfig p;
    EXPECT_DOUBLE_EQ(p.peak_ops_per_die(), 8.0 * 4 * 32 * 2 * 200e6);
    EXPECT_DOUBLE_EQ(p.total_bw(), 12 * 51.2e9);
    EXPECT_DOUBLE_EQ(pim_1228().total_bw(), 1228.8e9);
    auto base = samsung_lpddr5_pim(8);
    EXPECT_EQ(base.total_dies(), 8);
    EXPECT_DOUBLE_EQ(base.peak_ops_per_die(), 102.4e9);
}

TEST(HwModel, NpuMemoryBound2GB) {
    std::vector<OpDescriptor> ops{fc(2'000'000'000)};
    EXPECT_NEAR(npu_latency(ops, NPUConfig{}, DRAMConfig{}) * 1e3, 39.0625, 1e-9);
}

TEST(HwModel, NpuZeroFlopsIsPureBandwidth) {
    DRAMConfig d;
    auto op = fc(123'456);
    EXPECT_DOUBLE_EQ(npu_op_latency(op, NPUConfig{}, d), 123'456 / d.offchip_bw);
}

TEST(HwModel, NpuComputeBoundBranch) {
    // 7B FFN up-projection at m = 4096.
    const std::int64_t m = 4096, n = 11008, k = 4096;
    OpDescriptor op = fc(static_cast<std::uint64_t>(n * k), 2ull * m * n * k);
    op.activation_bytes = static_cast<std::uint64_t>(m * (n + k));
    NPUConfig npu;
    DRAMConfig d;
    const double t_compute = 2.0 * m * n * k / 32.8e12;
    const double t_mem = static_cast<double>(n * k + m * (n + k)) / 51.2e9;
    ASSERT_GT(t_compute, t_mem);
    EXPECT_DOUBLE_EQ(npu_op_latency(op, npu, d), t_compute);
}

TEST(HwModel, PimLatencyCeilingPlateau) {
    std::vector<OpDescriptor> ops{fc(4'000'000'000)};
    auto p = pim_1228();
    EXPECT_NEAR(pim_latency(ops, p, 4) * 1e3, 3.255, 5e-4);
    EXPECT_NEAR(pim_latency(ops, p, 5) * 1e3, 6.510, 5e-4);
    EXPECT_DOUBLE_EQ(pim_latency(ops, p, 1), pim_latency(ops, p, 4));
}

TEST(HwModel, PimRejectsIneligibleOps) {
    auto op = fc(10);
    op.pim_eligible = false;
    std::vector<OpDescriptor> ops{op};
    EXPECT_THROW(pim_latency(ops, PIMConfig{}, 1), ContractViolation);
}

TEST(HwModel, ParallelLatency) {
    EXPECT_DOUBLE_EQ(parallel_latency(3e-3, 5e-3), 5e-3);
    EXPECT_DOUBLE_EQ(parallel_latency(7e-3, 0.0), 7e-3);
    EXPECT_DOUBLE_EQ(parallel_latency(3e-3, 5e-3, LatencyCombine::Min), 3e-3);
    EXPECT_DOUBLE_EQ(parallel_latency(0.0, 5e-3, LatencyCombine::Min), 5e-3);
    EXPECT_THROW(parallel_latency(-1.0, 0.0), ContractViolation);
}

TEST(HwModel, AllPimEnergyOffchipIsActivationsOnly) {
    auto op = fc(1'000'000, 2'000'000);
    op.m = 1;
    op.k = 1000;
    op.n = 1000;
    op.activation_bytes = 2000;
    std::vector<OpDescriptor> pim{op};
    EnergyParams ep;
    auto e = iteration_energy({}, pim, ep, PIMConfig{}, 1);
    EXPECT_DOUBLE_EQ(e.e_offchip, 2000 * ep.e_offchip_per_byte);
    EXPECT_DOUBLE_EQ(e.e_onchip, 0.0);
}

TEST(HwModel, InternalToOffchipEnergyIs15Percent) {
    auto op = fc(1'000'000);
    std::vector<OpDescriptor> one{op};
    EnergyParams ep;
    auto npu = iteration_energy(one, {}, ep, PIMConfig{}, 1);
    auto pim = iteration_energy({}, one, ep, PIMConfig{}, 1);
    EXPECT_NEAR(pim.e_internal / npu.e_offchip, 0.15, 1e-12);
}

TEST(HwModel, NpuOnlyDecodeMatchesDimensionFormula) {
    auto m = build_model_spec("llama2-7b");
    SystemConfig sys;
    for (std::int64_t seq : {0, 128, 700}) {
        auto ops = decode_op_graph(m, KVState{seq}, 1);
        auto est = estimate_iteration(ops, sys, sys.pim, Placement::NpuOnly, 0.0, 1);
        EXPECT_NEAR(est.latency.t_total, oracle::npu_decode_seconds(m, seq, 1, sys), 1e-9) << seq;
        EXPECT_EQ(est.pim_weight_bytes, 0u);
    }
}

TEST(HwModel, CoProcessBalancedPartitionWithinQuantization) {
    // At the optimal split the two sides differ by less than the PIM work
    // of one pass over a single column of every op.
    auto m = build_model_spec("llama2-7b");
    SystemConfig sys;
    auto ops = decode_op_graph(m, KVState{0}, 4);
    const double bw_pim = sys.pim.total_bw();
    const double bw_off = sys.dram.offchip_bw;
    const double f = bw_pim / (bw_pim + bw_off);
    auto est = estimate_iteration(ops, sys, sys.pim, Placement::CoProcess, f, 4);
    const double bus = static_cast<double>(est.bus_activation_bytes) / bw_off;
    const double t_npu_weights = est.latency.t_npu - bus;
    const double t_pim_weights = static_cast<double>(est.pim_weight_bytes) / bw_pim;
    double col_bound = 0.0;
    for (const auto& op : ops)
        if (op.pim_eligible && op.n > 0)
            col_bound += static_cast<double>(op.weight_bytes / static_cast<std::uint64_t>(op.n));
    // Each side also carries its share of activation traffic.
    double act = 0.0;
    for (const auto& op : ops)
        if (op.pim_eligible) act += static_cast<double>(op.activation_bytes);
    EXPECT_LT(std::abs(t_npu_weights - t_pim_weights), (col_bound + act) / bw_off);
}

TEST(HwModel, PimOnlyUsesGivenPimFlavour) {
    auto m = build_model_spec("llama2-7b");
    SystemConfig sys;
    auto ops = decode_op_graph(m, KVState{0}, 8);
    auto mpu = estimate_iteration(ops, sys, sys.pim, Placement::PimOnly, 1.0, 8);
    auto base = estimate_iteration(ops, sys, sys.baseline_pim, Placement::PimOnly, 1.0, 8);
    // The GEMV baseline streams weights once per token, the MPU once per 4.
    EXPECT_NEAR(base.latency.t_pim / mpu.latency.t_pim, 4.0, 0.05);
}
