#pragma once

#include "pimspec/system.hpp"
#include "pimspec/workload.hpp"

#include <cstdint>
#include <span>

namespace pimspec {

/// Roofline latency of one op on the NPU: the slower of compute
/// (matrix unit for matrix kinds, vector unit for nonlinear ops) and
/// off-chip traffic of weight + activation bytes.
double npu_op_latency(const OpDescriptor& op, const NPUConfig& npu, const DRAMConfig& dram);

/// Sum of per-op rooflines. Memory-bound lists reduce to bytes / BW_Off-chip.
double npu_latency(std::span<const OpDescriptor> ops, const NPUConfig& npu,
                   const DRAMConfig& dram);

/// Weight-stream passes a PIM needs for `l_spec` tokens: ceil(l_spec / N_ALU).
std::int64_t pim_passes(std::int64_t l_spec, const PIMConfig& pim);

/// sum(weight_bytes) / BW_PIM(total) * ceil(l_spec / N_ALU). Every op must be
/// PIM-eligible.
double pim_latency(std::span<const OpDescriptor> ops, const PIMConfig& pim, std::int64_t l_spec);

/// Completion time of two devices running concurrently. `Max` is the physical
/// answer; `Min` exists for comparing against the published estimator form.
double parallel_latency(double t_npu, double t_pim, LatencyCombine combine = LatencyCombine::Max);

struct LatencyEstimate {
    double t_npu = 0.0;       // NPU matrix work plus DQ traffic it serializes with
    double t_pim = 0.0;       // PIM kernels incl. mode-switch overhead
    double t_nonlinear = 0.0; // NPU vector work between kernels (serial)
    double t_total = 0.0;
};

struct EnergyEstimate {
    double e_compute = 0.0;
    double e_offchip = 0.0;
    double e_internal = 0.0;
    double e_onchip = 0.0;

    double e_total() const { return e_compute + e_offchip + e_internal + e_onchip; }
    EnergyEstimate& operator+=(const EnergyEstimate& o);
};

/// Energy of a partitioned op list. NPU-side bytes pay off-chip transfer plus
/// on-chip staging; PIM-side weights pay internal access once per weight
/// pass; PIM activations cross the shared bus at off-chip cost and are
/// written into every PIM die.
EnergyEstimate iteration_energy(std::span<const OpDescriptor> ops_npu,
                                std::span<const OpDescriptor> ops_pim, const EnergyParams& ep,
                                const PIMConfig& pim, std::int64_t l_spec);

enum class Placement { NpuOnly, PimOnly, CoProcess };

struct IterationEstimate {
    LatencyEstimate latency;
    EnergyEstimate energy;
    std::uint64_t npu_weight_bytes = 0;
    std::uint64_t pim_weight_bytes = 0;
    std::uint64_t bus_activation_bytes = 0; // PIM inputs/outputs over the DQ bus
    std::int64_t pim_launches = 0;
};

/// Full cost of one pass over `ops`. `pim` selects the PIM flavour (MPU or
/// GEMV baseline); `pim_ratio` is the fraction of every eligible op's columns
/// placed on PIM under CoProcess and is ignored otherwise.
IterationEstimate estimate_iteration(std::span<const OpDescriptor> ops, const SystemConfig& sys,
                                     const PIMConfig& pim, Placement placement, double pim_ratio,
                                     std::int64_t l_spec);

} // namespace pimspec
