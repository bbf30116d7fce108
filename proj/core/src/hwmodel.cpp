#include "pimspec/hwmodel.hpp"

#include "pimspec/error.hpp"

#include <algorithm>
#include <fmt/format.h>
#include <vector>

namespace pimspec {

namespace {

double as_d(std::uint64_t v) { return static_cast<double>(v); }

void require_positive(double v, const char* what) {
    if (!(v > 0.0)) throw ConfigError(fmt::format("{} must be positive (got {})", what, v));
}

} // namespace

double npu_op_latency(const OpDescriptor& op, const NPUConfig& npu, const DRAMConfig& dram) {
    require_positive(dram.offchip_bw, "dram.offchip_bw");
    const double peak = is_matrix(op.kind) ? npu.matrix_ops_per_s : npu.vector_ops_per_s;
    require_positive(peak, "npu throughput");
    const double t_compute = as_d(op.flops) / peak;
    const double t_memory = as_d(op.weight_bytes + op.activation_bytes) / dram.offchip_bw;
    return std::max(t_compute, t_memory);
}

double npu_latency(std::span<const OpDescriptor> ops, const NPUConfig& npu, const DRAMConfig& dram) {
    if (ops.empty()) throw ContractViolation("npu_latency: empty op list");
    double t = 0.0;
    for (const auto& op : ops) t += npu_op_latency(op, npu, dram);
    return t;
}

std::int64_t pim_passes(std::int64_t l_spec, const PIMConfig& pim) {
    if (l_spec < 1) throw ContractViolation("pim_passes: l_spec must be >= 1");
    if (pim.alus_per_mpu < 1) throw ConfigError("pim.alus_per_mpu must be >= 1");
    return (l_spec + pim.alus_per_mpu - 1) / pim.alus_per_mpu;
}

double pim_latency(std::span<const OpDescriptor> ops, const PIMConfig& pim, std::int64_t l_spec) {
    require_positive(pim.total_bw(), "pim total bandwidth");
    const auto passes = static_cast<double>(pim_passes(l_spec, pim));
    std::uint64_t bytes = 0;
    for (const auto& op : ops) {
        if (!op.pim_eligible)
            throw ContractViolation(fmt::format("pim_latency: op '{}' is not PIM-eligible", op.name));
        bytes += op.weight_bytes;
    }
    return as_d(bytes) / pim.total_bw() * passes;
}

double parallel_latency(double t_npu, double t_pim, LatencyCombine combine) {
    if (t_npu < 0.0 || t_pim < 0.0) throw ContractViolation("parallel_latency: negative time");
    if (combine == LatencyCombine::Min) {
        // An idle device does not bound the other one.
        if (t_npu == 0.0) return t_pim;
        if (t_pim == 0.0) return t_npu;
        return std::min(t_npu, t_pim);
    }
    return std::max(t_npu, t_pim);
}

EnergyEstimate& EnergyEstimate::operator+=(const EnergyEstimate& o) {
    e_compute += o.e_compute;
    e_offchip += o.e_offchip;
    e_internal += o.e_internal;
    e_onchip += o.e_onchip;
    return *this;
}

EnergyEstimate iteration_energy(std::span<const OpDescriptor> ops_npu,
                                std::span<const OpDescriptor> ops_pim, const EnergyParams& ep,
                                const PIMConfig& pim, std::int64_t l_spec) {
    EnergyEstimate e;
    for (const auto& op : ops_npu) {
        e.e_offchip += as_d(op.weight_bytes + op.activation_bytes) * ep.e_offchip_per_byte;
        e.e_onchip += as_d(op.weight_bytes) * ep.e_onchip_per_byte;
        e.e_compute += as_d(op.flops) / 2.0 * ep.e_npu_mac;
    }
    if (ops_pim.empty()) return e;

    const auto passes = static_cast<double>(pim_passes(l_spec, pim));
    const auto dies = static_cast<double>(pim.total_dies());
    for (const auto& op : ops_pim) {
        e.e_internal += as_d(op.weight_bytes) * passes * ep.e_internal_per_byte;
        e.e_offchip += as_d(op.activation_bytes) * ep.e_offchip_per_byte;
        // Broadcast inputs land in every die's register files.
        e.e_internal += static_cast<double>(op.m * op.k) * dies * ep.e_internal_per_byte;
        e.e_compute += as_d(op.flops) / 2.0 * ep.e_pim_mac;
    }
    return e;
}

IterationEstimate estimate_iteration(std::span<const OpDescriptor> ops, const SystemConfig& sys,
                                     const PIMConfig& pim, Placement placement, double pim_ratio,
                                     std::int64_t l_spec) {
    if (ops.empty()) throw ContractViolation("estimate_iteration: empty op list");
    IterationEstimate est;

    std::vector<OpDescriptor> npu_ops;
    std::vector<OpDescriptor> pim_ops;
    std::vector<OpDescriptor> nonlinear;
    npu_ops.reserve(ops.size());
    pim_ops.reserve(ops.size());

    for (const auto& op : ops) {
        if (!op.pim_eligible) {
            (op.kind == OpKind::Nonlinear ? nonlinear : npu_ops).push_back(op);
            continue;
        }
        switch (placement) {
        case Placement::NpuOnly: npu_ops.push_back(op); break;
        case Placement::PimOnly: pim_ops.push_back(op); break;
        case Placement::CoProcess: {
            auto split = split_columns(op, columns_for_ratio(op, pim_ratio));
            if (split.npu.n > 0) npu_ops.push_back(std::move(split.npu));
            if (split.pim.n > 0) pim_ops.push_back(std::move(split.pim));
            break;
        }
        }
    }

    for (const auto& op : npu_ops) est.npu_weight_bytes += op.weight_bytes;
    for (const auto& op : pim_ops) {
        est.pim_weight_bytes += op.weight_bytes;
        est.bus_activation_bytes += op.activation_bytes;
    }
    est.pim_launches = static_cast<std::int64_t>(pim_ops.size());

    auto& lat = est.latency;
    if (!nonlinear.empty()) lat.t_nonlinear = npu_latency(nonlinear, sys.npu, sys.dram);
    if (!npu_ops.empty()) lat.t_npu = npu_latency(npu_ops, sys.npu, sys.dram);
    if (!pim_ops.empty()) {
        // PIM inputs and outputs share the DQ lines with NPU weight fetches.
        lat.t_npu += as_d(est.bus_activation_bytes) / sys.dram.offchip_bw;
        lat.t_pim = pim_latency(pim_ops, pim, l_spec) +
                    static_cast<double>(est.pim_launches) * 2.0 * pim.mode_switch_latency_s;
    }

    if (placement == Placement::PimOnly) {
        lat.t_total = lat.t_npu + lat.t_pim + lat.t_nonlinear;
    } else {
        lat.t_total = parallel_latency(lat.t_npu, lat.t_pim, sys.latency_combine) + lat.t_nonlinear;
    }

    std::vector<OpDescriptor> npu_side = npu_ops;
    npu_side.insert(npu_side.end(), nonlinear.begin(), nonlinear.end());
    est.energy = iteration_energy(npu_side, pim_ops, sys.energy, pim, l_spec);
    return est;
}

} // namespace pimspec
