#include "pimspec/pimsim.hpp"

#include "pimspec/error.hpp"
#include "pimspec/hwmodel.hpp"

#include <algorithm>
#include <fmt/format.h>

namespace pimspec {

namespace {

std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return (a + b - 1) / b; }

} // namespace

MPUResources MPUResources::from(const PIMConfig& pim) {
    MPUResources r;
    r.n_simd_alus = pim.alus_per_mpu;
    r.lanes = pim.lanes_per_alu;
    // Register widths scale with the ALU count: one slice per ALU.
    r.grf_bits = pim.alus_per_mpu * 256;
    r.srf_bits = pim.alus_per_mpu * 8;
    r.arf_bits = pim.alus_per_mpu * 1024;
    return r;
}

GemmTiling plan_gemm_tiles(std::int64_t cols, std::int64_t k, std::int64_t l_spec,
                           const MPUResources& mpu) {
    if (cols < 0 || k < 1 || l_spec < 1) throw ContractViolation("plan_gemm_tiles: bad shape");
    GemmTiling t;
    if (cols == 0) return t;
    const std::int64_t tile_cols = mpu.accumulators_per_alu();
    const std::int64_t chunk = mpu.staged_inputs_per_token();
    if (tile_cols < 1 || chunk < 1) throw ConfigError("MPU register files too small for any tile");
    t.col_tiles = ceil_div(cols, tile_cols);
    t.k_chunks = ceil_div(k, chunk);
    t.passes = ceil_div(l_spec, mpu.n_simd_alus);
    t.input_reload_bytes = t.col_tiles * l_spec * k;
    return t;
}

std::int64_t ColumnMapping::max_cols() const {
    std::int64_t v = 0;
    for (const auto& u : units) v = std::max(v, u.cols());
    return v;
}

std::int64_t ColumnMapping::min_cols() const {
    if (units.empty()) return 0;
    std::int64_t v = units.front().cols();
    for (const auto& u : units) v = std::min(v, u.cols());
    return v;
}

ColumnMapping map_gemm_columnwise(const OpDescriptor& op, const PIMConfig& pim) {
    if (!op.pim_eligible)
        throw ContractViolation(fmt::format("map_gemm_columnwise: '{}' is not PIM-eligible", op.name));
    if (op.n <= 0) throw ContractViolation(fmt::format("map_gemm_columnwise: '{}' has n = 0", op.name));

    const std::int64_t units = pim.total_units();
    if (units < 1) throw ConfigError("map_gemm_columnwise: no PIM compute units");

    ColumnMapping m;
    m.n = op.n;
    m.k = op.k;
    m.units.reserve(static_cast<std::size_t>(units));
    const std::int64_t base = op.n / units;
    const std::int64_t extra = op.n % units;
    std::int64_t col = 0;
    for (std::int64_t u = 0; u < units; ++u) {
        UnitAssignment a;
        a.mpu = u % pim.mpus_per_die;
        const std::int64_t die_global = u / pim.mpus_per_die;
        a.die = die_global % pim.dies_per_rank;
        a.rank = die_global / pim.dies_per_rank;
        a.col_begin = col;
        col += base + (u < extra ? 1 : 0);
        a.col_end = col;
        m.units.push_back(a);
    }
    return m;
}

CommCost comm_cost(std::uint64_t bytes, CommScheme scheme, const PIMConfig& pim) {
    if (bytes == 0) throw ContractViolation("comm_cost: bytes must be > 0");
    CommCost c;
    c.scheme = scheme;
    c.bytes_moved = scheme == CommScheme::Broadcast
                        ? bytes
                        : bytes * static_cast<std::uint64_t>(pim.total_units());
    return c;
}

double mpu_gemm_time(std::int64_t cols, std::int64_t k, std::int64_t l_spec, const PIMConfig& pim,
                     const TimingParams& timing) {
    if (cols < 1 || k < 1 || l_spec < 1) throw ContractViolation("mpu_gemm_time: cols, k, l_spec >= 1");
    const double beats = static_cast<double>(cols) * static_cast<double>(k) /
                         static_cast<double>(pim.lanes_per_alu);
    return beats * timing.t_ccd_s() * static_cast<double>(pim_passes(l_spec, pim));
}

double mapped_gemm_time(const ColumnMapping& mapping, std::int64_t l_spec, const PIMConfig& pim,
                        const TimingParams& timing) {
    double t = 0.0;
    for (const auto& u : mapping.units) {
        if (u.cols() == 0) continue;
        t = std::max(t, mpu_gemm_time(u.cols(), mapping.k, l_spec, pim, timing));
    }
    return t;
}

std::string_view to_string(PimMode mode) {
    switch (mode) {
    case PimMode::Normal: return "normal";
    case PimMode::AllBank: return "all-bank";
    case PimMode::AllBankPim: return "all-bank-PIM";
    }
    return "?";
}

double mode_switch(PimMode from, PimMode to, const PIMConfig& pim) {
    if (from == to)
        throw ProtocolError("MRW", fmt::format("no-op mode switch {} -> {}", to_string(from), to_string(to)));
    const bool skips_all_bank = (from == PimMode::Normal && to == PimMode::AllBankPim) ||
                                (from == PimMode::AllBankPim && to == PimMode::Normal);
    if (skips_all_bank)
        throw ProtocolError("MRW", fmt::format("illegal mode switch {} -> {} (must pass all-bank)",
                                               to_string(from), to_string(to)));
    return pim.mode_switch_latency_s;
}

void PimModeTracker::switch_to(PimMode to) {
    overhead_s_ += mode_switch(mode_, to, pim_);
    mode_ = to;
    ++switches_;
}

void PimModeTracker::launch_kernel() {
    if (mode_ == PimMode::Normal) switch_to(PimMode::AllBank);
    if (mode_ == PimMode::AllBankPim) switch_to(PimMode::AllBank);
    switch_to(PimMode::AllBankPim);
    switch_to(PimMode::AllBank);
}

} // namespace pimspec
