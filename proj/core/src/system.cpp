#include "pimspec/system.hpp"

#include "pimspec/error.hpp"

#include <fmt/format.h>

namespace pimspec {

PIMConfig samsung_lpddr5_pim(std::int64_t total_dies) {
    PIMConfig p;
    p.dies_per_rank = 4;
    p.n_pim_ranks = (total_dies + p.dies_per_rank - 1) / p.dies_per_rank;
    if (total_dies < p.dies_per_rank) {
        p.n_pim_ranks = 1;
        p.dies_per_rank = total_dies;
    }
    p.mpus_per_die = 8;  // PIM units per die
    p.alus_per_mpu = 1;  // GEMV: one token per weight stream
    p.lanes_per_alu = 32;
    p.mac_freq_hz = 200e6;
    p.internal_bw_per_die = 51.2e9;
    p.capacity_per_die = 1ull << 30;
    return p;
}

std::vector<std::string> SystemConfig::violations() const {
    std::vector<std::string> out;
    auto need = [&](bool ok, std::string msg) {
        if (!ok) out.push_back(std::move(msg));
    };
    need(npu.matrix_ops_per_s > 0, "npu.matrix_tflops must be positive");
    need(npu.vector_ops_per_s > 0, "npu.vector_tflops must be positive");
    need(npu.n_cores >= 1, "npu.n_cores must be >= 1");
    need(npu.freq_hz > 0, "npu.freq must be positive");

    auto check_pim = [&](const PIMConfig& p, const char* block) {
        need(p.n_pim_ranks >= 0, fmt::format("{}.n_pim_ranks must be >= 0", block));
        need(p.dies_per_rank >= 1, fmt::format("{}.dies_per_rank must be >= 1", block));
        need(p.mpus_per_die >= 1, fmt::format("{}.mpus_per_die must be >= 1", block));
        need(p.alus_per_mpu >= 1, fmt::format("{}.alus_per_mpu must be >= 1", block));
        need(p.lanes_per_alu >= 1, fmt::format("{}.lanes_per_alu must be >= 1", block));
        need(p.mac_freq_hz > 0, fmt::format("{}.mac_freq must be positive", block));
        need(p.internal_bw_per_die > 0, fmt::format("{}.internal_bw_per_die must be positive", block));
        need(p.capacity_per_die > 0, fmt::format("{}.capacity_per_die must be positive", block));
        need(p.mode_switch_latency_s >= 0, fmt::format("{}.mode_switch_latency must be >= 0", block));
    };
    check_pim(pim, "pim");
    check_pim(baseline_pim, "baseline_pim");

    need(dram.n_dram_ranks >= 0, "dram.n_dram_ranks must be >= 0");
    need(dram.dies_per_rank >= 1, "dram.dies_per_rank must be >= 1");
    need(dram.offchip_bw > 0, "dram.offchip_bw must be positive");
    need(dram.capacity_per_die > 0, "dram.capacity_per_die must be positive");

    const auto& t = timing;
    need(t.t_rp > 0 && t.t_rcd > 0 && t.t_ras > 0 && t.t_rrd > 0 && t.t_wr > 0 && t.t_rc > 0 &&
             t.t_ccd > 0 && t.t_faw > 0 && t.t_cl > 0 && t.t_cwl > 0,
         "timing: all parameters must be positive");
    need(t.t_cl > t.t_cwl, fmt::format("timing: t_cl ({}) must exceed t_cwl ({})", t.t_cl, t.t_cwl));
    need(t.clock_period_s > 0, "timing.clock_period must be positive");

    const auto& e = energy;
    need(e.e_offchip_per_byte >= 0 && e.e_internal_per_byte >= 0 && e.e_npu_mac >= 0 &&
             e.e_pim_mac >= 0 && e.e_onchip_per_byte >= 0,
         "energy: all constants must be nonnegative");
    return out;
}

void SystemConfig::validate() const {
    auto v = violations();
    if (!v.empty()) throw ConfigError(v.front());
}

} // namespace pimspec
