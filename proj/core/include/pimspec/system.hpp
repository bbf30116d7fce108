#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace pimspec {

struct NPUConfig {
    double matrix_ops_per_s = 32.8e12;
    double vector_ops_per_s = 8.2e12;
    std::int64_t n_cores = 16;
    double freq_hz = 1.0e9;
    std::uint64_t scratchpad_bytes = 8ull << 20;
    std::uint64_t local_buffer_bytes = 256ull << 10;

    double peak_ops_per_s() const { return matrix_ops_per_s + vector_ops_per_s; }
};

/// One flavour of PIM die and how many of them sit in the PIM ranks.
/// The default is the MPU-enhanced die; `samsung_lpddr5_pim()` gives the
/// GEMV-only baseline (one 32-lane ALU per unit).
struct PIMConfig {
    std::int64_t n_pim_ranks = 3;
    std::int64_t dies_per_rank = 4;
    std::int64_t mpus_per_die = 8;
    std::int64_t alus_per_mpu = 4; // N_ALU
    std::int64_t lanes_per_alu = 32;
    double mac_freq_hz = 200e6;
    double internal_bw_per_die = 51.2e9;
    std::uint64_t capacity_per_die = 1ull << 30;
    double mode_switch_latency_s = 100e-9;

    std::int64_t total_dies() const { return n_pim_ranks * dies_per_rank; }
    std::int64_t total_units() const { return total_dies() * mpus_per_die; }
    double peak_ops_per_die() const {
        return static_cast<double>(mpus_per_die * alus_per_mpu * lanes_per_alu) * 2.0 * mac_freq_hz;
    }
    double total_bw() const { return static_cast<double>(total_dies()) * internal_bw_per_die; }
    std::uint64_t capacity() const {
        return static_cast<std::uint64_t>(total_dies()) * capacity_per_die;
    }
};

PIMConfig samsung_lpddr5_pim(std::int64_t total_dies);

struct DRAMConfig {
    std::int64_t n_dram_ranks = 1;
    std::int64_t dies_per_rank = 4;
    double offchip_bw = 51.2e9; // BW_Off-chip
    std::uint64_t capacity_per_die = 1ull << 30;

    std::uint64_t capacity() const {
        return static_cast<std::uint64_t>(n_dram_ranks * dies_per_rank) * capacity_per_die;
    }
};

/// DRAM timing in memory-clock (CK) cycles.
struct TimingParams {
    std::int64_t t_rp = 15;
    std::int64_t t_rcd = 15;
    std::int64_t t_ras = 34;
    std::int64_t t_rrd = 4;
    std::int64_t t_wr = 28;
    std::int64_t t_rc = 30;
    std::int64_t t_ccd = 4;
    std::int64_t t_faw = 16;
    std::int64_t t_cl = 25;
    std::int64_t t_cwl = 23;
    double clock_period_s = 1.25e-9;

    double t_ccd_s() const { return static_cast<double>(t_ccd) * clock_period_s; }
    std::int64_t copy_write_gap() const { return t_cl - t_cwl; }
};

/// Energy constants. Per-byte terms are charged per byte moved; MAC terms per
/// multiply-accumulate (two ops).
struct EnergyParams {
    double e_offchip_per_byte = 30e-12;
    double e_internal_per_byte = 4.5e-12; // 0.15 x off-chip
    double e_npu_mac = 0.25e-12;
    double e_pim_mac = 0.5e-12;
    double e_onchip_per_byte = 46.5e-12; // fitted, see fit_onchip_energy
};

enum class LatencyCombine { Max, Min };

struct SystemConfig {
    NPUConfig npu;
    PIMConfig pim;
    PIMConfig baseline_pim = samsung_lpddr5_pim(12);
    DRAMConfig dram;
    TimingParams timing;
    EnergyParams energy;
    LatencyCombine latency_combine = LatencyCombine::Max;

    std::uint64_t total_capacity() const { return pim.capacity() + dram.capacity(); }

    /// Every violated invariant, human readable. Empty means valid.
    std::vector<std::string> violations() const;
    /// Throws ConfigError with the first violation.
    void validate() const;
};

} // namespace pimspec
