#pragma once

#include "pimspec/system.hpp"
#include "pimspec/workload.hpp"

#include <cstdint>
#include <vector>

namespace pimspec {

/// NPU-only over PIM-only cost of one decode iteration (> 1 means PIM wins).
struct PimAdvantage {
    double latency_ratio = 0.0;
    double energy_ratio = 0.0;
};

PimAdvantage pim_vs_npu(const ModelSpec& model, const SystemConfig& sys, const PIMConfig& pim,
                        std::int64_t l_spec, std::int64_t seq_len = 0);

struct EnergyTarget {
    std::int64_t pim_dies = 0; // GEMV-baseline dies
    double energy_ratio = 0.0;
};

struct EnergyFit {
    double e_onchip_per_byte = 0.0;
    std::vector<double> fitted_ratios;
    double rms_relative_residual = 0.0;
};

/// Least-squares fit of the NPU on-chip staging energy so the GEMV-baseline
/// energy ratios at l_spec = 1 match `targets` (relative residuals). The
/// off-chip and internal per-byte costs stay as configured.
EnergyFit fit_onchip_energy(const ModelSpec& model, const SystemConfig& sys,
                            const std::vector<EnergyTarget>& targets, double max_per_byte = 1e-9);

} // namespace pimspec
