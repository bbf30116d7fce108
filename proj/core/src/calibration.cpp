#include "pimspec/calibration.hpp"

#include "pimspec/error.hpp"
#include "pimspec/hwmodel.hpp"

#include <cmath>

namespace pimspec {

PimAdvantage pim_vs_npu(const ModelSpec& model, const SystemConfig& sys, const PIMConfig& pim,
                        std::int64_t l_spec, std::int64_t seq_len) {
    const auto ops = decode_op_graph(model, KVState{seq_len}, l_spec);
    const auto npu = estimate_iteration(ops, sys, pim, Placement::NpuOnly, 0.0, l_spec);
    const auto on_pim = estimate_iteration(ops, sys, pim, Placement::PimOnly, 1.0, l_spec);
    return {npu.latency.t_total / on_pim.latency.t_total,
            npu.energy.e_total() / on_pim.energy.e_total()};
}

EnergyFit fit_onchip_energy(const ModelSpec& model, const SystemConfig& sys,
                            const std::vector<EnergyTarget>& targets, double max_per_byte) {
    if (targets.empty()) throw ContractViolation("fit_onchip_energy: no targets");
    for (const auto& t : targets)
        if (t.pim_dies < 1 || !(t.energy_ratio > 0))
            throw ContractViolation("fit_onchip_energy: targets need dies >= 1 and a positive ratio");

    auto ratios_at = [&](double x) {
        SystemConfig s = sys;
        s.energy.e_onchip_per_byte = x;
        std::vector<double> r;
        for (const auto& t : targets)
            r.push_back(pim_vs_npu(model, s, samsung_lpddr5_pim(t.pim_dies), 1).energy_ratio);
        return r;
    };
    auto loss = [&](double x) {
        const auto r = ratios_at(x);
        double l = 0.0;
        for (std::size_t i = 0; i < r.size(); ++i) {
            const double e = r[i] / targets[i].energy_ratio - 1.0;
            l += e * e;
        }
        return l;
    };

    // Each ratio is a monotone rational function of x, so the loss is unimodal.
    const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = 0.0;
    double b = max_per_byte;
    double c = b - phi * (b - a);
    double d = a + phi * (b - a);
    double fc = loss(c);
    double fd = loss(d);
    for (int i = 0; i < 200 && (b - a) > 1e-18; ++i) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = loss(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = loss(d);
        }
    }
    EnergyFit fit;
    fit.e_onchip_per_byte = (a + b) / 2.0;
    fit.fitted_ratios = ratios_at(fit.e_onchip_per_byte);
    fit.rms_relative_residual = std::sqrt(loss(fit.e_onchip_per_byte) / static_cast<double>(targets.size()));
    return fit;
}

} // namespace pimspec
