#pragma once

#include "pimspec/hwmodel.hpp"
#include "pimspec/scheduler.hpp"
#include "pimspec/system.hpp"
#include "pimspec/workload.hpp"

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pimspec {

enum class Mode { NpuSi, PimSi, LpSpec, LpSpecCoproc, LpSpecCoprocSched };
inline constexpr std::array<Mode, 5> kAllModes = {Mode::NpuSi, Mode::PimSi, Mode::LpSpec,
                                                 Mode::LpSpecCoproc, Mode::LpSpecCoprocSched};

std::string_view to_string(Mode mode);
/// "npu-si", "pim-si", "lp-spec", "lp-spec+coproc", "lp-spec+coproc+sched".
Mode parse_mode(std::string_view name);

enum class OracleMode { Independent, Correlated };

struct SchedulerConfig {
    ObjectiveMode objective = ObjectiveMode::Throughput;
    double ewma_decay = 0.05;
    double prior_scale = 0.5;
    std::vector<std::vector<double>> prior_table; // overrides prior_scale when set
    std::int64_t k_max = 3;
    std::int64_t group_cap = 8;
    std::int64_t tile_cols = 32;
    bool overlap_realloc = true;
};

struct OracleConfig {
    /// True per-head rank accuracies the verification oracle samples from.
    std::vector<std::vector<double>> truth = {
        {0.62, 0.12, 0.06},
        {0.48, 0.12, 0.06},
        {0.38, 0.10, 0.05},
        {0.30, 0.08, 0.04},
    };
    OracleMode mode = OracleMode::Independent;
    bool bonus_token = true; // tokens = accepted + 1
};

struct RunConfig {
    Mode mode = Mode::LpSpecCoprocSched;
    std::int64_t l_in = 128;
    std::int64_t l_out = 256;
    /// Draft nodes of the static tree (baselines) or the DTP node budget.
    std::optional<std::int64_t> fixed_l_spec;
    std::uint64_t seed = 1;
    std::int64_t trials = 1;
    std::int64_t max_iterations = 0; // 0: 4 * l_out + 16

    void validate() const;
};

/// Uniform in [0, 1) from the top 53 bits; identical on every platform.
double uniform01(std::mt19937_64& rng);

/// True rank per head (1-based, 0 = miss).
std::vector<std::int32_t> sample_truth(const HeadStats& truth, std::mt19937_64& rng,
                                       OracleMode mode = OracleMode::Independent);

/// Longest root-anchored chain whose (head, rank) matches `truth` at every node.
VerificationOutcome verify(const TokenTree& tree, std::span<const std::int32_t> truth,
                           bool bonus_token = true);

/// Static draft tree of `drafts` nodes, greedy by path product.
TokenTree fixed_tree(const HeadStats& stats, std::int64_t drafts);

struct IterationRecord {
    std::int64_t iteration = 0;
    std::int64_t seq_len = 0;
    std::int64_t draft_nodes = 0;
    std::int64_t l_spec = 1;
    std::int64_t accepted = 0;
    std::int64_t tokens = 0;
    double expected_accept = 0.0;
    double ratio_on_pim = 0.0;
    std::int64_t group_id = 0;
    double t_npu = 0.0;
    double t_pim = 0.0;
    double t_nonlinear = 0.0;
    double t_realloc = 0.0;
    double t_total = 0.0;
    EnergyEstimate energy;
    double e_kv_write = 0.0;
    std::uint64_t realloc_planned = 0;
    std::int32_t realloc_dir = 0; // +1 DRAM->PIM, -1 PIM->DRAM
    std::uint64_t realloc_moved = 0;
    std::uint64_t realloc_residue = 0;

    double e_total() const { return energy.e_total() + e_kv_write; }
};

struct RunReport {
    Mode mode = Mode::NpuSi;
    std::int64_t l_in = 0;
    std::int64_t l_out = 0;
    std::int64_t l_spec = 0;
    std::uint64_t seed = 0;
    double t_prefill = 0.0;
    double e_prefill = 0.0;
    double total_latency = 0.0;
    double total_energy = 0.0;
    std::int64_t tokens = 0;
    double tokens_per_s = 0.0;
    double tokens_per_j = 0.0;
    double edp = 0.0;                // s * J over the whole run
    double edp_per_token_smj = 0.0;  // (s / token) * (mJ / token)
    std::vector<IterationRecord> iterations;

    double mean_decode_latency() const;
};

struct SimContext {
    ModelSpec model;
    SystemConfig sys;
    SchedulerConfig sched;
    OracleConfig oracle;
};

/// Prefill then draft-verify until `l_out` tokens. Deterministic in `seed`.
RunReport run_decode(const RunConfig& cfg, const SimContext& ctx);

/// Bytes the run needs resident: weights plus the KV cache at l_in + l_out.
/// Throws ConfigError if the system cannot hold them or the mode's placement
/// does not fit its ranks.
void check_capacity(const RunConfig& cfg, const SimContext& ctx);

double geomean(std::span<const double> values);

struct SweepPoint {
    Mode mode = Mode::NpuSi;
    std::int64_t l_in = 0;
    std::int64_t l_out = 0;
    std::int64_t l_spec = 0;
    std::uint64_t seed = 0;
};

struct SweepResult {
    SweepPoint point;
    RunReport report;
};

struct RatioCell {
    SweepPoint point;
    double speedup_vs_npu = 0.0;
    double energy_gain_vs_npu = 0.0;
    double speedup_vs_pim = 0.0;
};

struct SweepSummary {
    std::vector<RatioCell> cells;
    std::map<Mode, double> geomean_speedup_vs_npu;
    std::map<Mode, double> geomean_energy_gain_vs_npu;
    std::map<Mode, double> geomean_speedup_vs_pim;
};

/// Per-cell ratios against the npu-si (and pim-si) run at the same
/// (l_in, l_out, l_spec, seed), plus geometric means per mode.
SweepSummary aggregate(const std::vector<SweepResult>& results);

void write_iterations_csv(std::ostream& os, const RunReport& report);
void write_summary_csv(std::ostream& os, const std::vector<SweepResult>& results);
void write_ratio_table_csv(std::ostream& os, const SweepSummary& summary);

} // namespace pimspec
