#pragma once

#include "pimspec/nmc.hpp"
#include "pimspec/system.hpp"
#include "pimspec/workload.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

namespace pimspec {

/// Rank-ordered speculation accuracy of each decode head. Head i drafts the
/// token i+1 positions ahead of the verified root; ranks are 1-based.
struct HeadStats {
    std::vector<std::vector<double>> p; // p[i][k-1]
    double ewma_decay = 0.05;
    std::vector<std::int64_t> observations;

    /// p[i][k] = scale / k / (i + 1).
    static HeadStats prior(std::int64_t n_heads, std::int64_t k_max, double scale = 0.5,
                           double ewma_decay = 0.05);
    static HeadStats from_table(std::vector<std::vector<double>> p, double ewma_decay = 0.05);

    std::int64_t n_heads() const { return static_cast<std::int64_t>(p.size()); }
    std::int64_t k_max() const { return p.empty() ? 0 : static_cast<std::int64_t>(p.front().size()); }
    double at(std::int64_t head, std::int64_t rank) const;
    double mass(std::int64_t head) const;

    /// Throws InvariantViolation on out-of-range, non-monotone or over-unit rows.
    void check() const;
};

struct TreeNode {
    std::int32_t id = 0;
    std::int32_t parent = -1; // -1 for the root
    std::int32_t head = -1;   // -1 for the root
    std::int32_t rank = 0;    // 0 for the root
    std::int32_t depth = 0;
};

/// Prefix-merged draft tree. Node 0 is the verified LM-head token.
class TokenTree {
public:
    TokenTree();

    /// Appends a child drafted by head parent.head + 1 at `rank`.
    std::int32_t add(std::int32_t parent, std::int32_t rank);

    const std::vector<TreeNode>& nodes() const { return nodes_; }
    const TreeNode& node(std::int32_t id) const;
    std::int64_t size() const { return static_cast<std::int64_t>(nodes_.size()); }
    std::int64_t draft_count() const { return size() - 1; }
    std::int64_t depth() const;
    bool contains(std::int32_t parent, std::int32_t rank) const;
    std::vector<std::int32_t> children(std::int32_t id) const;
    /// Root excluded, ordered root-to-node.
    std::vector<std::int32_t> path(std::int32_t id) const;

    void validate() const;

private:
    std::vector<TreeNode> nodes_;
};

double path_acceptance(const TokenTree& tree, std::int32_t node, const HeadStats& stats);
double expected_accept_length(const TokenTree& tree, const HeadStats& stats);

enum class ObjectiveMode { Accuracy, Throughput, Energy, Edp };

struct Objective {
    ObjectiveMode mode = ObjectiveMode::Throughput;
    std::int64_t budget = 8; // max draft nodes
};

struct IterationCost {
    double latency_s = 0.0;
    double energy_j = 0.0;
};

/// Hardware cost of one verification pass with the given draft count.
using CostEstimator = std::function<IterationCost(std::int64_t draft_nodes)>;

/// Objective value of a tree with `expected_accept` drafted tokens expected.
/// Higher is better.
double objective_value(ObjectiveMode mode, double expected_accept, const IterationCost& cost);

/// Greedy tree growth: repeatedly add the frontier candidate with the largest
/// path product (ties: shallower, lower head, lower rank, lower parent id) and
/// keep it only if the objective strictly improves.
TokenTree explore_tree(const HeadStats& stats, const CostEstimator& hw, const Objective& obj);

struct VerificationOutcome {
    std::int64_t accepted_depth = 0;
    std::vector<std::int32_t> head_rank; // true rank per head; 0 = miss
    std::int64_t observed_heads = 0;     // heads whose truth was revealed
    std::int64_t tokens_generated = 1;
};

/// EWMA toward the one-hot observed rank for heads [0, observed_heads), then
/// re-sorts each updated row so rank order holds.
void update_stats(HeadStats& stats, const VerificationOutcome& outcome);

/// f = B_eff / (B_eff + BW_off) with B_eff = BW_PIM / ceil(l_spec / N_ALU).
double optimal_ratio(std::int64_t l_spec, const SystemConfig& sys);

/// ceil(l_spec / N_ALU), capped at `cap`.
std::int64_t group_of(std::int64_t l_spec, const SystemConfig& sys, std::int64_t cap = 8);

/// Eligible bytes (weights plus the KV cache at the longest sequence) and
/// what the DRAM ranks must hold regardless of the split.
struct ResidencyBudget {
    std::uint64_t eligible_bytes = 0;
    std::uint64_t dram_fixed_bytes = 0; // embedding table
    std::uint64_t pim_capacity = 0;
    std::uint64_t dram_capacity = 0;

    double min_ratio() const;
    double max_ratio() const;
};

ResidencyBudget residency_budget(const ModelSpec& spec, const SystemConfig& sys,
                                 std::int64_t max_seq_len);

/// Ratio per group id (index 0 unused), optimal per group and clamped to the
/// capacity-feasible range.
struct PartitionTable {
    std::vector<double> ratio;
    std::int64_t cap = 8;

    static PartitionTable build(const SystemConfig& sys, const ResidencyBudget& budget,
                                std::int64_t cap = 8);
    double at(std::int64_t group) const;
};

struct PartitionState {
    double ratio_on_pim = 0.0;
    std::int64_t group_id = 1;
    std::vector<std::uint8_t> counters; // 2-bit saturating, one per group
    std::int64_t l_spec = 1;
    std::int64_t n_token = 0;

    static PartitionState initial(const PartitionTable& table, std::int64_t group = 1);
};

enum class ReallocDirection { DramToPim, PimToDram };

struct TileMove {
    std::string op;
    std::int32_t layer = -1;
    std::int64_t col_begin = 0;
    std::int64_t cols = 0;
    std::uint64_t bytes = 0;
};

struct ReallocationPlan {
    std::int64_t from_group = 0;
    std::int64_t to_group = 0;
    double from_ratio = 0.0;
    double to_ratio = 0.0;
    ReallocDirection direction = ReallocDirection::DramToPim;
    std::vector<TileMove> tiles;
    std::uint64_t bytes = 0;
};

/// Column tiles that move when every eligible op's split changes from
/// `from` to `to`. Tiles are at most `tile_cols` wide.
std::vector<TileMove> plan_tiles(const std::vector<OpDescriptor>& ops, double from, double to,
                                 std::int64_t tile_cols = 32);

struct DauContext {
    const SystemConfig* sys = nullptr;
    const PartitionTable* table = nullptr;
    const ResidencyBudget* budget = nullptr;
    const std::vector<OpDescriptor>* eligible_ops = nullptr; // used for tile accounting
    std::int64_t tile_cols = 32;
};

/// One DAU observation. A plan is emitted only once a foreign group has been
/// observed twice with no other group in between.
std::optional<ReallocationPlan> dau_step(PartitionState& state, std::int64_t observed_l_spec,
                                         const DauContext& ctx);

struct ReallocProgress {
    std::uint64_t piggybacked = 0; // moved alongside NPU weight reads
    std::uint64_t overlapped = 0;  // placed in idle DQ slots
    std::uint64_t serialized = 0;  // moved with the bus held
    std::uint64_t residue = 0;     // carried to the next iteration
    double added_latency_s = 0.0;
};

/// Places up to `pending` bytes of migration into one iteration. DRAM->PIM
/// bytes ride on the NPU's own reads of those weights (up to
/// `npu_reads_of_migrating`); the rest fills idle DQ slots of `timeline`.
/// With `overlap` off everything serializes at the off-chip rate.
ReallocProgress realloc_plan_schedule(std::uint64_t pending, ReallocDirection direction,
                                      std::uint64_t npu_reads_of_migrating, BusTimeline& timeline,
                                      std::int64_t total_cycles, const SystemConfig& sys,
                                      bool overlap = true);

} // namespace pimspec
