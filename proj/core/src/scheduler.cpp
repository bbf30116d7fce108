#include "pimspec/scheduler.hpp"

#include "pimspec/error.hpp"
#include "pimspec/hwmodel.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <functional>
#include <tuple>

namespace pimspec {

HeadStats HeadStats::prior(std::int64_t n_heads, std::int64_t k_max, double scale, double ewma_decay) {
    if (n_heads < 1 || k_max < 1) throw ConfigError("head stats need at least one head and one rank");
    HeadStats s;
    s.ewma_decay = ewma_decay;
    s.p.assign(static_cast<std::size_t>(n_heads), std::vector<double>(static_cast<std::size_t>(k_max)));
    for (std::int64_t i = 0; i < n_heads; ++i)
        for (std::int64_t k = 1; k <= k_max; ++k)
            s.p[static_cast<std::size_t>(i)][static_cast<std::size_t>(k - 1)] =
                scale / static_cast<double>(k) / static_cast<double>(i + 1);
    s.observations.assign(static_cast<std::size_t>(n_heads), 0);
    s.check();
    return s;
}

HeadStats HeadStats::from_table(std::vector<std::vector<double>> p, double ewma_decay) {
    HeadStats s;
    s.p = std::move(p);
    s.ewma_decay = ewma_decay;
    s.observations.assign(s.p.size(), 0);
    s.check();
    return s;
}

double HeadStats::at(std::int64_t head, std::int64_t rank) const {
    if (head < 0 || head >= n_heads() || rank < 1 || rank > k_max())
        throw ContractViolation(fmt::format("HeadStats::at({}, {}) out of range", head, rank));
    return p[static_cast<std::size_t>(head)][static_cast<std::size_t>(rank - 1)];
}

double HeadStats::mass(std::int64_t head) const {
    double m = 0.0;
    for (double v : p.at(static_cast<std::size_t>(head))) m += v;
    return m;
}

void HeadStats::check() const {
    if (!(ewma_decay >= 0.0 && ewma_decay <= 1.0))
        throw InvariantViolation(fmt::format("ewma_decay {} outside [0, 1]", ewma_decay));
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i].size() != p.front().size())
            throw InvariantViolation("head stats rows must share one rank count");
        for (std::size_t k = 0; k < p[i].size(); ++k) {
            if (!(p[i][k] >= 0.0 && p[i][k] <= 1.0))
                throw InvariantViolation(fmt::format("p[{}][{}] = {} outside [0, 1]", i, k + 1, p[i][k]));
            if (k > 0 && p[i][k] > p[i][k - 1] + 1e-12)
                throw InvariantViolation(fmt::format("p[{}] is not rank-ordered", i));
        }
        if (mass(static_cast<std::int64_t>(i)) > 1.0 + 1e-9)
            throw InvariantViolation(fmt::format("p[{}] sums to {} > 1", i, mass(static_cast<std::int64_t>(i))));
    }
}

// ---------------------------------------------------------------------------

TokenTree::TokenTree() { nodes_.push_back(TreeNode{0, -1, -1, 0, 0}); }

const TreeNode& TokenTree::node(std::int32_t id) const {
    if (id < 0 || id >= static_cast<std::int32_t>(nodes_.size()))
        throw ContractViolation(fmt::format("node {} not in tree", id));
    return nodes_[static_cast<std::size_t>(id)];
}

bool TokenTree::contains(std::int32_t parent, std::int32_t rank) const {
    return std::any_of(nodes_.begin() + 1, nodes_.end(), [&](const TreeNode& n) {
        return n.parent == parent && n.rank == rank;
    });
}

std::int32_t TokenTree::add(std::int32_t parent, std::int32_t rank) {
    const TreeNode& p = node(parent);
    if (rank < 1) throw ContractViolation("draft rank must be >= 1");
    if (contains(parent, rank))
        throw ContractViolation(fmt::format("duplicate child (parent {}, rank {})", parent, rank));
    TreeNode n;
    n.id = static_cast<std::int32_t>(nodes_.size());
    n.parent = parent;
    n.head = p.head + 1;
    n.rank = rank;
    n.depth = p.depth + 1;
    nodes_.push_back(n);
    return n.id;
}

std::int64_t TokenTree::depth() const {
    std::int64_t d = 0;
    for (const auto& n : nodes_) d = std::max<std::int64_t>(d, n.depth);
    return d;
}

std::vector<std::int32_t> TokenTree::children(std::int32_t id) const {
    std::vector<std::int32_t> out;
    for (const auto& n : nodes_)
        if (n.parent == id && n.id != 0) out.push_back(n.id);
    return out;
}

std::vector<std::int32_t> TokenTree::path(std::int32_t id) const {
    std::vector<std::int32_t> out;
    for (std::int32_t cur = id; cur != 0; cur = node(cur).parent) out.push_back(cur);
    std::reverse(out.begin(), out.end());
    return out;
}

void TokenTree::validate() const {
    if (nodes_.empty() || nodes_[0].parent != -1 || nodes_[0].head != -1)
        throw InvariantViolation("tree must start with the root");
    for (std::size_t i = 1; i < nodes_.size(); ++i) {
        const auto& n = nodes_[i];
        if (n.id != static_cast<std::int32_t>(i)) throw InvariantViolation("node ids must be dense");
        if (n.parent < 0 || n.parent >= n.id) throw InvariantViolation("parent must precede child");
        const auto& p = nodes_[static_cast<std::size_t>(n.parent)];
        if (n.head != p.head + 1) throw InvariantViolation("head index must step by one along a path");
        for (std::size_t j = 1; j < i; ++j)
            if (nodes_[j].parent == n.parent && nodes_[j].rank == n.rank)
                throw InvariantViolation("duplicate (parent, rank) child");
    }
}

double path_acceptance(const TokenTree& tree, std::int32_t node, const HeadStats& stats) {
    double prod = 1.0;
    for (auto id : tree.path(node)) {
        const auto& n = tree.node(id);
        prod *= stats.at(n.head, n.rank);
    }
    return prod;
}

double expected_accept_length(const TokenTree& tree, const HeadStats& stats) {
    // Path products accumulate parent-first because parents precede children.
    std::vector<double> prod(static_cast<std::size_t>(tree.size()), 1.0);
    double sum = 0.0;
    for (const auto& n : tree.nodes()) {
        if (n.id == 0) continue;
        prod[static_cast<std::size_t>(n.id)] =
            prod[static_cast<std::size_t>(n.parent)] * stats.at(n.head, n.rank);
        sum += prod[static_cast<std::size_t>(n.id)];
    }
    return sum;
}

double objective_value(ObjectiveMode mode, double expected_accept, const IterationCost& cost) {
    const double tokens = 1.0 + expected_accept;
    switch (mode) {
    case ObjectiveMode::Accuracy: return expected_accept;
    case ObjectiveMode::Throughput: return tokens / cost.latency_s;
    case ObjectiveMode::Energy: return tokens / cost.energy_j;
    case ObjectiveMode::Edp: return tokens * tokens / (cost.latency_s * cost.energy_j);
    }
    return 0.0;
}

TokenTree explore_tree(const HeadStats& stats, const CostEstimator& hw, const Objective& obj) {
    if (stats.n_heads() == 0 || stats.k_max() == 0) throw ConfigError("explore_tree: empty head stats");
    if (obj.budget < 0) throw ConfigError("explore_tree: node budget must be >= 0");
    if (obj.mode != ObjectiveMode::Accuracy && !hw)
        throw ConfigError("explore_tree: objective needs a hardware estimator");

    TokenTree tree;
    std::vector<double> prod{1.0};
    double expected = 0.0;
    auto cost_of = [&](std::int64_t drafts) {
        return obj.mode == ObjectiveMode::Accuracy ? IterationCost{} : hw(drafts);
    };
    double best = objective_value(obj.mode, expected, cost_of(0));

    // Candidate key: higher product first, then shallower, lower head, lower rank, lower parent.
    using Key = std::tuple<double, std::int32_t, std::int32_t, std::int32_t, std::int32_t>;
    while (tree.draft_count() < obj.budget) {
        std::optional<Key> pick;
        auto better = [](const Key& a, const Key& b) {
            if (std::get<0>(a) != std::get<0>(b)) return std::get<0>(a) > std::get<0>(b);
            return std::make_tuple(std::get<1>(a), std::get<2>(a), std::get<3>(a), std::get<4>(a)) <
                   std::make_tuple(std::get<1>(b), std::get<2>(b), std::get<3>(b), std::get<4>(b));
        };
        for (const auto& n : tree.nodes()) {
            const std::int32_t head = n.head + 1;
            if (head >= stats.n_heads()) continue;
            for (std::int32_t k = 1; k <= stats.k_max(); ++k) {
                if (tree.contains(n.id, k)) continue;
                Key c{prod[static_cast<std::size_t>(n.id)] * stats.at(head, k), n.depth + 1, head, k, n.id};
                if (!pick || better(c, *pick)) pick = c;
            }
        }
        if (!pick) break;
        const auto [p, depth, head, rank, parent] = *pick;
        const double cand = objective_value(obj.mode, expected + p, cost_of(tree.draft_count() + 1));
        if (!(cand > best)) break;
        tree.add(parent, rank);
        prod.push_back(p);
        expected += p;
        best = cand;
    }
    return tree;
}

void update_stats(HeadStats& stats, const VerificationOutcome& outcome) {
    const double lambda = stats.ewma_decay;
    const std::int64_t heads = std::min<std::int64_t>(
        {outcome.observed_heads, stats.n_heads(), static_cast<std::int64_t>(outcome.head_rank.size())});
    stats.observations.resize(stats.p.size(), 0);
    for (std::int64_t i = 0; i < heads; ++i) {
        auto& row = stats.p[static_cast<std::size_t>(i)];
        const std::int32_t hit = outcome.head_rank[static_cast<std::size_t>(i)];
        for (std::size_t k = 0; k < row.size(); ++k) {
            const double ind = static_cast<std::int32_t>(k + 1) == hit ? 1.0 : 0.0;
            row[k] = (1.0 - lambda) * row[k] + lambda * ind;
        }
        std::sort(row.begin(), row.end(), std::greater<>());
        ++stats.observations[static_cast<std::size_t>(i)];
    }
}

// ---------------------------------------------------------------------------

double optimal_ratio(std::int64_t l_spec, const SystemConfig& sys) {
    const double passes = static_cast<double>(pim_passes(l_spec, sys.pim));
    const double b_eff = sys.pim.total_bw() / passes;
    if (!(sys.dram.offchip_bw > 0)) throw ConfigError("dram.offchip_bw must be positive");
    return b_eff / (b_eff + sys.dram.offchip_bw);
}

std::int64_t group_of(std::int64_t l_spec, const SystemConfig& sys, std::int64_t cap) {
    if (cap < 1) throw ConfigError("group cap must be >= 1");
    return std::min(pim_passes(l_spec, sys.pim), cap);
}

double ResidencyBudget::min_ratio() const {
    if (eligible_bytes == 0) return 0.0;
    const double need = static_cast<double>(eligible_bytes + dram_fixed_bytes) - static_cast<double>(dram_capacity);
    return std::clamp(need / static_cast<double>(eligible_bytes), 0.0, 1.0);
}

double ResidencyBudget::max_ratio() const {
    if (eligible_bytes == 0) return 1.0;
    return std::clamp(static_cast<double>(pim_capacity) / static_cast<double>(eligible_bytes), 0.0, 1.0);
}

ResidencyBudget residency_budget(const ModelSpec& spec, const SystemConfig& sys, std::int64_t max_seq_len) {
    ResidencyBudget b;
    // KV at the longest sequence counts as eligible: attention splits like any matrix op.
    for (const auto& op : decode_op_graph(spec, KVState{max_seq_len}, 1))
        if (op.pim_eligible) b.eligible_bytes += op.weight_bytes;
    b.dram_fixed_bytes = total_weight_bytes(spec) - streamed_weight_bytes(spec);
    b.pim_capacity = sys.pim.capacity();
    b.dram_capacity = sys.dram.capacity();
    return b;
}

PartitionTable PartitionTable::build(const SystemConfig& sys, const ResidencyBudget& budget, std::int64_t cap) {
    if (cap < 1) throw ConfigError("group cap must be >= 1");
    const double lo = budget.min_ratio();
    const double hi = budget.max_ratio();
    if (lo > hi + 1e-12)
        throw ConfigError(fmt::format("no feasible DRAM/PIM split: need >= {:.3f} on PIM, room for {:.3f}", lo, hi));
    PartitionTable t;
    t.cap = cap;
    t.ratio.assign(static_cast<std::size_t>(cap + 1), 0.0);
    for (std::int64_t g = 1; g <= cap; ++g)
        t.ratio[static_cast<std::size_t>(g)] =
            std::clamp(optimal_ratio(g * sys.pim.alus_per_mpu, sys), lo, hi);
    return t;
}

double PartitionTable::at(std::int64_t group) const {
    if (group < 1 || group > cap) throw ContractViolation(fmt::format("group {} outside [1, {}]", group, cap));
    return ratio[static_cast<std::size_t>(group)];
}

PartitionState PartitionState::initial(const PartitionTable& table, std::int64_t group) {
    PartitionState s;
    s.group_id = group;
    s.ratio_on_pim = table.at(group);
    s.counters.assign(static_cast<std::size_t>(table.cap + 1), 0);
    return s;
}

std::vector<TileMove> plan_tiles(const std::vector<OpDescriptor>& ops, double from, double to,
                                 std::int64_t tile_cols) {
    if (tile_cols < 1) throw ContractViolation("plan_tiles: tile_cols must be >= 1");
    std::vector<TileMove> tiles;
    for (const auto& op : ops) {
        if (!op.pim_eligible || op.n == 0) continue;
        const std::int64_t a = columns_for_ratio(op, from);
        const std::int64_t b = columns_for_ratio(op, to);
        // PIM holds the trailing columns [n - pim_cols, n).
        const std::int64_t begin = op.n - std::max(a, b);
        const std::int64_t end = op.n - std::min(a, b);
        const std::uint64_t col_bytes = op.weight_bytes / static_cast<std::uint64_t>(op.n);
        for (std::int64_t c = begin; c < end; c += tile_cols) {
            TileMove t;
            t.op = op.name;
            t.layer = op.layer;
            t.col_begin = c;
            t.cols = std::min(tile_cols, end - c);
            t.bytes = col_bytes * static_cast<std::uint64_t>(t.cols);
            tiles.push_back(std::move(t));
        }
    }
    return tiles;
}

std::optional<ReallocationPlan> dau_step(PartitionState& state, std::int64_t observed_l_spec,
                                         const DauContext& ctx) {
    if (!ctx.sys || !ctx.table) throw ContractViolation("dau_step: context incomplete");
    const auto& table = *ctx.table;
    if (state.counters.size() != static_cast<std::size_t>(table.cap + 1))
        state.counters.assign(static_cast<std::size_t>(table.cap + 1), 0);

    const std::int64_t g = group_of(observed_l_spec, *ctx.sys, table.cap);
    state.l_spec = observed_l_spec;
    state.n_token = observed_l_spec;

    if (g == state.group_id) {
        std::fill(state.counters.begin(), state.counters.end(), 0);
        return std::nullopt;
    }
    auto& c = state.counters[static_cast<std::size_t>(g)];
    const std::uint8_t next = static_cast<std::uint8_t>(std::min(3, c + 1));
    std::fill(state.counters.begin(), state.counters.end(), 0);
    c = next;
    if (c < 2) return std::nullopt;

    ReallocationPlan plan;
    plan.from_group = state.group_id;
    plan.to_group = g;
    plan.from_ratio = state.ratio_on_pim;
    plan.to_ratio = table.at(g);
    plan.direction = plan.to_ratio >= plan.from_ratio ? ReallocDirection::DramToPim
                                                      : ReallocDirection::PimToDram;
    if (ctx.budget) {
        const double resident = plan.to_ratio * static_cast<double>(ctx.budget->eligible_bytes);
        if (resident > static_cast<double>(ctx.budget->pim_capacity))
            throw AllocationError(fmt::format("reallocation to ratio {:.3f} needs {:.0f} B on PIM, capacity {}",
                                              plan.to_ratio, resident, ctx.budget->pim_capacity));
    }
    if (ctx.eligible_ops) {
        plan.tiles = plan_tiles(*ctx.eligible_ops, plan.from_ratio, plan.to_ratio, ctx.tile_cols);
        for (const auto& t : plan.tiles) plan.bytes += t.bytes;
    } else if (ctx.budget) {
        plan.bytes = static_cast<std::uint64_t>(std::llround(
            std::abs(plan.to_ratio - plan.from_ratio) * static_cast<double>(ctx.budget->eligible_bytes)));
    }

    state.group_id = g;
    state.ratio_on_pim = plan.to_ratio;
    std::fill(state.counters.begin(), state.counters.end(), 0);
    return plan;
}

ReallocProgress realloc_plan_schedule(std::uint64_t pending, ReallocDirection direction,
                                      std::uint64_t npu_reads_of_migrating, BusTimeline& timeline,
                                      std::int64_t total_cycles, const SystemConfig& sys, bool overlap) {
    ReallocProgress r;
    if (pending == 0) return r;
    if (!overlap) {
        r.serialized = pending;
        r.added_latency_s = static_cast<double>(pending) / sys.dram.offchip_bw;
        return r;
    }
    std::uint64_t remaining = pending;
    if (direction == ReallocDirection::DramToPim) {
        r.piggybacked = std::min(remaining, npu_reads_of_migrating);
        remaining -= r.piggybacked;
    }
    const double per_cycle = sys.dram.offchip_bw * sys.timing.clock_period_s;
    if (remaining > 0 && total_cycles > 0)
        r.overlapped = fill_idle_with_copy(timeline, total_cycles, remaining, per_cycle);
    r.residue = remaining - r.overlapped;
    return r;
}

} // namespace pimspec
