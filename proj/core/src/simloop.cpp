#include "pimspec/simloop.hpp"

#include "pimspec/error.hpp"
#include "pimspec/nmc.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <ostream>
#include <tuple>

namespace pimspec {

std::string_view to_string(Mode mode) {
    switch (mode) {
    case Mode::NpuSi: return "npu-si";
    case Mode::PimSi: return "pim-si";
    case Mode::LpSpec: return "lp-spec";
    case Mode::LpSpecCoproc: return "lp-spec+coproc";
    case Mode::LpSpecCoprocSched: return "lp-spec+coproc+sched";
    }
    return "?";
}

Mode parse_mode(std::string_view name) {
    for (auto m : kAllModes)
        if (to_string(m) == name) return m;
    throw ConfigError(fmt::format("unknown mode '{}' (expected npu-si, pim-si, lp-spec, "
                                  "lp-spec+coproc, lp-spec+coproc+sched)",
                                  name));
}

void RunConfig::validate() const {
    if (l_in < 1) throw ConfigError("run.l_in must be >= 1");
    if (l_out < 1) throw ConfigError("run.l_out must be >= 1");
    if (trials < 1) throw ConfigError("run.trials must be >= 1");
    if (max_iterations < 0) throw ConfigError("run.max_iterations must be >= 0");
    if (fixed_l_spec && *fixed_l_spec < 1) throw ConfigError("l_spec must be >= 1");
    if (!fixed_l_spec && mode != Mode::LpSpecCoprocSched)
        throw ConfigError(fmt::format("mode {} needs a fixed l_spec", to_string(mode)));
}

double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::vector<std::int32_t> sample_truth(const HeadStats& truth, std::mt19937_64& rng, OracleMode mode) {
    for (std::int64_t i = 0; i < truth.n_heads(); ++i)
        if (truth.mass(i) > 1.0 + 1e-9)
            throw InvariantViolation(fmt::format("oracle head {} has probability mass {} > 1", i, truth.mass(i)));
    std::vector<std::int32_t> out(static_cast<std::size_t>(truth.n_heads()), 0);
    const double shared = mode == OracleMode::Correlated ? uniform01(rng) : 0.0;
    for (std::int64_t i = 0; i < truth.n_heads(); ++i) {
        const double u = mode == OracleMode::Correlated ? shared : uniform01(rng);
        double acc = 0.0;
        for (std::int64_t k = 1; k <= truth.k_max(); ++k) {
            acc += truth.at(i, k);
            if (u < acc) {
                out[static_cast<std::size_t>(i)] = static_cast<std::int32_t>(k);
                break;
            }
        }
    }
    return out;
}

VerificationOutcome verify(const TokenTree& tree, std::span<const std::int32_t> truth, bool bonus_token) {
    VerificationOutcome o;
    o.head_rank.assign(truth.begin(), truth.end());
    std::int32_t cur = 0;
    for (;;) {
        std::int32_t next = -1;
        for (auto c : tree.children(cur)) {
            const auto& n = tree.node(c);
            if (n.head < static_cast<std::int32_t>(truth.size()) &&
                truth[static_cast<std::size_t>(n.head)] == n.rank) {
                next = c;
                break;
            }
        }
        if (next < 0) break;
        cur = next;
        ++o.accepted_depth;
    }
    // The verified continuation reveals one position past the accepted chain.
    o.observed_heads = std::min<std::int64_t>(o.accepted_depth + 1, static_cast<std::int64_t>(truth.size()));
    o.tokens_generated = o.accepted_depth + (bonus_token ? 1 : 0);
    if (o.tokens_generated < 1) o.tokens_generated = 1;
    return o;
}

TokenTree fixed_tree(const HeadStats& stats, std::int64_t drafts) {
    return explore_tree(stats, {}, Objective{ObjectiveMode::Accuracy, drafts});
}

double RunReport::mean_decode_latency() const {
    if (iterations.empty()) return 0.0;
    double t = 0.0;
    for (const auto& r : iterations) t += r.t_total;
    return t / static_cast<double>(iterations.size());
}

namespace {

struct ModePlan {
    Placement placement;
    const PIMConfig* pim;
};

ModePlan plan_for(Mode mode, const SystemConfig& sys) {
    switch (mode) {
    case Mode::NpuSi: return {Placement::NpuOnly, &sys.pim};
    case Mode::PimSi: return {Placement::PimOnly, &sys.baseline_pim};
    case Mode::LpSpec: return {Placement::PimOnly, &sys.pim};
    case Mode::LpSpecCoproc:
    case Mode::LpSpecCoprocSched: return {Placement::CoProcess, &sys.pim};
    }
    return {Placement::NpuOnly, &sys.pim};
}

std::uint64_t kv_bytes_per_token(const ModelSpec& m) { return kv_cache_bytes(m, 1); }

HeadStats initial_stats(const SimContext& ctx) {
    const auto& s = ctx.sched;
    if (!s.prior_table.empty()) return HeadStats::from_table(s.prior_table, s.ewma_decay);
    return HeadStats::prior(ctx.model.n_decode_heads, s.k_max, s.prior_scale, s.ewma_decay);
}

// The run state one trial needs; split out so trials reuse the setup.
struct TrialResult {
    double t_prefill = 0.0;
    double e_prefill = 0.0;
    std::vector<IterationRecord> records;
};

TrialResult run_trial(const RunConfig& cfg, const SimContext& ctx, std::uint64_t seed) {
    const auto& model = ctx.model;
    const auto& sys = ctx.sys;
    const ModePlan mp = plan_for(cfg.mode, sys);
    const bool sched = cfg.mode == Mode::LpSpecCoprocSched;

    TrialResult out;
    {
        auto pre = prefill_op_graph(model, cfg.l_in);
        auto est = estimate_iteration(pre, sys, sys.pim, Placement::NpuOnly, 0.0, 1);
        out.t_prefill = est.latency.t_total;
        out.e_prefill = est.energy.e_total() +
                        static_cast<double>(kv_bytes_per_token(model) * static_cast<std::uint64_t>(cfg.l_in)) *
                            sys.energy.e_offchip_per_byte;
    }

    const HeadStats truth = HeadStats::from_table(ctx.oracle.truth);
    if (truth.n_heads() != model.n_decode_heads)
        throw ConfigError(fmt::format("oracle has {} heads but the model has {} decode heads",
                                      truth.n_heads(), model.n_decode_heads));

    const std::int64_t max_seq = cfg.l_in + cfg.l_out;
    const ResidencyBudget budget = residency_budget(model, sys, max_seq);
    const std::int64_t drafts_cfg = cfg.fixed_l_spec.value_or(32);

    TokenTree static_tree;
    double static_ratio = 0.0;
    if (!sched) {
        static_tree = fixed_tree(truth, drafts_cfg);
        const std::int64_t L = std::max<std::int64_t>(1, static_tree.draft_count());
        if (mp.placement == Placement::PimOnly) static_ratio = 1.0;
        if (mp.placement == Placement::CoProcess)
            static_ratio = std::clamp(optimal_ratio(L, sys), budget.min_ratio(), budget.max_ratio());
    }

    HeadStats stats = sched ? initial_stats(ctx) : truth;
    std::optional<PartitionTable> table;
    PartitionState state;
    if (sched) {
        table = PartitionTable::build(sys, budget, ctx.sched.group_cap);
        state = PartitionState::initial(*table, 1);
    }
    std::uint64_t pending = 0;
    ReallocDirection pending_dir = ReallocDirection::DramToPim;
    double pending_from_ratio = 0.0;

    std::mt19937_64 rng(seed);
    const std::int64_t cap = cfg.max_iterations > 0 ? cfg.max_iterations : 4 * cfg.l_out + 16;
    const double tck = sys.timing.clock_period_s;
    auto cycles = [&](double s) { return static_cast<std::int64_t>(std::ceil(s / tck)); };

    std::int64_t seq = cfg.l_in;
    std::int64_t generated = 0;
    for (std::int64_t it = 0; generated < cfg.l_out; ++it) {
        if (it >= cap)
            throw ContractViolation(fmt::format("decode did not finish within {} iterations", cap));

        TokenTree tree;
        if (sched) {
            const auto& tbl = *table;
            auto estimator = [&](std::int64_t drafts) {
                const std::int64_t L = std::max<std::int64_t>(1, drafts);
                const double f = tbl.at(group_of(L, sys, tbl.cap));
                auto ops = decode_op_graph(model, KVState{seq}, L);
                auto e = estimate_iteration(ops, sys, sys.pim, Placement::CoProcess, f, L);
                return IterationCost{e.latency.t_total, e.energy.e_total()};
            };
            tree = explore_tree(stats, estimator, Objective{ctx.sched.objective, drafts_cfg});
        } else {
            tree = static_tree;
        }
        const std::int64_t L = std::max<std::int64_t>(1, tree.draft_count());

        double ratio = static_ratio;
        if (sched) ratio = pending > 0 ? pending_from_ratio : state.ratio_on_pim;

        auto ops = decode_op_graph(model, KVState{seq}, L);
        auto est = estimate_iteration(ops, sys, *mp.pim, mp.placement, ratio, L);

        IterationRecord rec;
        rec.iteration = it;
        rec.seq_len = seq;
        rec.draft_nodes = tree.draft_count();
        rec.l_spec = L;
        rec.expected_accept = expected_accept_length(tree, sched ? stats : truth);
        rec.ratio_on_pim = ratio;
        rec.group_id = sched ? state.group_id : 0;
        rec.t_npu = est.latency.t_npu;
        rec.t_pim = est.latency.t_pim;
        rec.t_nonlinear = est.latency.t_nonlinear;
        rec.energy = est.energy;

        if (sched && pending > 0) {
            const double t_bus = static_cast<double>(est.bus_activation_bytes) / sys.dram.offchip_bw;
            OpBusSegment seg;
            seg.buffer_cycles = cycles(t_bus);
            seg.fetch_cycles = std::max<std::int64_t>(0, cycles(est.latency.t_npu - t_bus));
            seg.span_cycles = cycles(est.latency.t_total);
            std::int64_t total = 0;
            auto tl = build_iteration_timeline({seg}, total);
            auto prog = realloc_plan_schedule(pending, pending_dir, pending, tl, total, sys,
                                              ctx.sched.overlap_realloc);
            rec.t_realloc = prog.added_latency_s;
            rec.realloc_moved = pending - prog.residue;
            // Piggybacked bytes were already paid for by the NPU's own read.
            rec.energy.e_offchip += static_cast<double>(prog.overlapped + prog.serialized) *
                                    sys.energy.e_offchip_per_byte;
            pending = prog.residue;
        }
        rec.t_total = est.latency.t_total + rec.t_realloc;

        const auto truth_ranks = sample_truth(truth, rng, ctx.oracle.mode);
        auto outcome = verify(tree, truth_ranks, ctx.oracle.bonus_token);
        rec.accepted = outcome.accepted_depth;
        rec.tokens = std::min(outcome.tokens_generated, cfg.l_out - generated);

        double attn_on_pim = 0.0;
        if (mp.placement == Placement::PimOnly) attn_on_pim = 1.0;
        if (mp.placement == Placement::CoProcess) attn_on_pim = ratio;
        const double per_byte = attn_on_pim * sys.energy.e_internal_per_byte +
                                (1.0 - attn_on_pim) * sys.energy.e_offchip_per_byte;
        rec.e_kv_write = static_cast<double>(kv_bytes_per_token(model) * static_cast<std::uint64_t>(rec.tokens)) * per_byte;

        if (sched) {
            update_stats(stats, outcome);
            DauContext dctx{&sys, &*table, &budget, nullptr, ctx.sched.tile_cols};
            std::vector<OpDescriptor> eligible;
            for (const auto& op : ops)
                if (op.pim_eligible) eligible.push_back(op);
            dctx.eligible_ops = &eligible;
            const double before = state.ratio_on_pim;
            if (auto plan = dau_step(state, L, dctx)) {
                rec.realloc_planned = plan->bytes;
                rec.realloc_dir = plan->direction == ReallocDirection::DramToPim ? 1 : -1;
                if (pending == 0) pending_from_ratio = before;
                pending = plan->bytes;
                pending_dir = plan->direction;
            }
        }
        rec.realloc_residue = pending;

        out.records.push_back(rec);
        seq += rec.tokens;
        generated += rec.tokens;
    }
    return out;
}

} // namespace

void check_capacity(const RunConfig& cfg, const SimContext& ctx) {
    const auto& model = ctx.model;
    const auto& sys = ctx.sys;
    const std::int64_t max_seq = cfg.l_in + cfg.l_out;
    const std::uint64_t need = total_weight_bytes(model) + kv_cache_bytes(model, max_seq);
    if (need > sys.total_capacity())
        throw ConfigError(fmt::format("{} needs {} B at sequence {} but the system holds {} B",
                                      model.name, need, max_seq, sys.total_capacity()));
    const ResidencyBudget b = residency_budget(model, sys, max_seq);
    switch (cfg.mode) {
    case Mode::NpuSi: break;
    case Mode::PimSi:
        if (b.eligible_bytes > sys.baseline_pim.capacity())
            throw ConfigError(fmt::format("pim-si places {} B on baseline PIM ranks holding {} B",
                                          b.eligible_bytes, sys.baseline_pim.capacity()));
        break;
    case Mode::LpSpec:
        if (b.eligible_bytes > sys.pim.capacity())
            throw ConfigError(fmt::format("lp-spec places {} B on PIM ranks holding {} B",
                                          b.eligible_bytes, sys.pim.capacity()));
        break;
    case Mode::LpSpecCoproc:
    case Mode::LpSpecCoprocSched:
        if (b.min_ratio() > b.max_ratio() + 1e-12)
            throw ConfigError(fmt::format("no DRAM/PIM split fits: PIM share must be >= {:.3f} but at most {:.3f} fits",
                                          b.min_ratio(), b.max_ratio()));
        break;
    }
}

RunReport run_decode(const RunConfig& cfg, const SimContext& ctx) {
    cfg.validate();
    ctx.model.validate();
    ctx.sys.validate();
    check_capacity(cfg, ctx);

    RunReport r;
    r.mode = cfg.mode;
    r.l_in = cfg.l_in;
    r.l_out = cfg.l_out;
    r.l_spec = cfg.fixed_l_spec.value_or(0);
    r.seed = cfg.seed;

    for (std::int64_t t = 0; t < cfg.trials; ++t) {
        const std::uint64_t seed = cfg.seed + static_cast<std::uint64_t>(t) * 0x9E3779B97F4A7C15ull;
        auto trial = run_trial(cfg, ctx, seed);
        r.t_prefill += trial.t_prefill;
        r.e_prefill += trial.e_prefill;
        for (auto& rec : trial.records) r.iterations.push_back(std::move(rec));
    }

    r.total_latency = r.t_prefill;
    r.total_energy = r.e_prefill;
    for (const auto& rec : r.iterations) {
        r.total_latency += rec.t_total;
        r.total_energy += rec.e_total();
        r.tokens += rec.tokens;
    }
    const double tokens = static_cast<double>(r.tokens);
    r.tokens_per_s = tokens / r.total_latency;
    r.tokens_per_j = tokens / r.total_energy;
    r.edp = r.total_latency * r.total_energy;
    r.edp_per_token_smj = (r.total_latency / tokens) * (r.total_energy * 1e3 / tokens);
    return r;
}

double geomean(std::span<const double> values) {
    if (values.empty()) throw ContractViolation("geomean: no values");
    double s = 0.0;
    for (double v : values) {
        if (!(v > 0.0)) throw ContractViolation(fmt::format("geomean: nonpositive value {}", v));
        s += std::log(v);
    }
    return std::exp(s / static_cast<double>(values.size()));
}

SweepSummary aggregate(const std::vector<SweepResult>& results) {
    if (results.empty()) throw ContractViolation("aggregate: no reports");
    using Key = std::tuple<std::int64_t, std::int64_t, std::int64_t, std::uint64_t>;
    auto key = [](const SweepPoint& p) { return Key{p.l_in, p.l_out, p.l_spec, p.seed}; };
    std::map<Key, const RunReport*> npu;
    std::map<Key, const RunReport*> pim;
    for (const auto& r : results) {
        if (r.point.mode == Mode::NpuSi) npu[key(r.point)] = &r.report;
        if (r.point.mode == Mode::PimSi) pim[key(r.point)] = &r.report;
    }

    SweepSummary s;
    std::map<Mode, std::vector<double>> sp, en, vp;
    for (const auto& r : results) {
        RatioCell c;
        c.point = r.point;
        auto n = npu.find(key(r.point));
        if (n != npu.end()) {
            c.speedup_vs_npu = r.report.tokens_per_s / n->second->tokens_per_s;
            c.energy_gain_vs_npu = r.report.tokens_per_j / n->second->tokens_per_j;
            sp[r.point.mode].push_back(c.speedup_vs_npu);
            en[r.point.mode].push_back(c.energy_gain_vs_npu);
        } else if (results.size() == 1) {
            c.speedup_vs_npu = 1.0;
            c.energy_gain_vs_npu = 1.0;
            sp[r.point.mode].push_back(1.0);
            en[r.point.mode].push_back(1.0);
        }
        auto p = pim.find(key(r.point));
        if (p != pim.end()) {
            c.speedup_vs_pim = r.report.tokens_per_s / p->second->tokens_per_s;
            vp[r.point.mode].push_back(c.speedup_vs_pim);
        }
        s.cells.push_back(c);
    }
    for (auto& [m, v] : sp) s.geomean_speedup_vs_npu[m] = geomean(v);
    for (auto& [m, v] : en) s.geomean_energy_gain_vs_npu[m] = geomean(v);
    for (auto& [m, v] : vp) s.geomean_speedup_vs_pim[m] = geomean(v);
    return s;
}

namespace {

std::string num(double v) { return fmt::format("{:.9g}", v); }

} // namespace

void write_iterations_csv(std::ostream& os, const RunReport& report) {
    os << "iteration,seq_len,draft_nodes,l_spec,accepted,tokens,expected_accept,ratio_on_pim,group_id,"
          "t_npu_s,t_pim_s,t_nonlinear_s,t_realloc_s,t_total_s,e_compute_j,e_offchip_j,e_internal_j,"
          "e_onchip_j,e_kv_write_j,e_total_j,realloc_planned_bytes,realloc_dir,realloc_moved_bytes,"
          "realloc_residue_bytes\n";
    for (const auto& r : report.iterations) {
        os << fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                          r.iteration, r.seq_len, r.draft_nodes, r.l_spec, r.accepted, r.tokens,
                          num(r.expected_accept), num(r.ratio_on_pim), r.group_id, num(r.t_npu),
                          num(r.t_pim), num(r.t_nonlinear), num(r.t_realloc), num(r.t_total),
                          num(r.energy.e_compute), num(r.energy.e_offchip), num(r.energy.e_internal),
                          num(r.energy.e_onchip), num(r.e_kv_write), num(r.e_total()),
                          r.realloc_planned, r.realloc_dir, r.realloc_moved, r.realloc_residue);
    }
}

void write_summary_csv(std::ostream& os, const std::vector<SweepResult>& results) {
    os << "mode,l_in,l_out,l_spec,seed,tokens,iterations,t_prefill_s,e_prefill_j,total_latency_s,"
          "total_energy_j,tokens_per_s,tokens_per_j,edp_sj,edp_per_token_smj\n";
    for (const auto& res : results) {
        const auto& r = res.report;
        os << fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", to_string(res.point.mode),
                          res.point.l_in, res.point.l_out, res.point.l_spec, res.point.seed, r.tokens,
                          r.iterations.size(), num(r.t_prefill), num(r.e_prefill), num(r.total_latency),
                          num(r.total_energy), num(r.tokens_per_s), num(r.tokens_per_j), num(r.edp),
                          num(r.edp_per_token_smj));
    }
}

void write_ratio_table_csv(std::ostream& os, const SweepSummary& summary) {
    // Columns are (l_in, l_out, l_spec) points; seeds collapse by geomean.
    using Col = std::tuple<std::int64_t, std::int64_t, std::int64_t>;
    std::map<Col, std::map<Mode, std::vector<double>>> grid;
    for (const auto& c : summary.cells) {
        if (!(c.speedup_vs_npu > 0)) continue;
        grid[{c.point.l_in, c.point.l_out, c.point.l_spec}][c.point.mode].push_back(c.speedup_vs_npu);
    }
    os << "mode";
    for (const auto& [col, _] : grid)
        os << fmt::format(",in{}_out{}_l{}", std::get<0>(col), std::get<1>(col), std::get<2>(col));
    os << ",geomean\n";
    for (auto m : kAllModes) {
        if (!summary.geomean_speedup_vs_npu.contains(m)) continue;
        os << to_string(m);
        for (const auto& [col, by_mode] : grid) {
            auto it = by_mode.find(m);
            os << ',' << (it == by_mode.end() ? std::string() : num(geomean(it->second)));
        }
        os << ',' << num(summary.geomean_speedup_vs_npu.at(m)) << '\n';
    }
}

} // namespace pimspec
