#include "config.hpp"

#include "pimspec/error.hpp"

#include <fmt/format.h>
#include <fstream>
#include <set>
#include <sstream>
#include <type_traits>
#include <yaml-cpp/yaml.h>

namespace pimspec::cli {

namespace {

class Block {
public:
    Block(YAML::Node node, std::string path, const std::string& source)
        : node_(std::move(node)), path_(std::move(path)), source_(source) {
        if (node_ && !node_.IsNull() && !node_.IsMap()) fail(node_, "expected a mapping");
    }

    bool has(const char* key) const { return node_ && node_.IsMap() && node_[key]; }

    template <typename T>
    void get(const char* key, T& out, double scale = 1.0) {
        seen_.insert(key);
        if (!has(key)) return;
        const YAML::Node v = node_[key];
        try {
            if constexpr (std::is_floating_point_v<T>) {
                out = v.as<double>() * scale;
            } else {
                out = v.as<T>();
            }
        } catch (const YAML::Exception&) {
            fail(v, fmt::format("'{}' has the wrong type", key));
        }
    }

    YAML::Node child(const char* key) {
        seen_.insert(key);
        return has(key) ? node_[key] : YAML::Node();
    }

    Block block(const char* key) { return Block(child(key), qualify(key), source_); }

    void finish() const {
        if (!node_ || !node_.IsMap()) return;
        for (const auto& kv : node_) {
            const auto key = kv.first.as<std::string>();
            if (!seen_.contains(key)) fail(kv.first, fmt::format("unknown key '{}'", qualify(key.c_str())));
        }
    }

    [[noreturn]] void fail(const YAML::Node& at, const std::string& msg) const {
        const auto mark = at.Mark();
        throw ConfigError(fmt::format("{}:{}: {}: {}", source_, mark.line + 1,
                                      path_.empty() ? "<root>" : path_, msg));
    }

    std::string qualify(const char* key) const {
        return path_.empty() ? std::string(key) : path_ + "." + key;
    }
    const std::string& source() const { return source_; }

private:
    YAML::Node node_;
    std::string path_;
    const std::string& source_;
    std::set<std::string> seen_;
};

void read_pim(Block b, PIMConfig& p) {
    b.get("n_ranks", p.n_pim_ranks);
    b.get("dies_per_rank", p.dies_per_rank);
    b.get("mpus_per_die", p.mpus_per_die);
    b.get("alus_per_mpu", p.alus_per_mpu);
    b.get("lanes_per_alu", p.lanes_per_alu);
    b.get("mac_freq_mhz", p.mac_freq_hz, 1e6);
    b.get("internal_bw_per_die_gbs", p.internal_bw_per_die, 1e9);
    double cap_gib = static_cast<double>(p.capacity_per_die) / static_cast<double>(1ull << 30);
    b.get("capacity_per_die_gib", cap_gib);
    p.capacity_per_die = static_cast<std::uint64_t>(cap_gib * static_cast<double>(1ull << 30));
    b.get("mode_switch_ns", p.mode_switch_latency_s, 1e-9);
    b.finish();
}

std::vector<std::vector<double>> read_table(Block& parent, const char* key,
                                            std::vector<std::vector<double>> fallback) {
    YAML::Node n = parent.child(key);
    if (!n || n.IsNull()) return fallback;
    try {
        return n.as<std::vector<std::vector<double>>>();
    } catch (const YAML::Exception&) {
        parent.fail(n, fmt::format("'{}' must be a list of lists of numbers", key));
    }
}

} // namespace

ExperimentConfig parse_config(const std::string& yaml_text, const std::string& source) {
    YAML::Node root;
    try {
        root = YAML::Load(yaml_text);
    } catch (const YAML::ParserException& e) {
        throw ConfigError(fmt::format("{}:{}:{}: parse error: {}", source, e.mark.line + 1,
                                      e.mark.column + 1, e.msg));
    }
    ExperimentConfig cfg;
    cfg.source = source;
    Block top(root, "", cfg.source);

    {
        Block m = top.block("model");
        std::string preset = "llama2-7b";
        m.get("preset", preset);
        auto& spec = cfg.ctx.model;
        spec = build_model_spec(preset);
        Block o = m.block("overrides");
        o.get("n_layers", spec.n_layers);
        o.get("d_model", spec.d_model);
        o.get("n_heads", spec.n_heads);
        o.get("d_head", spec.d_head);
        o.get("d_ffn", spec.d_ffn);
        o.get("vocab", spec.vocab);
        o.get("n_decode_heads", spec.n_decode_heads);
        o.get("bytes_per_weight", spec.bytes_per_weight);
        o.get("bytes_per_kv", spec.bytes_per_kv);
        o.finish();
        m.finish();
    }

    auto& sys = cfg.ctx.sys;
    {
        Block n = top.block("npu");
        n.get("matrix_tflops", sys.npu.matrix_ops_per_s, 1e12);
        n.get("vector_tflops", sys.npu.vector_ops_per_s, 1e12);
        n.get("n_cores", sys.npu.n_cores);
        n.get("freq_ghz", sys.npu.freq_hz, 1e9);
        double spm = static_cast<double>(sys.npu.scratchpad_bytes) / (1 << 20);
        double lb = static_cast<double>(sys.npu.local_buffer_bytes) / (1 << 10);
        n.get("scratchpad_mib", spm);
        n.get("local_buffer_kib", lb);
        sys.npu.scratchpad_bytes = static_cast<std::uint64_t>(spm * (1 << 20));
        sys.npu.local_buffer_bytes = static_cast<std::uint64_t>(lb * (1 << 10));
        n.finish();
    }
    read_pim(top.block("pim"), sys.pim);
    read_pim(top.block("baseline_pim"), sys.baseline_pim);
    {
        Block d = top.block("dram");
        d.get("n_ranks", sys.dram.n_dram_ranks);
        d.get("dies_per_rank", sys.dram.dies_per_rank);
        d.get("offchip_bw_gbs", sys.dram.offchip_bw, 1e9);
        double cap_gib = static_cast<double>(sys.dram.capacity_per_die) / static_cast<double>(1ull << 30);
        d.get("capacity_per_die_gib", cap_gib);
        sys.dram.capacity_per_die = static_cast<std::uint64_t>(cap_gib * static_cast<double>(1ull << 30));
        d.finish();
    }
    {
        Block t = top.block("timing");
        auto& tp = sys.timing;
        t.get("t_rp", tp.t_rp);
        t.get("t_rcd", tp.t_rcd);
        t.get("t_ras", tp.t_ras);
        t.get("t_rrd", tp.t_rrd);
        t.get("t_wr", tp.t_wr);
        t.get("t_rc", tp.t_rc);
        t.get("t_ccd", tp.t_ccd);
        t.get("t_faw", tp.t_faw);
        t.get("t_cl", tp.t_cl);
        t.get("t_cwl", tp.t_cwl);
        t.get("clock_ns", tp.clock_period_s, 1e-9);
        t.finish();
    }
    {
        Block e = top.block("energy");
        auto& ep = sys.energy;
        e.get("offchip_pj_per_byte", ep.e_offchip_per_byte, 1e-12);
        e.get("internal_pj_per_byte", ep.e_internal_per_byte, 1e-12);
        e.get("onchip_pj_per_byte", ep.e_onchip_per_byte, 1e-12);
        e.get("npu_mac_pj", ep.e_npu_mac, 1e-12);
        e.get("pim_mac_pj", ep.e_pim_mac, 1e-12);
        e.finish();
    }
    {
        std::string combine = "max";
        top.get("latency_combine", combine);
        if (combine == "max") sys.latency_combine = LatencyCombine::Max;
        else if (combine == "min") sys.latency_combine = LatencyCombine::Min;
        else top.fail(top.child("latency_combine"), "latency_combine must be 'max' or 'min'");
    }
    {
        Block s = top.block("scheduler");
        auto& sc = cfg.ctx.sched;
        std::string objective = "throughput";
        s.get("objective", objective);
        if (objective == "throughput") sc.objective = ObjectiveMode::Throughput;
        else if (objective == "energy") sc.objective = ObjectiveMode::Energy;
        else if (objective == "edp") sc.objective = ObjectiveMode::Edp;
        else if (objective == "accuracy") sc.objective = ObjectiveMode::Accuracy;
        else s.fail(s.child("objective"), "objective must be throughput, energy, edp or accuracy");
        s.get("ewma_decay", sc.ewma_decay);
        s.get("prior_scale", sc.prior_scale);
        sc.prior_table = read_table(s, "prior", {});
        s.get("k_max", sc.k_max);
        s.get("group_cap", sc.group_cap);
        s.get("tile_cols", sc.tile_cols);
        s.get("overlap_realloc", sc.overlap_realloc);
        s.finish();
    }
    {
        Block o = top.block("oracle");
        auto& oc = cfg.ctx.oracle;
        std::string mode = "independent";
        o.get("mode", mode);
        if (mode == "independent") oc.mode = OracleMode::Independent;
        else if (mode == "correlated") oc.mode = OracleMode::Correlated;
        else o.fail(o.child("mode"), "oracle.mode must be 'independent' or 'correlated'");
        o.get("bonus_token", oc.bonus_token);
        oc.truth = read_table(o, "truth", oc.truth);
        o.finish();
    }
    {
        Block r = top.block("run");
        auto& sw = cfg.sweep;
        std::vector<std::string> modes;
        for (auto m : kAllModes) modes.emplace_back(to_string(m));
        r.get("modes", modes);
        for (const auto& m : modes) {
            try {
                sw.modes.push_back(parse_mode(m));
            } catch (const ConfigError& e) {
                r.fail(r.child("modes"), e.what());
            }
        }
        std::vector<std::vector<std::int64_t>> io = {{128, 256}, {256, 512}};
        r.get("io", io);
        for (const auto& p : io) {
            if (p.size() != 2) r.fail(r.child("io"), "each io entry must be [l_in, l_out]");
            sw.io.emplace_back(p[0], p[1]);
        }
        sw.l_spec = {1, 2, 4, 8, 16, 32};
        r.get("l_spec", sw.l_spec);
        sw.seeds = {1};
        r.get("seeds", sw.seeds);
        r.get("trials", sw.trials);
        r.get("max_iterations", sw.max_iterations);
        r.finish();
    }
    {
        Block o = top.block("output");
        o.get("dir", cfg.out_dir);
        o.finish();
    }
    top.finish();
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(fmt::format("{}: cannot open config file", path));
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path);
}

std::vector<std::string> validate_config(const ExperimentConfig& cfg) {
    std::vector<std::string> out;
    auto guard = [&](auto&& fn) {
        try {
            fn();
        } catch (const SimError& e) {
            out.emplace_back(e.what());
        }
    };
    const auto& ctx = cfg.ctx;
    guard([&] { ctx.model.validate(); });
    for (auto& v : ctx.sys.violations()) out.push_back(std::move(v));

    const auto& sc = ctx.sched;
    if (!(sc.ewma_decay >= 0 && sc.ewma_decay <= 1)) out.emplace_back("scheduler.ewma_decay must be in [0, 1]");
    if (sc.k_max < 1) out.emplace_back("scheduler.k_max must be >= 1");
    if (sc.group_cap < 1) out.emplace_back("scheduler.group_cap must be >= 1");
    if (sc.tile_cols < 1) out.emplace_back("scheduler.tile_cols must be >= 1");
    if (sc.prior_table.empty()) {
        guard([&] { HeadStats::prior(ctx.model.n_decode_heads, std::max<std::int64_t>(1, sc.k_max), sc.prior_scale); });
    } else {
        guard([&] { HeadStats::from_table(sc.prior_table); });
        if (static_cast<std::int64_t>(sc.prior_table.size()) != ctx.model.n_decode_heads)
            out.emplace_back("scheduler.prior must have one row per decode head");
    }
    guard([&] { HeadStats::from_table(ctx.oracle.truth); });
    if (static_cast<std::int64_t>(ctx.oracle.truth.size()) != ctx.model.n_decode_heads)
        out.emplace_back(fmt::format("oracle.truth has {} rows but the model has {} decode heads",
                                     ctx.oracle.truth.size(), ctx.model.n_decode_heads));

    const auto& sw = cfg.sweep;
    if (sw.modes.empty()) out.emplace_back("run.modes is empty");
    if (sw.io.empty()) out.emplace_back("run.io is empty");
    if (sw.l_spec.empty()) out.emplace_back("run.l_spec is empty");
    if (sw.seeds.empty()) out.emplace_back("run.seeds is empty");
    if (sw.trials < 1) out.emplace_back("run.trials must be >= 1");
    if (sw.max_iterations < 0) out.emplace_back("run.max_iterations must be >= 0");
    for (auto [li, lo] : sw.io)
        if (li < 1 || lo < 1) out.emplace_back(fmt::format("run.io entry [{}, {}] must be positive", li, lo));
    for (auto l : sw.l_spec)
        if (l < 1) out.emplace_back(fmt::format("run.l_spec entry {} must be >= 1", l));

    if (out.empty()) {
        std::set<std::string> seen;
        for (auto mode : sw.modes)
            for (auto [li, lo] : sw.io) {
                RunConfig rc;
                rc.mode = mode;
                rc.l_in = li;
                rc.l_out = lo;
                guard([&] { check_capacity(rc, ctx); });
            }
        std::vector<std::string> unique;
        for (auto& s : out)
            if (seen.insert(s).second) unique.push_back(s);
        out = std::move(unique);
    }
    return out;
}

} // namespace pimspec::cli
