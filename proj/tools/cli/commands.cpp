#include "commands.hpp"

#include "pimspec/error.hpp"
#include "pimspec/nmc.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fmt/format.h>
#include <fstream>
#include <ostream>
#include <sstream>
#include <thread>

namespace pimspec::cli {

namespace fs = std::filesystem;

namespace {

void write_file(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw ConfigError(fmt::format("cannot write {}", path.string()));
    f << content;
}

template <typename Fn>
std::string to_text(Fn&& fn) {
    std::ostringstream ss;
    fn(ss);
    return ss.str();
}

std::string summary_line(const RunReport& r) {
    return fmt::format("{} l_in={} l_out={} l_spec={} seed={}: {:.3f} tokens/s, {:.3f} tokens/J, "
                       "EDP {:.4g} s*J ({:.4g} s*mJ per token)",
                       to_string(r.mode), r.l_in, r.l_out, r.l_spec, r.seed, r.tokens_per_s,
                       r.tokens_per_j, r.edp, r.edp_per_token_smj);
}

void require_valid(const ExperimentConfig& cfg) {
    auto v = validate_config(cfg);
    if (v.empty()) return;
    std::string msg = fmt::format("{}: {} problem(s)", cfg.source, v.size());
    for (const auto& s : v) msg += "\n  - " + s;
    throw ConfigError(msg);
}

RunConfig run_config(const ExperimentConfig& cfg, const SweepPoint& p) {
    RunConfig rc;
    rc.mode = p.mode;
    rc.l_in = p.l_in;
    rc.l_out = p.l_out;
    rc.fixed_l_spec = p.l_spec;
    rc.seed = p.seed;
    rc.trials = cfg.sweep.trials;
    rc.max_iterations = cfg.sweep.max_iterations;
    return rc;
}

template <typename Fn>
int guarded(std::ostream& err, Fn&& fn) {
    try {
        return fn();
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return 1;
    } catch (const SimError& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }
}

} // namespace

std::string file_stem(const SweepPoint& p) {
    std::string mode(to_string(p.mode));
    std::replace(mode.begin(), mode.end(), '+', '_');
    return fmt::format("{}_in{}_out{}_l{}_s{}", mode, p.l_in, p.l_out, p.l_spec, p.seed);
}

std::size_t worker_count(std::size_t jobs) {
    std::size_t n = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv(kWorkersEnv); env && *env) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end == env || *end != '\0' || v < 1)
            throw ConfigError(fmt::format("{}='{}' is not a positive integer", kWorkersEnv, env));
        n = std::min(n, static_cast<std::size_t>(v));
    }
    return std::max<std::size_t>(1, std::min(n, jobs));
}

std::vector<SweepPoint> sweep_points(const ExperimentConfig& cfg) {
    std::vector<SweepPoint> pts;
    for (auto [li, lo] : cfg.sweep.io)
        for (auto l : cfg.sweep.l_spec)
            for (auto seed : cfg.sweep.seeds)
                for (auto m : cfg.sweep.modes) pts.push_back({m, li, lo, l, seed});
    if (pts.empty()) throw ConfigError("sweep is empty");
    return pts;
}

std::vector<SweepResult> run_sweep(const ExperimentConfig& cfg, std::size_t workers) {
    const auto pts = sweep_points(cfg);
    std::vector<SweepResult> results(pts.size());
    std::vector<std::exception_ptr> errors(pts.size());
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < pts.size(); i = next++) {
            try {
                results[i] = {pts[i], run_decode(run_config(cfg, pts[i]), cfg.ctx)};
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    workers = std::max<std::size_t>(1, std::min(workers, pts.size()));
    std::vector<std::thread> pool;
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return results;
}

void write_nmc_trace(const std::string& path, const RunReport& report, const SimContext& ctx) {
    constexpr std::uint64_t kWindow = 16 * 1024;
    NearMemoryController nmc(ctx.sys.timing);
    const bool uses_pim = report.mode != Mode::NpuSi;
    const std::int64_t fetch_end =
        nmc.read_stream(RankKind::Dram, 0, 0, kWindow, 0, BusOwner::NpuDram);
    if (uses_pim) {
        GlobalBuffer::Line line{};
        for (std::uint16_t i = 0; i < 64; ++i) {
            line[0] = static_cast<std::uint8_t>(i);
            nmc.buffer_write(i, line, 0);
        }
        for (std::uint16_t i = 0; i < 64; ++i) nmc.buffer_read(static_cast<std::uint16_t>(256 + i), 0);
    }
    for (const auto& rec : report.iterations) {
        if (rec.realloc_planned == 0) continue;
        const bool to_pim = rec.realloc_dir > 0;
        const CopyEndpoint dram{RankKind::Dram, 0, 64};
        const CopyEndpoint pim{RankKind::Pim, 0, 64};
        nmc.copy_write(to_pim ? dram : pim, to_pim ? pim : dram,
                       std::min<std::uint64_t>(rec.realloc_planned, kWindow), 0);
        break;
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw ConfigError(fmt::format("cannot write {}", path));
    nmc.dump_trace(f);
    (void)fetch_end;
}

int cmd_validate(const std::string& path, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const auto cfg = load_config(path);
        const auto v = validate_config(cfg);
        if (v.empty()) {
            out << path << ": OK\n";
            return 0;
        }
        err << path << ": " << v.size() << " problem(s)\n";
        for (const auto& s : v) err << "  - " << s << '\n';
        return 1;
    });
}

int cmd_run(const RunOptions& opt, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        auto cfg = load_config(opt.config);
        SweepPoint p;
        p.mode = parse_mode(opt.mode);
        p.l_in = opt.l_in.value_or(cfg.sweep.io.empty() ? 128 : cfg.sweep.io.front().first);
        p.l_out = opt.l_out.value_or(cfg.sweep.io.empty() ? 256 : cfg.sweep.io.front().second);
        p.l_spec = opt.l_spec.value_or(cfg.sweep.l_spec.empty() ? 1 : cfg.sweep.l_spec.front());
        p.seed = opt.seed.value_or(cfg.sweep.seeds.empty() ? 1 : cfg.sweep.seeds.front());
        cfg.sweep.modes = {p.mode};
        cfg.sweep.io = {{p.l_in, p.l_out}};
        cfg.sweep.l_spec = {p.l_spec};
        cfg.sweep.seeds = {p.seed};
        require_valid(cfg);

        const RunReport r = run_decode(run_config(cfg, p), cfg.ctx);
        const fs::path dir = opt.out_dir.empty() ? fs::path(cfg.out_dir) : fs::path(opt.out_dir);
        const std::string stem = file_stem(p);
        write_file(dir / (stem + "_iterations.csv"), to_text([&](std::ostream& os) { write_iterations_csv(os, r); }));
        write_file(dir / (stem + "_summary.csv"),
                   to_text([&](std::ostream& os) { write_summary_csv(os, {{p, r}}); }));
        if (!opt.trace_nmc.empty()) write_nmc_trace(opt.trace_nmc, r, cfg.ctx);
        out << summary_line(r) << '\n';
        return 0;
    });
}

int cmd_sweep(const SweepOptions& opt, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const auto cfg = load_config(opt.config);
        require_valid(cfg);
        const auto pts = sweep_points(cfg);
        const auto results = run_sweep(cfg, worker_count(pts.size()));
        const auto summary = aggregate(results);

        const fs::path dir = opt.out_dir.empty() ? fs::path(cfg.out_dir) : fs::path(opt.out_dir);
        for (const auto& r : results)
            write_file(dir / "runs" / (file_stem(r.point) + "_iterations.csv"),
                       to_text([&](std::ostream& os) { write_iterations_csv(os, r.report); }));
        write_file(dir / "summary.csv", to_text([&](std::ostream& os) { write_summary_csv(os, results); }));
        const std::string table = to_text([&](std::ostream& os) { write_ratio_table_csv(os, summary); });
        write_file(dir / "ratio_table.csv", table);

        if (!opt.trace_nmc.empty()) {
            const auto it = std::find_if(results.begin(), results.end(), [](const SweepResult& r) {
                return r.point.mode == Mode::LpSpecCoprocSched;
            });
            write_nmc_trace(opt.trace_nmc, (it == results.end() ? results.front() : *it).report, cfg.ctx);
        }

        out << "speedup over npu-si (tokens/s ratio)\n" << table;
        for (auto m : kAllModes) {
            if (!summary.geomean_speedup_vs_npu.contains(m)) continue;
            out << fmt::format("{:<22} geomean vs npu-si {:7.3f}x", to_string(m), summary.geomean_speedup_vs_npu.at(m));
            if (summary.geomean_speedup_vs_pim.contains(m))
                out << fmt::format("  vs pim-si {:7.3f}x", summary.geomean_speedup_vs_pim.at(m));
            out << fmt::format("  energy vs npu-si {:7.3f}x\n", summary.geomean_energy_gain_vs_npu.at(m));
        }
        out << fmt::format("{} runs written to {}\n", results.size(), dir.string());
        return 0;
    });
}

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"NPU + hybrid LPDDR5-PIM speculative inference simulator"};
    app.require_subcommand(1);

    std::string validate_path;
    auto* validate = app.add_subcommand("validate", "Check every invariant of a config file");
    validate->add_option("path", validate_path, "Config file")->required();

    RunOptions ro;
    auto* run = app.add_subcommand("run", "Run one configuration and write CSVs");
    run->add_option("--config", ro.config, "Config file")->required();
    run->add_option("--mode", ro.mode, "npu-si | pim-si | lp-spec | lp-spec+coproc | lp-spec+coproc+sched")->required();
    run->add_option("--seed", ro.seed, "RNG seed");
    run->add_option("--l-spec", ro.l_spec, "Draft nodes (static tree size or pruner budget)");
    run->add_option("--l-in", ro.l_in, "Prompt length");
    run->add_option("--l-out", ro.l_out, "Tokens to generate");
    run->add_option("--out", ro.out_dir, "Output directory");
    run->add_option("--trace-nmc", ro.trace_nmc, "Write an NMC command trace to this path");

    SweepOptions so;
    auto* sweep = app.add_subcommand("sweep", "Run the configured sweep and emit ratio tables");
    sweep->add_option("--config", so.config, "Config file")->required();
    sweep->add_option("--out", so.out_dir, "Output directory");
    sweep->add_option("--trace-nmc", so.trace_nmc, "Write an NMC command trace to this path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << e.what() << "\n" << app.help();
        return 1;
    }

    if (*validate) return cmd_validate(validate_path, out, err);
    if (*run) return cmd_run(ro, out, err);
    return cmd_sweep(so, out, err);
}

} // namespace pimspec::cli
