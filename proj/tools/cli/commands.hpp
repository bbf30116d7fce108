#pragma once

#include "config.hpp"

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace pimspec::cli {

inline constexpr const char* kWorkersEnv = "PIMSPEC_MAX_WORKERS";

struct RunOptions {
    std::string config;
    std::string mode;
    std::optional<std::uint64_t> seed;
    std::optional<std::int64_t> l_spec;
    std::optional<std::int64_t> l_in;
    std::optional<std::int64_t> l_out;
    std::string out_dir;   // empty: config output.dir
    std::string trace_nmc; // empty: no trace
};

struct SweepOptions {
    std::string config;
    std::string out_dir;
    std::string trace_nmc;
};

int cmd_validate(const std::string& path, std::ostream& out, std::ostream& err);
int cmd_run(const RunOptions& opt, std::ostream& out, std::ostream& err);
int cmd_sweep(const SweepOptions& opt, std::ostream& out, std::ostream& err);

/// Full CLI: parses argv and dispatches. Returns the process exit status
/// (0 ok, 1 configuration error, 2 runtime contract violation).
int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);

std::vector<SweepPoint> sweep_points(const ExperimentConfig& cfg);

/// Runs every point on a bounded pool; results come back in point order.
std::vector<SweepResult> run_sweep(const ExperimentConfig& cfg, std::size_t workers);

/// min(jobs, hardware threads, $PIMSPEC_MAX_WORKERS), at least 1.
std::size_t worker_count(std::size_t jobs);

std::string file_stem(const SweepPoint& p);

/// Replays a small command window of the report's first iteration (NPU
/// weight reads, buffer traffic, and the first reallocation's copy-writes if
/// the run planned one) and writes the NMC command trace.
void write_nmc_trace(const std::string& path, const RunReport& report, const SimContext& ctx);

} // namespace pimspec::cli
