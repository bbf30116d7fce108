#pragma once

#include "pimspec/simloop.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace pimspec::cli {

struct SweepSpec {
    std::vector<Mode> modes;
    std::vector<std::pair<std::int64_t, std::int64_t>> io; // (l_in, l_out)
    std::vector<std::int64_t> l_spec;
    std::vector<std::uint64_t> seeds;
    std::int64_t trials = 1;
    std::int64_t max_iterations = 0;
};

struct ExperimentConfig {
    SimContext ctx;
    SweepSpec sweep;
    std::string out_dir = "results";
    std::string source; // file it was loaded from
};

/// Parses a YAML experiment file. Unknown keys and malformed values raise
/// ConfigError with the file, line and key path.
ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config(const std::string& yaml_text, const std::string& source = "<string>");

/// Every violated invariant across all blocks, including capacity of each
/// swept (mode, l_in, l_out). Empty means valid.
std::vector<std::string> validate_config(const ExperimentConfig& cfg);

} // namespace pimspec::cli
