#pragma once

// Reference computations the tests check the library against. Nothing here
// calls the code under test except for plain data types.

#include "pimspec/scheduler.hpp"
#include "pimspec/system.hpp"
#include "pimspec/workload.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace oracle {

/// Random rank-ordered accuracy table: rows non-increasing, row mass < 1.
std::vector<std::vector<double>> random_stats(std::mt19937_64& rng, int heads, int k_max);

/// Best expected acceptance length over every prefix-closed tree with at
/// most `budget` draft nodes (tree knapsack DP over the full K-ary tree).
double best_accept_dp(const std::vector<std::vector<double>>& p, int budget);

/// Same optimum by enumerating every prefix-closed node set. Small inputs only.
double best_accept_brute(const std::vector<std::vector<double>>& p, int budget);

/// Sum over draft nodes of the product of p[head][rank-1] along the path,
/// walking parent links directly.
double accept_length(const pimspec::TokenTree& tree, const std::vector<std::vector<double>>& p);

/// Random prefix-closed tree with `nodes` drafts, heads < `heads`, ranks <= `k_max`.
pimspec::TokenTree random_tree(std::mt19937_64& rng, int heads, int k_max, int nodes);

/// Memory-bound NPU decode latency from layer dimensions: every byte of
/// weights, KV and activations once over the off-chip link, plus the vector
/// work of norms, softmax and the gated activation.
double npu_decode_seconds(const pimspec::ModelSpec& m, std::int64_t seq_len, std::int64_t l_spec,
                          const pimspec::SystemConfig& sys);

/// Sum of 2*m*n*k over every matrix in a decoder pass over `rows` tokens
/// with `ctx` keys per row, walking the layer dimensions.
std::uint64_t matrix_flops(const pimspec::ModelSpec& m, std::int64_t rows, std::int64_t ctx);

struct Csv {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t col(const std::string& name) const;
    double num(std::size_t row, const std::string& name) const;
    const std::string& str(std::size_t row, const std::string& name) const;
};

Csv read_csv(const std::string& path);
std::string read_file(const std::string& path);

} // namespace oracle
