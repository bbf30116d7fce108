#include "oracles.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>

namespace oracle {

std::vector<std::vector<double>> random_stats(std::mt19937_64& rng, int heads, int k_max) {
    std::uniform_real_distribution<double> u(0.01, 1.0);
    std::vector<std::vector<double>> p(static_cast<std::size_t>(heads));
    for (auto& row : p) {
        row.resize(static_cast<std::size_t>(k_max));
        for (auto& v : row) v = u(rng);
        std::sort(row.begin(), row.end(), std::greater<>());
        double sum = 0;
        for (double v : row) sum += v;
        const double mass = u(rng) * 0.98;
        for (auto& v : row) v *= mass / sum;
    }
    return p;
}

namespace {

// best[j] for the subtree hanging below a node at `depth` with path product
// `prod`, using at most j nodes strictly below it.
std::vector<double> below(const std::vector<std::vector<double>>& p, std::size_t depth, double prod,
                          int budget) {
    std::vector<double> acc(static_cast<std::size_t>(budget + 1), 0.0);
    if (depth >= p.size()) return acc;
    for (double q : p[depth]) {
        const double child = prod * q;
        auto sub = below(p, depth + 1, child, budget);
        // Taking the child costs one node plus whatever goes below it.
        std::vector<double> with(static_cast<std::size_t>(budget + 1), 0.0);
        for (int j = 1; j <= budget; ++j) with[j] = child + sub[j - 1];
        std::vector<double> next = acc;
        for (int a = 0; a <= budget; ++a)
            for (int b = 1; a + b <= budget; ++b) next[a + b] = std::max(next[a + b], acc[a] + with[b]);
        acc = next;
    }
    return acc;
}

} // namespace

double best_accept_dp(const std::vector<std::vector<double>>& p, int budget) {
    return below(p, 0, 1.0, budget)[static_cast<std::size_t>(budget)];
}

double best_accept_brute(const std::vector<std::vector<double>>& p, int budget) {
    struct Node {
        int parent;
        double prod;
    };
    std::vector<Node> all;
    std::function<void(int, std::size_t, double)> grow = [&](int parent, std::size_t depth, double prod) {
        if (depth >= p.size()) return;
        for (double q : p[depth]) {
            all.push_back({parent, prod * q});
            grow(static_cast<int>(all.size()) - 1, depth + 1, prod * q);
        }
    };
    grow(-1, 0, 1.0);

    std::vector<char> in(all.size(), 0);
    double best = 0.0;
    std::function<void(std::size_t, int, double)> go = [&](std::size_t i, int used, double value) {
        best = std::max(best, value);
        if (i == all.size() || used == budget) return;
        go(i + 1, used, value);
        const int par = all[i].parent;
        if (par < 0 || in[static_cast<std::size_t>(par)]) {
            in[i] = 1;
            go(i + 1, used + 1, value + all[i].prod);
            in[i] = 0;
        }
    };
    go(0, 0, 0.0);
    return best;
}

double accept_length(const pimspec::TokenTree& tree, const std::vector<std::vector<double>>& p) {
    double total = 0.0;
    for (const auto& n : tree.nodes()) {
        if (n.id == 0) continue;
        double prod = 1.0;
        for (std::int32_t cur = n.id; cur != 0; cur = tree.node(cur).parent) {
            const auto& c = tree.node(cur);
            prod *= p[static_cast<std::size_t>(c.head)][static_cast<std::size_t>(c.rank - 1)];
        }
        total += prod;
    }
    return total;
}

pimspec::TokenTree random_tree(std::mt19937_64& rng, int heads, int k_max, int nodes) {
    pimspec::TokenTree t;
    while (t.draft_count() < nodes) {
        std::uniform_int_distribution<std::int32_t> pick(0, static_cast<std::int32_t>(t.size()) - 1);
        std::uniform_int_distribution<std::int32_t> rank(1, k_max);
        const auto parent = pick(rng);
        if (t.node(parent).head + 1 >= heads) continue;
        const auto r = rank(rng);
        if (!t.contains(parent, r)) t.add(parent, r);
    }
    return t;
}

std::uint64_t matrix_flops(const pimspec::ModelSpec& m, std::int64_t rows, std::int64_t ctx) {
    const std::uint64_t d = static_cast<std::uint64_t>(m.d_model);
    const std::uint64_t f = static_cast<std::uint64_t>(m.d_ffn);
    const std::uint64_t r = static_cast<std::uint64_t>(rows);
    const std::uint64_t c = static_cast<std::uint64_t>(ctx);
    const std::uint64_t v = static_cast<std::uint64_t>(m.vocab);
    std::uint64_t per_layer = 0;
    per_layer += 2 * r * (3 * d) * d; // q, k, v
    per_layer += 2 * r * c * d;       // scores
    per_layer += 2 * r * d * c;       // weighted values
    per_layer += 2 * r * d * d;       // output projection
    per_layer += 2 * 2 * r * f * d;   // gate, up
    per_layer += 2 * r * d * f;       // down
    const std::uint64_t heads = 2 * r * v * d * (1 + static_cast<std::uint64_t>(m.n_decode_heads));
    return per_layer * static_cast<std::uint64_t>(m.n_layers) + heads;
}

double npu_decode_seconds(const pimspec::ModelSpec& m, std::int64_t seq_len, std::int64_t l_spec,
                          const pimspec::SystemConfig& sys) {
    const double d = static_cast<double>(m.d_model);
    const double f = static_cast<double>(m.d_ffn);
    const double L = static_cast<double>(l_spec);
    const double ctx = static_cast<double>(seq_len + l_spec);
    const double layers = static_cast<double>(m.n_layers);
    const double heads = 1.0 + static_cast<double>(m.n_decode_heads);
    const double v = static_cast<double>(m.vocab);

    const double weights = layers * (4 * d * d + 3 * d * f) + heads * v * d;
    const double kv = layers * 2.0 * static_cast<double>(seq_len) * d * static_cast<double>(m.bytes_per_kv);
    // INT8 inputs and outputs of each matrix op.
    const double act_layer = L * ((d + 3 * d) + (d + ctx) + (ctx + d) + (d + d) + 2 * (d + f) + (f + d));
    const double act = layers * act_layer + heads * L * (d + v);
    const double mem = (weights * static_cast<double>(m.bytes_per_weight) + kv + act) / sys.dram.offchip_bw;

    const double vec_layer = L * (4 * d + 5 * static_cast<double>(m.n_heads) * ctx + 4 * d + 4 * f);
    const double vec = (layers * vec_layer + L * 4 * d) / sys.npu.vector_ops_per_s;
    return mem + vec;
}

std::size_t Csv::col(const std::string& name) const {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw std::runtime_error("no column " + name);
    return static_cast<std::size_t>(it - header.begin());
}

double Csv::num(std::size_t row, const std::string& name) const { return std::stod(rows.at(row).at(col(name))); }

const std::string& Csv::str(std::size_t row, const std::string& name) const { return rows.at(row).at(col(name)); }

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

Csv read_csv(const std::string& path) {
    Csv csv;
    std::istringstream in(read_file(path));
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream ls(line);
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        if (!line.empty() && line.back() == ',') cells.emplace_back();
        if (first) {
            csv.header = std::move(cells);
            first = false;
        } else {
            csv.rows.push_back(std::move(cells));
        }
    }
    return csv;
}

} // namespace oracle
