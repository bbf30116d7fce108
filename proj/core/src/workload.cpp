#include "pimspec/workload.hpp"

#include "pimspec/error.hpp"

#include <cmath>
#include <fmt/format.h>

namespace pimspec {

namespace {

// INT8 activations everywhere; only the KV cache carries its own width.
constexpr std::int64_t kBytesPerActivation = 1;

// Rough per-element costs of the vector-unit kernels.
constexpr std::uint64_t kNormFlopsPerElem = 4;
constexpr std::uint64_t kSoftmaxFlopsPerElem = 5;
constexpr std::uint64_t kGatedActFlopsPerElem = 4;

std::uint64_t u64(std::int64_t v) { return static_cast<std::uint64_t>(v); }

OpDescriptor matrix_op(OpKind kind, std::string name, std::int32_t layer, std::int64_t m,
                       std::int64_t n, std::int64_t k, std::uint64_t weight_bytes) {
    OpDescriptor op;
    op.kind = kind;
    op.name = std::move(name);
    op.layer = layer;
    op.m = m;
    op.n = n;
    op.k = k;
    op.weight_bytes = weight_bytes;
    op.activation_bytes = u64(m * (k + n) * kBytesPerActivation);
    op.flops = 2 * u64(m) * u64(n) * u64(k);
    op.pim_eligible = true;
    return op;
}

OpDescriptor nonlinear_op(std::string name, std::int32_t layer, std::int64_t m,
                          std::int64_t width, std::uint64_t flops_per_elem) {
    OpDescriptor op;
    op.kind = OpKind::Nonlinear;
    op.name = std::move(name);
    op.layer = layer;
    op.m = m;
    op.n = width;
    op.k = 0;
    op.flops = flops_per_elem * u64(m) * u64(width);
    op.pim_eligible = false;
    return op;
}

// Shared walk for decode and prefill. `rows` is the number of tokens in the
// pass; `cached` is the number of tokens whose K/V come from memory.
std::vector<OpDescriptor> build_graph(const ModelSpec& s, std::int64_t rows,
                                      std::int64_t cached) {
    const std::int64_t d = s.d_model;
    const std::int64_t bpw = s.bytes_per_weight;
    const std::int64_t ctx = cached + rows;
    const std::uint64_t kv_bytes_one = u64(cached * d * s.bytes_per_kv);

    std::vector<OpDescriptor> ops;
    ops.reserve(static_cast<std::size_t>(s.n_layers * 11 + 2 + s.n_decode_heads));
    for (std::int32_t l = 0; l < s.n_layers; ++l) {
        ops.push_back(nonlinear_op("attn_norm", l, rows, d, kNormFlopsPerElem));
        ops.push_back(matrix_op(OpKind::FC, "qkv_proj", l, rows, 3 * d, d, u64(3 * d * d * bpw)));
        ops.push_back(matrix_op(OpKind::AttentionScore, "attn_score", l, rows, ctx, d, kv_bytes_one));
        ops.push_back(nonlinear_op("softmax", l, rows, s.n_heads * ctx, kSoftmaxFlopsPerElem));
        ops.push_back(matrix_op(OpKind::AttentionContext, "attn_context", l, rows, d, ctx, kv_bytes_one));
        ops.push_back(matrix_op(OpKind::FC, "o_proj", l, rows, d, d, u64(d * d * bpw)));
        ops.push_back(nonlinear_op("ffn_norm", l, rows, d, kNormFlopsPerElem));
        ops.push_back(matrix_op(OpKind::FC, "ffn_gate", l, rows, s.d_ffn, d, u64(s.d_ffn * d * bpw)));
        ops.push_back(matrix_op(OpKind::FC, "ffn_up", l, rows, s.d_ffn, d, u64(s.d_ffn * d * bpw)));
        ops.push_back(nonlinear_op("silu_mul", l, rows, s.d_ffn, kGatedActFlopsPerElem));
        ops.push_back(matrix_op(OpKind::FC, "ffn_down", l, rows, d, s.d_ffn, u64(d * s.d_ffn * bpw)));
    }
    ops.push_back(nonlinear_op("final_norm", -1, rows, d, kNormFlopsPerElem));
    ops.push_back(matrix_op(OpKind::FC, "lm_head", -1, rows, s.vocab, d, u64(s.vocab * d * bpw)));
    for (std::int64_t h = 0; h < s.n_decode_heads; ++h) {
        ops.push_back(matrix_op(OpKind::DecodeHead, fmt::format("decode_head_{}", h), -1, rows,
                                s.vocab, d, u64(s.vocab * d * bpw)));
    }
    return ops;
}

} // namespace

void ModelSpec::validate() const {
    auto need = [&](bool ok, std::string_view what) {
        if (!ok) throw ConfigError(fmt::format("model '{}': {}", name, what));
    };
    need(n_layers >= 1 && d_model >= 1 && n_heads >= 1 && d_head >= 1 && d_ffn >= 1 &&
             vocab >= 1 && n_decode_heads >= 1,
         "all dimension counts must be >= 1");
    need(d_model == n_heads * d_head, "d_model must equal n_heads * d_head");
    need(bytes_per_weight == 1 || bytes_per_weight == 2, "bytes_per_weight must be 1 or 2");
    need(bytes_per_kv >= 1, "bytes_per_kv must be >= 1");
}

ModelSpec build_model_spec(std::string_view preset) {
    ModelSpec s;
    if (preset == "llama2-7b") {
        s = ModelSpec{"llama2-7b", 32, 4096, 32, 128, 11008, 32000, 4, 1, 2};
    } else if (preset == "llama2-13b") {
        s = ModelSpec{"llama2-13b", 40, 5120, 40, 128, 13824, 32000, 4, 1, 2};
    } else {
        throw ConfigError(fmt::format("unknown model preset '{}'", preset));
    }
    s.validate();
    return s;
}

std::uint64_t streamed_weight_bytes(const ModelSpec& s) {
    const std::uint64_t d = u64(s.d_model);
    const std::uint64_t per_layer = (4 * d * d + 3 * d * u64(s.d_ffn)) * u64(s.bytes_per_weight);
    const std::uint64_t head = u64(s.vocab) * d * u64(s.bytes_per_weight);
    return per_layer * u64(s.n_layers) + head * (1 + u64(s.n_decode_heads));
}

std::uint64_t total_weight_bytes(const ModelSpec& s) {
    const std::uint64_t embedding = u64(s.vocab) * u64(s.d_model) * u64(s.bytes_per_weight);
    return streamed_weight_bytes(s) + embedding;
}

std::uint64_t kv_cache_bytes(const ModelSpec& s, std::int64_t seq_len) {
    return 2 * u64(seq_len) * u64(s.d_model) * u64(s.bytes_per_kv) * u64(s.n_layers);
}

std::string_view to_string(OpKind kind) {
    switch (kind) {
    case OpKind::FC: return "FC";
    case OpKind::AttentionScore: return "AttentionScore";
    case OpKind::AttentionContext: return "AttentionContext";
    case OpKind::DecodeHead: return "DecodeHead";
    case OpKind::Nonlinear: return "Nonlinear";
    }
    return "?";
}

std::vector<OpDescriptor> decode_op_graph(const ModelSpec& spec, KVState kv, std::int64_t l_spec) {
    if (l_spec < 1) throw ContractViolation("decode_op_graph: l_spec must be >= 1");
    if (kv.seq_len < 0) throw ContractViolation("decode_op_graph: negative seq_len");
    return build_graph(spec, l_spec, kv.seq_len);
}

std::vector<OpDescriptor> prefill_op_graph(const ModelSpec& spec, std::int64_t l_in) {
    if (l_in < 1) throw ContractViolation("prefill_op_graph: l_in must be >= 1");
    auto ops = build_graph(spec, l_in, 0);
    for (auto& op : ops) op.pim_eligible = false;
    return ops;
}

OpSplit split_columns(const OpDescriptor& op, std::int64_t pim_cols) {
    if (!is_matrix(op.kind)) throw ContractViolation("split_columns: nonlinear op " + op.name);
    if (pim_cols < 0 || pim_cols > op.n)
        throw ContractViolation(fmt::format("split_columns: {} of {} columns", pim_cols, op.n));

    OpSplit out{op, op};
    const std::int64_t npu_cols = op.n - pim_cols;
    out.pim.n = pim_cols;
    out.npu.n = npu_cols;
    // Column-proportional weight split; the remainder stays on the NPU so the
    // halves always sum to the original.
    out.pim.weight_bytes = op.n == 0 ? 0 : op.weight_bytes / u64(op.n) * u64(pim_cols);
    out.npu.weight_bytes = op.weight_bytes - out.pim.weight_bytes;
    out.pim.flops = 2 * u64(op.m) * u64(pim_cols) * u64(op.k);
    out.npu.flops = op.flops - out.pim.flops;
    out.pim.activation_bytes = u64(op.m * (op.k + pim_cols) * kBytesPerActivation);
    out.npu.activation_bytes = u64(op.m * (op.k + npu_cols) * kBytesPerActivation);
    out.npu.pim_eligible = false;
    return out;
}

std::int64_t columns_for_ratio(const OpDescriptor& op, double ratio) {
    if (ratio <= 0.0) return 0;
    if (ratio >= 1.0) return op.n;
    return static_cast<std::int64_t>(std::llround(ratio * static_cast<double>(op.n)));
}

} // namespace pimspec
