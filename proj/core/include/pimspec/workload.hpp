#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace pimspec {

/// Transformer decoder dimensions plus the self-drafting decode heads.
/// All byte and FLOP counts of the simulated workload derive from this.
struct ModelSpec {
    std::string name;
    std::int64_t n_layers = 0;
    std::int64_t d_model = 0;
    std::int64_t n_heads = 0;
    std::int64_t d_head = 0;
    std::int64_t d_ffn = 0;
    std::int64_t vocab = 0;
    std::int64_t n_decode_heads = 0;
    std::int64_t bytes_per_weight = 1;
    std::int64_t bytes_per_kv = 2;

    /// Throws ConfigError listing the first violated invariant.
    void validate() const;
};

/// Resolve a named preset ("llama2-7b", "llama2-13b"). Throws ConfigError for
/// an unknown name.
ModelSpec build_model_spec(std::string_view preset);

/// Bytes of every resident weight tensor: transformer blocks, LM head, decode
/// heads and the embedding table.
std::uint64_t total_weight_bytes(const ModelSpec& spec);

/// Bytes of weights touched by one decode pass (blocks, LM head, decode heads).
/// The embedding lookup is excluded.
std::uint64_t streamed_weight_bytes(const ModelSpec& spec);

/// KV-cache bytes for `seq_len` cached tokens across all layers.
std::uint64_t kv_cache_bytes(const ModelSpec& spec, std::int64_t seq_len);

enum class OpKind { FC, AttentionScore, AttentionContext, DecodeHead, Nonlinear };

std::string_view to_string(OpKind kind);

inline bool is_matrix(OpKind kind) { return kind != OpKind::Nonlinear; }
inline bool is_attention(OpKind kind) {
    return kind == OpKind::AttentionScore || kind == OpKind::AttentionContext;
}

struct OpDescriptor {
    OpKind kind = OpKind::FC;
    std::string name;
    std::int32_t layer = -1; // -1 for ops after the last block
    std::int64_t m = 0;      // parallel tokens
    std::int64_t n = 0;      // output dim
    std::int64_t k = 0;      // reduction dim
    std::uint64_t weight_bytes = 0;     // weights, or KV bytes for attention
    std::uint64_t activation_bytes = 0; // inputs + outputs crossing a device boundary
    std::uint64_t flops = 0;
    bool pim_eligible = false;
};

struct KVState {
    std::int64_t seq_len = 0;
};

/// One speculative verification pass over `l_spec` parallel tokens.
std::vector<OpDescriptor> decode_op_graph(const ModelSpec& spec, KVState kv,
                                          std::int64_t l_spec);

/// Prompt processing over `l_in` tokens; always NPU-resident.
std::vector<OpDescriptor> prefill_op_graph(const ModelSpec& spec, std::int64_t l_in);

/// Tensor-parallel column split of a matrix op: `pim_cols` output columns go
/// to PIM, the rest stay on the NPU. Weight bytes and FLOPs of the two halves
/// sum exactly to the original; both halves need the full input activations.
struct OpSplit {
    OpDescriptor npu;
    OpDescriptor pim;
};
OpSplit split_columns(const OpDescriptor& op, std::int64_t pim_cols);

/// Column count that puts `ratio` of the op on PIM, rounded to whole columns.
std::int64_t columns_for_ratio(const OpDescriptor& op, double ratio);

} // namespace pimspec
