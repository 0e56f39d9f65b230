#pragma once

#include <cstdint>
#include <string>

#include "jcpba/errors.hpp"

namespace jcpba::arch {

// Decoder-only transformer shape. Parameter counts, bit sizes, FLOPs and
// memory footprints are all derived from these fields; no weights exist.
struct TransformerDescriptor {
    std::int64_t n_layers = 0;
    std::int64_t d_model = 0;
    std::int64_t n_heads = 0;
    std::int64_t d_ff = 0;
    std::int64_t vocab_size = 0;
    std::int64_t seq_len = 0;
    std::int64_t bytes_per_param = 2;

    void validate() const;
    std::int64_t head_dim() const { return d_model / n_heads; }
};

// "gpt2-medium" preset: 24 layers, d_model 1024, 16 heads, d_ff 4096.
TransformerDescriptor preset(const std::string& name);

// Inclusive layer ranges; adapter is the trailing suffix.
struct PartitionSpec {
    std::int64_t emulator_first = 0;
    std::int64_t emulator_last = 0;
    std::int64_t adapter_first = 0;
    std::int64_t adapter_last = 0;

    void validate(const TransformerDescriptor& desc) const;
    std::int64_t emulator_layer_count() const { return emulator_last - emulator_first + 1; }
    std::int64_t adapter_layer_count() const { return adapter_last - adapter_first + 1; }
};

struct PrunedEmulatorDescriptor {
    const TransformerDescriptor* base = nullptr;
    double pruning_rate = 0.0;
    std::int64_t retained_heads_per_layer = 0;
    std::int64_t retained_ff_per_layer = 0;
};

struct ModelSizes {
    std::int64_t emulator_params = 0;
    std::int64_t adapter_params = 0;
    double emulator_bits = 0.0;
    double adapter_bits = 0.0;
    double adapter_update_bits = 0.0;  // delta has the adapter's shape
};

// Per-layer parameter count: attention (4 d^2 + qkv/out biases) + MLP
// (2 d d_ff + biases) + two layer norms.
std::int64_t layer_params(const TransformerDescriptor& desc);

// Layer params with only `heads` attention heads and `ff` MLP neurons kept.
std::int64_t layer_params_retained(const TransformerDescriptor& desc,
                                   std::int64_t heads, std::int64_t ff);

// Embedding tables and final layer norm; frozen, dispatched with the emulator.
std::int64_t embedding_params(const TransformerDescriptor& desc);

ModelSizes partition_model(const TransformerDescriptor& desc, const PartitionSpec& spec);

PrunedEmulatorDescriptor prune_emulator(const TransformerDescriptor& desc,
                                        const PartitionSpec& spec, double beta);

// Exact structured count of the pruned emulator (embeddings unprunable).
std::int64_t pruned_emulator_params(const TransformerDescriptor& desc,
                                    const PartitionSpec& spec, double beta);

// The optimizer's linear size model: (1-beta) * emulator_bits.
double emulator_bits_linear(const ModelSizes& sizes, double beta);

struct IterationFlops {
    double adapter_cost = 0.0;        // a: forward+backward on trained layers
    double emulator_cost_unpruned = 0.0;  // e0: forward-only on frozen layers
    double total = 0.0;               // d_k = a + e0 (1 - beta)
};

IterationFlops flops_per_iteration(const TransformerDescriptor& desc, const PartitionSpec& spec,
                                   double beta, std::int64_t batch);

// b(beta) = kappa * (adapter_bytes + (1-beta) * emulator_bytes).
double memory_footprint(const ModelSizes& sizes, double beta, double overhead_factor);

}  // namespace jcpba::arch
