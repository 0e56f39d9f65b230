#include "jcpba/arch.hpp"

#include <algorithm>
#include <cmath>

namespace jcpba::arch {

void TransformerDescriptor::validate() const {
    if (n_layers < 2) throw OutOfRange("n_layers must be >= 2");
    if (d_model <= 0 || n_heads <= 0 || d_ff <= 0 || vocab_size <= 0 || seq_len <= 0 ||
        bytes_per_param <= 0) {
        throw OutOfRange("all descriptor counts must be > 0");
    }
    if (d_model % n_heads != 0) throw OutOfRange("d_model must be divisible by n_heads");
}

TransformerDescriptor preset(const std::string& name) {
    if (name == "gpt2-medium") {
        return TransformerDescriptor{
            .n_layers = 24,
            .d_model = 1024,
            .n_heads = 16,
            .d_ff = 4096,
            .vocab_size = 50257,
            .seq_len = 1024,
            .bytes_per_param = 2,
        };
    }
    throw OutOfRange("unknown architecture preset: " + name);
}

void PartitionSpec::validate(const TransformerDescriptor& desc) const {
    if (emulator_first != 0) throw InvalidPartition("emulator must start at layer 0");
    if (adapter_last != desc.n_layers - 1) {
        throw InvalidPartition("adapter must end at the last layer");
    }
    if (adapter_first != emulator_last + 1) {
        throw InvalidPartition("emulator and adapter ranges must be contiguous");
    }
    if (emulator_last < emulator_first) throw InvalidPartition("emulator range is empty");
    if (adapter_last < adapter_first) throw InvalidPartition("adapter range is empty");
}

std::int64_t layer_params(const TransformerDescriptor& desc) {
    return layer_params_retained(desc, desc.n_heads, desc.d_ff);
}

std::int64_t layer_params_retained(const TransformerDescriptor& desc,
                                   std::int64_t heads, std::int64_t ff) {
    const std::int64_t d = desc.d_model;
    const std::int64_t hd = desc.head_dim();
    // Attention: per-head q/k/v/out slices (4 d hd each) and q/k/v bias slices;
    // the output projection bias is a single d-vector, not head-sliced.
    const std::int64_t attn = 4 * d * hd * heads + 3 * hd * heads + d;
    // MLP: in/out projections sliced by hidden neuron, hidden bias sliced,
    // output bias is a d-vector.
    const std::int64_t mlp = 2 * d * ff + ff + d;
    const std::int64_t norms = 2 * (2 * d);
    return attn + mlp + norms;
}

std::int64_t embedding_params(const TransformerDescriptor& desc) {
    // Token + positional embeddings plus the final layer norm; the LM head is
    // tied to the token embedding.
    return desc.vocab_size * desc.d_model + desc.seq_len * desc.d_model + 2 * desc.d_model;
}

ModelSizes partition_model(const TransformerDescriptor& desc, const PartitionSpec& spec) {
    desc.validate();
    spec.validate(desc);
    const std::int64_t per_layer = layer_params(desc);
    ModelSizes sizes;
    sizes.emulator_params = per_layer * spec.emulator_layer_count() + embedding_params(desc);
    sizes.adapter_params = per_layer * spec.adapter_layer_count();
    const double bits_per_param = 8.0 * static_cast<double>(desc.bytes_per_param);
    sizes.emulator_bits = static_cast<double>(sizes.emulator_params) * bits_per_param;
    sizes.adapter_bits = static_cast<double>(sizes.adapter_params) * bits_per_param;
    sizes.adapter_update_bits = sizes.adapter_bits;
    return sizes;
}

namespace {

std::int64_t retained_count(std::int64_t total, double beta) {
    const auto kept = static_cast<std::int64_t>(std::llround((1.0 - beta) * static_cast<double>(total)));
    return std::max<std::int64_t>(1, kept);
}

}  // namespace

PrunedEmulatorDescriptor prune_emulator(const TransformerDescriptor& desc,
                                        const PartitionSpec& spec, double beta) {
    desc.validate();
    spec.validate(desc);
    if (beta < 0.0 || beta >= 1.0) throw OutOfRange("pruning rate must be in [0,1)");
    PrunedEmulatorDescriptor pruned;
    pruned.base = &desc;
    pruned.pruning_rate = beta;
    pruned.retained_heads_per_layer = retained_count(desc.n_heads, beta);
    pruned.retained_ff_per_layer = retained_count(desc.d_ff, beta);
    return pruned;
}

std::int64_t pruned_emulator_params(const TransformerDescriptor& desc,
                                    const PartitionSpec& spec, double beta) {
    const auto pruned = prune_emulator(desc, spec, beta);
    return layer_params_retained(desc, pruned.retained_heads_per_layer,
                                 pruned.retained_ff_per_layer) *
               spec.emulator_layer_count() +
           embedding_params(desc);
}

double emulator_bits_linear(const ModelSizes& sizes, double beta) {
    if (beta < 0.0 || beta > 1.0) throw OutOfRange("pruning rate must be in [0,1]");
    return (1.0 - beta) * sizes.emulator_bits;
}

IterationFlops flops_per_iteration(const TransformerDescriptor& desc, const PartitionSpec& spec,
                                   double beta, std::int64_t batch) {
    if (batch < 1) throw OutOfRange("batch must be >= 1");
    if (beta < 0.0 || beta > 1.0) throw OutOfRange("pruning rate must be in [0,1]");
    const ModelSizes sizes = partition_model(desc, spec);
    const double tokens = static_cast<double>(batch) * static_cast<double>(desc.seq_len);
    IterationFlops f;
    f.adapter_cost = 6.0 * static_cast<double>(sizes.adapter_params) * tokens;
    f.emulator_cost_unpruned = 2.0 * static_cast<double>(sizes.emulator_params) * tokens;
    f.total = f.adapter_cost + f.emulator_cost_unpruned * (1.0 - beta);
    return f;
}

double memory_footprint(const ModelSizes& sizes, double beta, double overhead_factor) {
    if (overhead_factor < 1.0) throw OutOfRange("memory overhead factor must be >= 1");
    const double adapter_bytes = sizes.adapter_bits / 8.0;
    const double emulator_bytes = sizes.emulator_bits / 8.0;
    return overhead_factor * (adapter_bytes + (1.0 - beta) * emulator_bytes);
}

}  // namespace jcpba::arch
