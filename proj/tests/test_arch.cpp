#include <doctest.h>

#include "jcpba/arch.hpp"

using namespace jcpba;
using namespace jcpba::arch;

namespace {

TransformerDescriptor tiny() {
    return TransformerDescriptor{
        .n_layers = 2, .d_model = 4, .n_heads = 2, .d_ff = 8,
        .vocab_size = 10, .seq_len = 8, .bytes_per_param = 2};
}

constexpr PartitionSpec tiny_partition{0, 0, 1, 1};

// Independent enumeration of every matrix and bias for one tiny layer with
// the given retained head/neuron counts.
std::int64_t enumerate_layer(std::int64_t d, std::int64_t head_dim, std::int64_t heads,
                             std::int64_t ff) {
    std::int64_t total = 0;
    for (std::int64_t h = 0; h < heads; ++h) {
        total += d * head_dim;  // W_q slice
        total += d * head_dim;  // W_k slice
        total += d * head_dim;  // W_v slice
        total += head_dim * d;  // W_o slice
        total += 3 * head_dim;  // q/k/v bias slices
    }
    total += d;  // output projection bias
    for (std::int64_t n = 0; n < ff; ++n) {
        total += d;  // W_in column
        total += 1;  // hidden bias
        total += d;  // W_out row
    }
    total += d;      // MLP output bias
    total += 4 * d;  // two layer norms, scale + shift each
    return total;
}

}  // namespace

TEST_CASE("partition_model: tiny adapter matches per-matrix enumeration") {
    const auto desc = tiny();
    const auto sizes = partition_model(desc, tiny_partition);
    const std::int64_t expected_layer = enumerate_layer(4, 2, 2, 8);
    CHECK(sizes.adapter_params == expected_layer);
    const std::int64_t embeddings = 10 * 4 + 8 * 4 + 2 * 4;
    CHECK(sizes.emulator_params == expected_layer + embeddings);
    CHECK(sizes.adapter_bits == doctest::Approx(sizes.adapter_params * 16.0));
    CHECK(sizes.adapter_update_bits == sizes.adapter_bits);
}

TEST_CASE("partition_model: gpt2-medium adapter holds exactly two layers") {
    const auto desc = preset("gpt2-medium");
    const PartitionSpec spec{0, 21, 22, 23};
    const auto sizes = partition_model(desc, spec);
    CHECK(sizes.adapter_params == 2 * layer_params(desc));
    CHECK(sizes.emulator_params == 22 * layer_params(desc) + embedding_params(desc));
}

TEST_CASE("partition_model: empty adapter rejected") {
    const auto desc = tiny();
    const PartitionSpec all_emulator{0, 1, 2, 1};
    CHECK_THROWS_AS(partition_model(desc, all_emulator), InvalidPartition);
}

TEST_CASE("prune_emulator: beta=0 is the identity") {
    const auto desc = tiny();
    const auto pruned = prune_emulator(desc, tiny_partition, 0.0);
    CHECK(pruned.retained_heads_per_layer == desc.n_heads);
    CHECK(pruned.retained_ff_per_layer == desc.d_ff);
    const auto sizes = partition_model(desc, tiny_partition);
    CHECK(pruned_emulator_params(desc, tiny_partition, 0.0) == sizes.emulator_params);
}

TEST_CASE("prune_emulator: exact halving") {
    auto desc = preset("gpt2-medium");
    const PartitionSpec spec{0, 21, 22, 23};
    const auto pruned = prune_emulator(desc, spec, 0.5);
    CHECK(pruned.retained_heads_per_layer == 8);
    CHECK(pruned.retained_ff_per_layer == 2048);
}

TEST_CASE("prune_emulator: beta=0.3 on tiny matches hand enumeration") {
    const auto desc = tiny();
    const auto pruned = prune_emulator(desc, tiny_partition, 0.3);
    // round(0.7 * 2) = 1 head, round(0.7 * 8) = 6 neurons
    CHECK(pruned.retained_heads_per_layer == 1);
    CHECK(pruned.retained_ff_per_layer == 6);
    const std::int64_t embeddings = 10 * 4 + 8 * 4 + 2 * 4;
    CHECK(pruned_emulator_params(desc, tiny_partition, 0.3) ==
          enumerate_layer(4, 2, 1, 6) + embeddings);
}

TEST_CASE("prune_emulator: rejects beta outside [0,1)") {
    const auto desc = tiny();
    CHECK_THROWS_AS(prune_emulator(desc, tiny_partition, 1.0), OutOfRange);
    CHECK_THROWS_AS(prune_emulator(desc, tiny_partition, -0.1), OutOfRange);
}

TEST_CASE("emulator_bits_linear") {
    ModelSizes sizes;
    sizes.emulator_bits = 8e9;
    CHECK(emulator_bits_linear(sizes, 0.0) == 8e9);
    CHECK(emulator_bits_linear(sizes, 1.0) == 0.0);
    CHECK(emulator_bits_linear(sizes, 0.25) == doctest::Approx(6e9));
}

TEST_CASE("flops_per_iteration: tiny, batch 4, beta 0.5") {
    const auto desc = tiny();
    const auto f = flops_per_iteration(desc, tiny_partition, 0.5, 4);
    // tokens = 4 * 8; a = 6 * 172 * 32, e0 = 2 * (172 + 80) * 32
    CHECK(f.adapter_cost == doctest::Approx(6.0 * 172 * 32));
    CHECK(f.emulator_cost_unpruned == doctest::Approx(2.0 * 252 * 32));
    CHECK(f.total == doctest::Approx(f.adapter_cost + 0.5 * f.emulator_cost_unpruned));

    CHECK(flops_per_iteration(desc, tiny_partition, 1.0, 4).total ==
          doctest::Approx(f.adapter_cost));
    CHECK(flops_per_iteration(desc, tiny_partition, 0.0, 4).total ==
          doctest::Approx(f.adapter_cost + f.emulator_cost_unpruned));
}

TEST_CASE("memory_footprint") {
    ModelSizes sizes;
    sizes.adapter_bits = 8e6;   // 1 MB
    sizes.emulator_bits = 64e6; // 8 MB
    CHECK(memory_footprint(sizes, 1.0, 1.0) == doctest::Approx(1e6));
    CHECK(memory_footprint(sizes, 0.0, 2.0) == doctest::Approx(2.0 * 9e6));
    CHECK(memory_footprint(sizes, 0.7, 1.5) < memory_footprint(sizes, 0.3, 1.5));
}

TEST_CASE("pruning monotonicity and linear-model gap on a beta grid") {
    const auto desc = preset("gpt2-medium");
    const PartitionSpec spec{0, 21, 22, 23};
    const auto sizes = partition_model(desc, spec);
    // Prunable part per layer: everything sliced by head or neuron.
    const std::int64_t fixed = layer_params_retained(desc, 0, 0);
    const std::int64_t prunable = layer_params(desc) - fixed;

    std::int64_t prev = pruned_emulator_params(desc, spec, 0.0);
    double prev_linear = emulator_bits_linear(sizes, 0.0);
    for (double beta = 0.05; beta <= 0.801; beta += 0.05) {
        const std::int64_t exact = pruned_emulator_params(desc, spec, beta);
        CHECK(exact <= prev);
        const double linear = emulator_bits_linear(sizes, beta);
        CHECK(linear <= prev_linear);
        prev = exact;
        prev_linear = linear;

        const auto pruned = prune_emulator(desc, spec, beta);
        const std::int64_t exact_prunable =
            layer_params_retained(desc, pruned.retained_heads_per_layer,
                                  pruned.retained_ff_per_layer) -
            fixed;
        const double linear_prunable = (1.0 - beta) * static_cast<double>(prunable);
        CHECK(std::abs(static_cast<double>(exact_prunable) - linear_prunable) /
                  static_cast<double>(prunable) <=
              0.05);
    }
}
