#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "jcpba/arch.hpp"
#include "jcpba/channel.hpp"
#include "jcpba/latency.hpp"
#include "jcpba/solver.hpp"

namespace jcpba::fedsim {

struct ClientPopulation {
    std::vector<double> flops_per_second;   // f_k
    std::vector<double> memory_budget_bytes;  // b-hat_k
    double heterogeneity_cv = 0.0;          // empirical CV of f_k
    std::uint64_t seed = 0;
};

// f_k = u_k * f0 with u_k ~ U[speed_lo, speed_hi]; memory ~ U over the GB range.
ClientPopulation sample_population(std::int64_t n_clients, double f0_flops, double speed_lo,
                                   double speed_hi, double mem_lo_gb, double mem_hi_gb,
                                   std::uint64_t seed);

// Toy stand-in for the adapter weights; only the aggregation arithmetic is real.
struct AdapterVector {
    std::vector<double> values;

    static AdapterVector zeros(std::size_t dimension) {
        return AdapterVector{std::vector<double>(dimension, 0.0)};
    }
};

// Weighted FedAvg: global + sum_k (|D_k| / sum |D_k'|) * delta_k.
AdapterVector aggregate_adapter(const AdapterVector& global,
                                const std::vector<AdapterVector>& deltas,
                                const std::vector<std::int64_t>& dataset_sizes);

// Seeded bounded perturbation standing in for a client's adapter delta;
// deterministic per (seed, round, client).
AdapterVector local_update(const AdapterVector& global, std::uint64_t seed,
                           std::int64_t round_index, std::int64_t client_index,
                           double step_scale);

// Synthetic loss curve: contraction toward the floor, slowed by mean pruning.
double proxy_loss_step(double current_loss, double mean_beta, double decay_rate,
                       double floor_loss);

enum class Policy { kJcpba, kUbfp };

Policy policy_from_name(const std::string& name);
std::string policy_name(Policy policy);

// Uniform bandwidth, fixed pruning baseline; fails fast when the fixed beta
// violates C3/C5 for the given clients.
solver::Allocation ubfp_policy(std::span<const solver::ClientStatic> clients,
                               const solver::ConstraintSet& cs, double beta_fixed);

struct RoundRecord {
    std::int64_t round_index = 0;
    solver::Allocation allocation;
    std::vector<latency::LatencyBreakdown> breakdowns;
    double round_latency_s = 0.0;
    std::vector<double> per_client_flops;
    std::vector<double> per_client_bytes;
    double proxy_loss = 0.0;
    double cumulative_time_s = 0.0;
};

struct RunSummary {
    std::vector<RoundRecord> records;
    std::string policy;
    double total_time_s = 0.0;
    double mean_round_flops = 0.0;
    double std_round_flops = 0.0;
    double mean_round_bytes = 0.0;
    double std_round_bytes = 0.0;
    double final_proxy_loss = 0.0;
};

struct SimulationSetup {
    arch::TransformerDescriptor descriptor;
    arch::PartitionSpec partition;
    channel::LinkBudget link;
    solver::ConstraintSet constraints;
    latency::ComputeProfile compute_defaults;  // M, N shared by all clients
    double ubfp_beta = 0.3;
    double step_scale = 0.01;
    std::int64_t adapter_dimension = 32;
    double loss_start = 3.0;
    double loss_floor = 1.0;
    double loss_decay = 0.05;
};

// Per-round channel terms folded into the solver's client records.
std::vector<solver::ClientStatic> make_client_statics(const SimulationSetup& setup,
                                                      const ClientPopulation& population,
                                                      const channel::ChannelState& state);

struct RoundContext {
    AdapterVector global_adapter;
    double proxy_loss = 0.0;
    double cumulative_time_s = 0.0;
};

RoundRecord run_round(const SimulationSetup& setup, const ClientPopulation& population,
                      Policy policy, std::int64_t round_index, std::mt19937_64& channel_rng,
                      std::uint64_t update_seed, RoundContext& ctx);

RunSummary run_experiment(const SimulationSetup& setup, const ClientPopulation& population,
                          Policy policy, std::int64_t n_rounds, std::uint64_t seed);

struct SweepCell {
    double speed_lo = 0.0;
    double speed_hi = 0.0;
    double empirical_cv = 0.0;
    std::string policy;
    double mean_round_latency_s = 0.0;
};

struct SweepResult {
    std::vector<SweepCell> cells;
    // growth[policy] = percent increase of mean round latency, lowest to
    // highest heterogeneity range
    std::vector<std::pair<std::string, double>> growth_percent;
};

SweepResult heterogeneity_sweep(const SimulationSetup& setup, std::int64_t n_clients,
                                double f0_flops, double mem_lo_gb, double mem_hi_gb,
                                const std::vector<std::pair<double, double>>& speed_ranges,
                                const std::vector<Policy>& policies, std::int64_t n_rounds,
                                std::uint64_t seed);

}  // namespace jcpba::fedsim
