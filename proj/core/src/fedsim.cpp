#include "jcpba/fedsim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace jcpba::fedsim {

namespace {

constexpr double kBytesPerGb = 1e9;

double mean_of(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double std_of(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double acc = 0.0;
    for (double x : v) acc += (x - m) * (x - m);
    return std::sqrt(acc / static_cast<double>(v.size() - 1));
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
    // splitmix64 over the concatenated inputs
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (a + 1) + 0xbf58476d1ce4e5b9ULL * (b + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace

ClientPopulation sample_population(std::int64_t n_clients, double f0_flops, double speed_lo,
                                   double speed_hi, double mem_lo_gb, double mem_hi_gb,
                                   std::uint64_t seed) {
    if (n_clients < 1) throw OutOfRange("need at least one client");
    if (f0_flops <= 0.0 || speed_lo <= 0.0 || speed_hi < speed_lo) {
        throw OutOfRange("speed range must satisfy 0 < lo <= hi");
    }
    if (mem_lo_gb <= 0.0 || mem_hi_gb < mem_lo_gb) {
        throw OutOfRange("memory range must satisfy 0 < lo <= hi");
    }
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> speed(speed_lo, speed_hi);
    std::uniform_real_distribution<double> mem(mem_lo_gb, mem_hi_gb);
    ClientPopulation pop;
    pop.seed = seed;
    pop.flops_per_second.resize(static_cast<std::size_t>(n_clients));
    pop.memory_budget_bytes.resize(static_cast<std::size_t>(n_clients));
    for (std::size_t k = 0; k < pop.flops_per_second.size(); ++k) {
        pop.flops_per_second[k] = speed(rng) * f0_flops;
        pop.memory_budget_bytes[k] = mem(rng) * kBytesPerGb;
    }
    const double m = mean_of(pop.flops_per_second);
    pop.heterogeneity_cv = m > 0.0 ? std_of(pop.flops_per_second) / m : 0.0;
    return pop;
}

AdapterVector aggregate_adapter(const AdapterVector& global,
                                const std::vector<AdapterVector>& deltas,
                                const std::vector<std::int64_t>& dataset_sizes) {
    if (deltas.size() != dataset_sizes.size()) {
        throw DimensionMismatch("one dataset size per delta required");
    }
    double total = 0.0;
    for (std::int64_t s : dataset_sizes) {
        if (s <= 0) throw OutOfRange("dataset sizes must be > 0");
        total += static_cast<double>(s);
    }
    AdapterVector out = global;
    for (std::size_t k = 0; k < deltas.size(); ++k) {
        if (deltas[k].values.size() != global.values.size()) {
            throw DimensionMismatch("delta dimension differs from the global adapter");
        }
        const double weight = static_cast<double>(dataset_sizes[k]) / total;
        for (std::size_t i = 0; i < out.values.size(); ++i) {
            out.values[i] += weight * deltas[k].values[i];
        }
    }
    return out;
}

AdapterVector local_update(const AdapterVector& global, std::uint64_t seed,
                           std::int64_t round_index, std::int64_t client_index,
                           double step_scale) {
    std::mt19937_64 rng(mix_seed(seed, static_cast<std::uint64_t>(round_index),
                                 static_cast<std::uint64_t>(client_index)));
    std::uniform_real_distribution<double> step(-step_scale, step_scale);
    AdapterVector delta = AdapterVector::zeros(global.values.size());
    for (double& v : delta.values) v = step(rng);
    return delta;
}

double proxy_loss_step(double current_loss, double mean_beta, double decay_rate,
                       double floor_loss) {
    const double rate = decay_rate * (1.0 - mean_beta);
    return floor_loss + (current_loss - floor_loss) * (1.0 - rate);
}

Policy policy_from_name(const std::string& name) {
    if (name == "jcpba") return Policy::kJcpba;
    if (name == "ubfp") return Policy::kUbfp;
    throw OutOfRange("unknown policy: " + name);
}

std::string policy_name(Policy policy) {
    return policy == Policy::kJcpba ? "jcpba" : "ubfp";
}

solver::Allocation ubfp_policy(std::span<const solver::ClientStatic> clients,
                               const solver::ConstraintSet& cs, double beta_fixed) {
    const std::size_t k = clients.size();
    if (k == 0) throw EmptyClientSet("UBFP over no clients");
    solver::Allocation alloc;
    alloc.beta.assign(k, beta_fixed);
    alloc.bandwidth_hz.assign(k, cs.total_bandwidth_hz / static_cast<double>(k));
    alloc.per_client_latency_s.resize(k);
    for (std::size_t i = 0; i < k; ++i) {
        alloc.per_client_latency_s[i] =
            solver::client_latency(clients[i], beta_fixed, alloc.bandwidth_hz[i]);
        alloc.objective_s = std::max(alloc.objective_s, alloc.per_client_latency_s[i]);
    }
    const auto violated = solver::validate_allocation(clients, cs, alloc);
    if (!violated.empty()) {
        std::string ids;
        for (const auto& v : violated) ids += (ids.empty() ? "" : ",") + v;
        throw Infeasible(ids, "UBFP's fixed pruning rate is infeasible");
    }
    return alloc;
}

std::vector<solver::ClientStatic> make_client_statics(const SimulationSetup& setup,
                                                      const ClientPopulation& population,
                                                      const channel::ChannelState& state) {
    const auto sizes = arch::partition_model(setup.descriptor, setup.partition);
    const auto flops =
        arch::flops_per_iteration(setup.descriptor, setup.partition, 0.0,
                                  setup.compute_defaults.batch_size);
    std::vector<solver::ClientStatic> clients(population.flops_per_second.size());
    for (std::size_t k = 0; k < clients.size(); ++k) {
        auto& c = clients[k];
        c.compute = setup.compute_defaults;
        c.compute.flops_per_second = population.flops_per_second[k];
        c.memory_budget_bytes = population.memory_budget_bytes[k];
        const auto eff = channel::spectral_efficiency(state, setup.link, k);
        c.spectral_eff_down = eff.down;
        c.spectral_eff_up = eff.up;
        c.adapter_flops = flops.adapter_cost;
        c.emulator_flops_unpruned = flops.emulator_cost_unpruned;
        c.adapter_bits = sizes.adapter_bits;
        c.emulator_bits = sizes.emulator_bits;
        c.update_bits = sizes.adapter_update_bits;
    }
    return clients;
}

RoundRecord run_round(const SimulationSetup& setup, const ClientPopulation& population,
                      Policy policy, std::int64_t round_index, std::mt19937_64& channel_rng,
                      std::uint64_t update_seed, RoundContext& ctx) {
    const std::int64_t n_clients = static_cast<std::int64_t>(population.flops_per_second.size());
    const auto state = channel::sample_channel(n_clients, setup.link, channel_rng, round_index);
    const auto clients = make_client_statics(setup, population, state);

    solver::ConstraintSet cs = setup.constraints;
    cs.n_clients = n_clients;
    cs.batch_size = setup.compute_defaults.batch_size;

    RoundRecord rec;
    rec.round_index = round_index;
    if (policy == Policy::kJcpba) {
        rec.allocation = solver::bcd_solve(clients, cs).final;
    } else {
        rec.allocation = ubfp_policy(clients, cs, setup.ubfp_beta);
    }

    const std::size_t k = clients.size();
    rec.breakdowns.resize(k);
    rec.per_client_flops.resize(k);
    rec.per_client_bytes.resize(k);
    for (std::size_t i = 0; i < k; ++i) {
        const double beta = rec.allocation.beta[i];
        const auto rates = channel::rates(state, setup.link, rec.allocation.bandwidth_hz[i], i);
        rec.breakdowns[i] = latency::client_latency(
            clients[i].adapter_flops, clients[i].emulator_flops_unpruned, beta,
            clients[i].compute, clients[i].adapter_bits, clients[i].emulator_bits,
            clients[i].update_bits, rates.downlink_bps, rates.uplink_bps);
        rec.per_client_flops[i] =
            static_cast<double>(clients[i].compute.local_iterations) *
            (clients[i].adapter_flops + clients[i].emulator_flops_unpruned * (1.0 - beta));
        const double down_bits = clients[i].adapter_bits + (1.0 - beta) * clients[i].emulator_bits;
        rec.per_client_bytes[i] = (down_bits + clients[i].update_bits) / 8.0;
    }
    rec.round_latency_s = latency::round_latency(rec.breakdowns);

    // Toy protocol step: seeded deltas, weighted FedAvg with equal sizes.
    std::vector<AdapterVector> deltas;
    deltas.reserve(k);
    for (std::size_t i = 0; i < k; ++i) {
        deltas.push_back(local_update(ctx.global_adapter, update_seed, round_index,
                                      static_cast<std::int64_t>(i), setup.step_scale));
    }
    ctx.global_adapter =
        aggregate_adapter(ctx.global_adapter, deltas, std::vector<std::int64_t>(k, 1));

    double beta_sum = std::accumulate(rec.allocation.beta.begin(), rec.allocation.beta.end(), 0.0);
    ctx.proxy_loss = proxy_loss_step(ctx.proxy_loss, beta_sum / static_cast<double>(k),
                                     setup.loss_decay, setup.loss_floor);
    ctx.cumulative_time_s += rec.round_latency_s;

    rec.proxy_loss = ctx.proxy_loss;
    rec.cumulative_time_s = ctx.cumulative_time_s;
    return rec;
}

RunSummary run_experiment(const SimulationSetup& setup, const ClientPopulation& population,
                          Policy policy, std::int64_t n_rounds, std::uint64_t seed) {
    RunSummary summary;
    summary.policy = policy_name(policy);

    std::mt19937_64 channel_rng(mix_seed(seed, 0x6368616e6e656cULL, 0));
    const std::uint64_t update_seed = mix_seed(seed, 0x75706461746573ULL, 0);
    RoundContext ctx;
    ctx.global_adapter = AdapterVector::zeros(static_cast<std::size_t>(setup.adapter_dimension));
    ctx.proxy_loss = setup.loss_start;

    std::vector<double> round_flops, round_bytes;
    for (std::int64_t r = 0; r < n_rounds; ++r) {
        auto rec = run_round(setup, population, policy, r, channel_rng, update_seed, ctx);
        round_flops.push_back(
            std::accumulate(rec.per_client_flops.begin(), rec.per_client_flops.end(), 0.0));
        round_bytes.push_back(
            std::accumulate(rec.per_client_bytes.begin(), rec.per_client_bytes.end(), 0.0));
        summary.records.push_back(std::move(rec));
    }
    summary.total_time_s = ctx.cumulative_time_s;
    summary.mean_round_flops = mean_of(round_flops);
    summary.std_round_flops = std_of(round_flops);
    summary.mean_round_bytes = mean_of(round_bytes);
    summary.std_round_bytes = std_of(round_bytes);
    summary.final_proxy_loss = summary.records.empty() ? setup.loss_start : ctx.proxy_loss;
    return summary;
}

SweepResult heterogeneity_sweep(const SimulationSetup& setup, std::int64_t n_clients,
                                double f0_flops, double mem_lo_gb, double mem_hi_gb,
                                const std::vector<std::pair<double, double>>& speed_ranges,
                                const std::vector<Policy>& policies, std::int64_t n_rounds,
                                std::uint64_t seed) {
    SweepResult result;
    for (Policy policy : policies) {
        double first_latency = 0.0, last_latency = 0.0;
        for (std::size_t r = 0; r < speed_ranges.size(); ++r) {
            const auto [lo, hi] = speed_ranges[r];
            // Paired draws: the population seed depends on the range, not the
            // policy, so policies see identical clients and channels.
            const auto population = sample_population(
                n_clients, f0_flops, lo, hi, mem_lo_gb, mem_hi_gb,
                mix_seed(seed, 0x706f70ULL, static_cast<std::uint64_t>(r)));
            const auto summary = run_experiment(setup, population, policy, n_rounds, seed);
            double mean_latency = 0.0;
            for (const auto& rec : summary.records) mean_latency += rec.round_latency_s;
            if (!summary.records.empty()) {
                mean_latency /= static_cast<double>(summary.records.size());
            }
            result.cells.push_back(SweepCell{lo, hi, population.heterogeneity_cv,
                                             policy_name(policy), mean_latency});
            if (r == 0) first_latency = mean_latency;
            if (r + 1 == speed_ranges.size()) last_latency = mean_latency;
        }
        const double growth =
            first_latency > 0.0 ? 100.0 * (last_latency - first_latency) / first_latency : 0.0;
        result.growth_percent.emplace_back(policy_name(policy), growth);
    }
    return result;
}

}  // namespace jcpba::fedsim
