// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. argv[1] must be the path to the jcpba CLI binary (used by the
// determinism criterion).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "instance_gen.hpp"
#include "jcpba/arch.hpp"
#include "jcpba/fedsim.hpp"
#include "jcpba/scenario.hpp"
#include "jcpba/solver.hpp"

using namespace jcpba;
using Clock = std::chrono::steady_clock;

namespace {

int g_failures = 0;

void report(int criterion, bool pass, const std::string& detail) {
    std::cout << (pass ? "PASS" : "FAIL") << " criterion " << criterion << ": " << detail
              << std::endl;
    if (!pass) ++g_failures;
}

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

// ---- criterion 1: oracle equivalence -------------------------------------

void criterion_oracle_equivalence() {
    const auto start = Clock::now();
    struct Result {
        double bcd, oracle, lower;
    };
    std::vector<std::future<Result>> futures;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        futures.push_back(std::async(std::launch::async, [seed] {
            const std::int64_t k = (seed % 3 == 0) ? 3 : 2;
            const auto inst = testutil::random_instance(seed, k);
            const auto bcd = solver::bcd_solve(inst.clients, inst.cs);
            const auto oracle = solver::brute_force_oracle(inst.clients, inst.cs, 201);
            return Result{bcd.final.objective_s, oracle.objective_s,
                          testutil::continuous_lower_bound(inst)};
        }));
    }
    bool pass = true;
    double worst_gap = 0.0;
    for (auto& f : futures) {
        const auto r = f.get();
        const double gap = std::abs(r.bcd - r.oracle) / r.oracle;
        worst_gap = std::max(worst_gap, gap);
        if (gap > 0.01) pass = false;
        if (r.bcd < r.lower) pass = false;
    }
    const double elapsed = seconds_since(start);
    if (elapsed >= 60.0) pass = false;
    std::ostringstream msg;
    msg << "oracle equivalence on 50 instances, worst relative gap " << worst_gap << ", "
        << elapsed << " s";
    report(1, pass, msg.str());
}

// ---- criteria 2-4: BCD descent, bandwidth KKT, constraint satisfaction ----

void criteria_descent_kkt_constraints() {
    bool descent_pass = true;
    bool kkt_pass = true;
    bool constraints_pass = true;
    std::vector<std::int64_t> iteration_counts;

    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        const std::int64_t k = 2 + static_cast<std::int64_t>(seed % 63);
        const auto inst = testutil::random_instance(seed + 1000, k);

        const auto rep = solver::bcd_solve(inst.clients, inst.cs);
        iteration_counts.push_back(rep.iterations);
        if (rep.iterations > 50) descent_pass = false;
        for (std::size_t t = 1; t < rep.objective_trace.size(); ++t) {
            if (rep.objective_trace[t] > rep.objective_trace[t - 1] * (1.0 + 1e-9)) {
                descent_pass = false;
            }
        }
        if (!solver::validate_allocation(inst.clients, inst.cs, rep.final).empty()) {
            constraints_pass = false;
        }

        // Replay the alternation through the public subproblems so the KKT
        // condition can be checked after every bandwidth update.
        const std::size_t n = inst.clients.size();
        std::vector<double> beta(n, inst.cs.beta_min);
        std::vector<double> bw(n, inst.cs.total_bandwidth_hz / static_cast<double>(n));
        double prev = std::numeric_limits<double>::infinity();
        for (int t = 0; t < 50; ++t) {
            auto ps = solver::pruning_subproblem(inst.clients, bw, inst.cs);
            beta = ps.beta;
            auto bs = solver::bandwidth_subproblem(inst.clients, beta,
                                                   inst.cs.total_bandwidth_hz);
            bw = bs.bandwidth_hz;

            const double bw_sum = std::accumulate(bw.begin(), bw.end(), 0.0);
            if (std::abs(bw_sum - inst.cs.total_bandwidth_hz) >
                1e-9 * inst.cs.total_bandwidth_hz) {
                kkt_pass = false;
            }
            double t_min = std::numeric_limits<double>::infinity(), t_max = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                if (solver::bit_load_per_hz(inst.clients[i], beta[i]) <= 0.0) continue;
                const double ti = solver::client_latency(inst.clients[i], beta[i], bw[i]);
                t_min = std::min(t_min, ti);
                t_max = std::max(t_max, ti);
            }
            if (t_max - t_min > 1e-6 * bs.objective_s) kkt_pass = false;

            if (std::abs(bs.objective_s - prev) < 1e-4) break;
            prev = bs.objective_s;
        }
    }

    std::sort(iteration_counts.begin(), iteration_counts.end());
    const std::int64_t median = iteration_counts[iteration_counts.size() / 2];
    if (median > 10) descent_pass = false;

    {
        std::ostringstream msg;
        msg << "BCD descent on 200 instances, median iterations " << median;
        report(2, descent_pass, msg.str());
    }
    report(3, kkt_pass, "bandwidth-step KKT: exact C1 sum and equal active latencies");

    // mutation check: the validator must flag a beta pushed above beta_max
    const auto inst = testutil::random_instance(4242, 5);
    auto rep = solver::bcd_solve(inst.clients, inst.cs);
    auto mutated = rep.final;
    mutated.beta[1] = inst.cs.beta_max + 0.05;
    const auto flagged = solver::validate_allocation(inst.clients, inst.cs, mutated);
    if (std::find(flagged.begin(), flagged.end(), "C4") == flagged.end()) {
        constraints_pass = false;
    }
    report(4, constraints_pass, "independent C1-C5 re-validation and mutation detection");
}

// ---- criteria 5-6: heterogeneity trend, policy dominance ------------------

void criteria_heterogeneity_and_dominance() {
    const auto start = Clock::now();
    const auto config = scenario::default_scenario();
    const auto setup = config.simulation_setup();
    const std::vector<std::pair<double, double>> ranges{{1.0, 1.5}, {0.5, 2.0}, {0.2, 2.5}};

    struct SeedResult {
        double jcpba_growth, ubfp_growth;
        double cv[3];
        double jcpba_total, ubfp_total;
        bool dominance;
    };
    std::vector<std::future<SeedResult>> futures;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        futures.push_back(std::async(std::launch::async, [&, seed] {
            SeedResult r{};
            const auto sweep = fedsim::heterogeneity_sweep(
                setup, 8, 1e12, 4.0, 8.0, ranges,
                {fedsim::Policy::kJcpba, fedsim::Policy::kUbfp}, 50, seed);
            for (const auto& [policy, growth] : sweep.growth_percent) {
                (policy == "jcpba" ? r.jcpba_growth : r.ubfp_growth) = growth;
            }
            for (int i = 0; i < 3; ++i) r.cv[i] = sweep.cells[static_cast<std::size_t>(i)].empirical_cv;

            const auto pop = fedsim::sample_population(8, 1e12, 0.5, 2.0, 4.0, 8.0, seed);
            const auto jc = fedsim::run_experiment(setup, pop, fedsim::Policy::kJcpba, 50, seed);
            const auto ub = fedsim::run_experiment(setup, pop, fedsim::Policy::kUbfp, 50, seed);
            r.jcpba_total = jc.total_time_s;
            r.ubfp_total = ub.total_time_s;
            r.dominance = jc.total_time_s <= ub.total_time_s;
            return r;
        }));
    }

    int trend_wins = 0;
    int dominance_wins = 0;
    double mean_cv[3] = {0.0, 0.0, 0.0};
    for (auto& f : futures) {
        const auto r = f.get();
        if (r.jcpba_growth < r.ubfp_growth) ++trend_wins;
        if (r.dominance) ++dominance_wins;
        for (int i = 0; i < 3; ++i) mean_cv[i] += r.cv[i] / 20.0;
    }
    const double elapsed = seconds_since(start);

    {
        std::ostringstream msg;
        msg << "heterogeneity trend: JCPBA grows less than UBFP in " << trend_wins
            << "/20 seeds, mean CVs {" << mean_cv[0] << ", " << mean_cv[1] << ", " << mean_cv[2]
            << "}, " << elapsed << " s";
        report(5, trend_wins >= 19 && elapsed < 120.0, msg.str());
    }
    {
        std::ostringstream msg;
        msg << "policy dominance: JCPBA total wall-clock <= UBFP in " << dominance_wins
            << "/20 seeds";
        report(6, dominance_wins == 20, msg.str());
    }
}

// ---- criterion 7: complexity scaling --------------------------------------

void criterion_complexity() {
    auto time_solver = [](std::int64_t k) {
        double total = 0.0;
        for (int rep = 0; rep < 10; ++rep) {
            const auto inst = testutil::random_instance(static_cast<std::uint64_t>(rep), k);
            const auto start = Clock::now();
            (void)solver::bcd_solve(inst.clients, inst.cs);
            total += seconds_since(start);
        }
        return total / 10.0;
    };
    // warm-up
    (void)time_solver(10);
    const double small = time_solver(10);
    const double large = time_solver(1000);
    const double ratio = large / small;
    std::ostringstream msg;
    msg << "solver wall time K=1000 vs K=10 ratio " << ratio << " (limit 150)";
    report(7, ratio < 150.0, msg.str());
}

// ---- criterion 8: protocol math -------------------------------------------

void criterion_aggregation() {
    bool pass = true;
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> value(-1.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t dim = 16;
        fedsim::AdapterVector global{std::vector<double>(dim)};
        for (auto& v : global.values) v = value(rng);
        std::vector<fedsim::AdapterVector> deltas(4, fedsim::AdapterVector::zeros(dim));
        std::vector<std::int64_t> sizes(4);
        for (auto& d : deltas) {
            for (auto& v : d.values) v = value(rng);
        }
        for (auto& s : sizes) s = 1 + static_cast<std::int64_t>(rng() % 100);

        const auto out = fedsim::aggregate_adapter(global, deltas, sizes);
        const double total = static_cast<double>(sizes[0] + sizes[1] + sizes[2] + sizes[3]);
        for (std::size_t i = 0; i < dim; ++i) {
            double expected = global.values[i];
            for (std::size_t k = 0; k < 4; ++k) {
                expected += static_cast<double>(sizes[k]) / total * deltas[k].values[i];
            }
            if (std::abs(out.values[i] - expected) > 1e-12) pass = false;
        }

        // equal sizes reduce to plain averaging, weight 1/4 exactly
        const auto avg = fedsim::aggregate_adapter(global, deltas, {4, 4, 4, 4});
        for (std::size_t i = 0; i < dim; ++i) {
            double expected = global.values[i];
            for (std::size_t k = 0; k < 4; ++k) expected += 0.25 * deltas[k].values[i];
            if (avg.values[i] != expected) pass = false;
        }
    }
    report(8, pass, "weighted FedAvg matches the direct reference to 1e-12");
}

// ---- criterion 9: model accounting -----------------------------------------

void criterion_model_accounting() {
    bool pass = true;
    const auto desc = arch::preset("gpt2-medium");
    const arch::PartitionSpec spec{0, 21, 22, 23};
    const auto sizes = arch::partition_model(desc, spec);

    // independent per-matrix enumeration of one decoder layer
    std::int64_t layer = 0;
    const std::int64_t d = 1024, hd = 64;
    for (int h = 0; h < 16; ++h) layer += 4 * d * hd + 3 * hd;
    layer += d;  // attention output bias
    for (int n = 0; n < 4096; ++n) layer += 2 * d + 1;
    layer += d;      // MLP output bias
    layer += 4 * d;  // two layer norms
    if (sizes.adapter_params != 2 * layer) pass = false;

    const double layer_fraction =
        static_cast<double>(sizes.adapter_params) / static_cast<double>(24 * layer);
    if (std::abs(layer_fraction - 2.0 / 24.0) > 1e-12) pass = false;

    if (arch::pruned_emulator_params(desc, spec, 0.0) != sizes.emulator_params) pass = false;

    const std::int64_t fixed = arch::layer_params_retained(desc, 0, 0);
    const std::int64_t prunable = arch::layer_params(desc) - fixed;
    for (double beta = 0.05; beta <= 0.801; beta += 0.05) {
        const auto pruned = arch::prune_emulator(desc, spec, beta);
        const std::int64_t exact =
            arch::layer_params_retained(desc, pruned.retained_heads_per_layer,
                                        pruned.retained_ff_per_layer) -
            fixed;
        const double gap = std::abs(static_cast<double>(exact) -
                                    (1.0 - beta) * static_cast<double>(prunable)) /
                           static_cast<double>(prunable);
        if (gap > 0.05) pass = false;
    }
    report(9, pass, "gpt2-medium partition accounting, prune identity, linear-size gap <= 5%");
}

// ---- criterion 10: CLI determinism ------------------------------------------

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void criterion_determinism(const std::string& cli) {
    const auto tmp = std::filesystem::temp_directory_path() / "jcpba_acceptance";
    std::filesystem::remove_all(tmp);
    const auto run = [&](const std::string& dir) {
        const std::string cmd = cli + " simulate --rounds 5 --seed 7 --out " +
                                (tmp / dir).string() + " > /dev/null";
        return std::system(cmd.c_str());
    };
    bool pass = run("a") == 0 && run("b") == 0;
    if (pass) {
        const auto a = read_file(tmp / "a" / "simulate_records.jsonl");
        const auto b = read_file(tmp / "b" / "simulate_records.jsonl");
        pass = !a.empty() && a == b;
    }
    report(10, pass, "simulate twice with a fixed seed is byte-identical");
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::cerr << "usage: acceptance <path-to-jcpba-cli>\n";
        return 2;
    }
    criterion_oracle_equivalence();
    criteria_descent_kkt_constraints();
    criteria_heterogeneity_and_dominance();
    criterion_complexity();
    criterion_aggregation();
    criterion_model_accounting();
    criterion_determinism(argv[1]);
    if (g_failures > 0) {
        std::cout << g_failures << " criteria failed" << std::endl;
        return 1;
    }
    std::cout << "all criteria passed" << std::endl;
    return 0;
}
