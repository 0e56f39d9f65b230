#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "jcpba/fedsim.hpp"
#include "jcpba/scenario.hpp"
#include "jcpba/solver.hpp"

namespace {

using json = nlohmann::json;
using jcpba::scenario::ScenarioConfig;

constexpr int kSchemaVersion = 1;

constexpr int kExitParseError = 2;
constexpr int kExitValidationError = 3;
constexpr int kExitInfeasible = 4;

struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::int64_t> rounds;
    std::optional<std::string> policy;
    std::optional<std::string> out_dir;
};

ScenarioConfig resolve_config(const std::string& config_path, const Overrides& ov) {
    ScenarioConfig config = config_path.empty() ? jcpba::scenario::default_scenario()
                                                : jcpba::scenario::load_scenario(config_path);
    if (ov.seed) config.seed = *ov.seed;
    if (ov.rounds) config.rounds = *ov.rounds;
    if (ov.policy) config.policy = *ov.policy;
    if (ov.out_dir) config.output_dir = *ov.out_dir;
    config.validate();
    return config;
}

// Record stream goes to stdout and is mirrored to <out>/<command>_records.jsonl.
struct RecordSink {
    std::ofstream file;

    RecordSink(const ScenarioConfig& config, const std::string& command) {
        std::filesystem::create_directories(config.output_dir);
        file.open(std::filesystem::path(config.output_dir) / (command + "_records.jsonl"));
    }

    void emit(json record) {
        const std::string line = record.dump();
        std::cout << line << "\n";
        file << line << "\n";
    }
};

json header_record(const ScenarioConfig& config, const std::string& command) {
    return json{{"type", "header"},
                {"schema_version", kSchemaVersion},
                {"command", command},
                {"config_hash", jcpba::scenario::config_hash(config)},
                {"seed", config.seed},
                {"policy", config.policy},
                {"n_clients", config.n_clients},
                {"synthetic_training", true}};
}

json allocation_to_json(const jcpba::solver::Allocation& alloc) {
    return json{{"beta", alloc.beta},
                {"bandwidth_hz", alloc.bandwidth_hz},
                {"per_client_latency_s", alloc.per_client_latency_s},
                {"objective_s", alloc.objective_s}};
}

void write_resolved_scenario(const ScenarioConfig& config) {
    std::ofstream out(std::filesystem::path(config.output_dir) / "scenario_resolved.json");
    out << jcpba::scenario::serialize_scenario(config) << "\n";
}

int cmd_solve(const ScenarioConfig& config) {
    const auto setup = config.simulation_setup();
    const auto population = config.sample_population();
    std::mt19937_64 rng(config.seed);
    const auto state = jcpba::channel::sample_channel(config.n_clients, config.link, rng);
    const auto clients = jcpba::fedsim::make_client_statics(setup, population, state);

    const auto report = jcpba::solver::bcd_solve(clients, setup.constraints,
                                                 {config.solver_epsilon_s,
                                                  config.solver_max_iterations});
    const auto violations =
        jcpba::solver::validate_allocation(clients, setup.constraints, report.final);
    if (!violations.empty()) {
        std::cerr << "allocation failed re-validation\n";
        return kExitInfeasible;
    }

    RecordSink sink(config, "solve");
    sink.emit(header_record(config, "solve"));
    sink.emit(json{{"type", "allocation"}, {"allocation", allocation_to_json(report.final)}});
    sink.emit(json{{"type", "solve_report"},
                   {"iterations", report.iterations},
                   {"converged", report.converged},
                   {"objective_trace", report.objective_trace}});

    std::ofstream table(std::filesystem::path(config.output_dir) / "solve_table.tsv");
    table << "client\tbeta\tbandwidth_hz\tlatency_s\n";
    for (std::size_t k = 0; k < report.final.beta.size(); ++k) {
        table << k << "\t" << report.final.beta[k] << "\t" << report.final.bandwidth_hz[k]
              << "\t" << report.final.per_client_latency_s[k] << "\n";
    }
    write_resolved_scenario(config);
    return 0;
}

int cmd_simulate(const ScenarioConfig& config) {
    const auto setup = config.simulation_setup();
    const auto population = config.sample_population();
    const auto policy = jcpba::fedsim::policy_from_name(config.policy);
    const auto summary =
        jcpba::fedsim::run_experiment(setup, population, policy, config.rounds, config.seed);

    RecordSink sink(config, "simulate");
    sink.emit(header_record(config, "simulate"));
    std::ofstream table(std::filesystem::path(config.output_dir) / "simulate_table.tsv");
    table << "round\tlatency_s\tcumulative_s\tproxy_loss\tround_flops\tround_bytes\n";
    for (const auto& rec : summary.records) {
        double flops = 0.0, bytes = 0.0;
        for (double f : rec.per_client_flops) flops += f;
        for (double b : rec.per_client_bytes) bytes += b;
        sink.emit(json{{"type", "round"},
                       {"round", rec.round_index},
                       {"allocation", allocation_to_json(rec.allocation)},
                       {"round_latency_s", rec.round_latency_s},
                       {"per_client_flops", rec.per_client_flops},
                       {"per_client_bytes", rec.per_client_bytes},
                       {"proxy_loss", rec.proxy_loss},
                       {"cumulative_time_s", rec.cumulative_time_s}});
        table << rec.round_index << "\t" << rec.round_latency_s << "\t" << rec.cumulative_time_s
              << "\t" << rec.proxy_loss << "\t" << flops << "\t" << bytes << "\n";
    }
    sink.emit(json{{"type", "summary"},
                   {"policy", summary.policy},
                   {"rounds", static_cast<std::int64_t>(summary.records.size())},
                   {"total_time_s", summary.total_time_s},
                   {"mean_round_flops", summary.mean_round_flops},
                   {"std_round_flops", summary.std_round_flops},
                   {"mean_round_bytes", summary.mean_round_bytes},
                   {"std_round_bytes", summary.std_round_bytes},
                   {"final_proxy_loss", summary.final_proxy_loss}});
    write_resolved_scenario(config);
    return 0;
}

int cmd_sweep(const ScenarioConfig& config) {
    const auto setup = config.simulation_setup();
    std::vector<jcpba::fedsim::Policy> policies;
    for (const auto& name : config.sweep_policies) {
        policies.push_back(jcpba::fedsim::policy_from_name(name));
    }
    const auto result = jcpba::fedsim::heterogeneity_sweep(
        setup, config.n_clients, config.f0_flops, config.mem_range_gb.first,
        config.mem_range_gb.second, config.sweep_speed_ranges, policies, config.rounds,
        config.seed);

    RecordSink sink(config, "sweep");
    sink.emit(header_record(config, "sweep"));
    std::ofstream table(std::filesystem::path(config.output_dir) / "sweep_table.tsv");
    table << "policy\tspeed_lo\tspeed_hi\tcv\tmean_round_latency_s\n";
    for (const auto& cell : result.cells) {
        sink.emit(json{{"type", "sweep_cell"},
                       {"policy", cell.policy},
                       {"speed_range", {cell.speed_lo, cell.speed_hi}},
                       {"empirical_cv", cell.empirical_cv},
                       {"mean_round_latency_s", cell.mean_round_latency_s}});
        table << cell.policy << "\t" << cell.speed_lo << "\t" << cell.speed_hi << "\t"
              << cell.empirical_cv << "\t" << cell.mean_round_latency_s << "\n";
    }
    for (const auto& [policy, growth] : result.growth_percent) {
        sink.emit(json{{"type", "growth"}, {"policy", policy}, {"growth_percent", growth}});
    }
    write_resolved_scenario(config);
    return 0;
}

int cmd_oracle_check(const ScenarioConfig& config) {
    if (config.n_clients > 3) {
        std::cerr << "oracle-check needs population.n_clients <= 3\n";
        return kExitValidationError;
    }
    const auto setup = config.simulation_setup();
    const auto population = config.sample_population();
    std::mt19937_64 rng(config.seed);
    const auto state = jcpba::channel::sample_channel(config.n_clients, config.link, rng);
    const auto clients = jcpba::fedsim::make_client_statics(setup, population, state);

    const auto report = jcpba::solver::bcd_solve(clients, setup.constraints,
                                                 {config.solver_epsilon_s,
                                                  config.solver_max_iterations});
    const auto oracle = jcpba::solver::brute_force_oracle(clients, setup.constraints,
                                                          config.oracle_grid_points);
    const double gap = (report.final.objective_s - oracle.objective_s) / oracle.objective_s;

    RecordSink sink(config, "oracle_check");
    sink.emit(header_record(config, "oracle-check"));
    sink.emit(json{{"type", "oracle_check"},
                   {"bcd_objective_s", report.final.objective_s},
                   {"oracle_objective_s", oracle.objective_s},
                   {"relative_gap", gap},
                   {"grid_points", config.oracle_grid_points}});
    write_resolved_scenario(config);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Latency simulator and min-max pruning/bandwidth optimizer for "
                 "federated LLM fine-tuning over wireless links"};
    app.require_subcommand(1);

    std::string config_path;
    Overrides ov;
    std::uint64_t seed_flag = 0;
    std::int64_t rounds_flag = 0;
    std::string policy_flag, out_flag;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "scenario file (JSON)");
        cmd->add_option("--seed", seed_flag, "override the scenario seed")
            ->each([&](const std::string& v) { ov.seed = std::stoull(v); });
        cmd->add_option("--rounds", rounds_flag, "override the round count")
            ->each([&](const std::string& v) { ov.rounds = std::stoll(v); });
        cmd->add_option("--policy", policy_flag, "jcpba or ubfp")
            ->each([&](const std::string& v) { ov.policy = v; });
        cmd->add_option("--out", out_flag, "output directory")
            ->each([&](const std::string& v) { ov.out_dir = v; });
    };

    auto* solve = app.add_subcommand("solve", "run the joint allocation solver once");
    auto* simulate = app.add_subcommand("simulate", "run a multi-round simulation");
    auto* sweep = app.add_subcommand("sweep", "heterogeneity sweep over speed ranges");
    auto* oracle = app.add_subcommand("oracle-check", "compare the solver against the grid oracle");
    for (auto* cmd : {solve, simulate, sweep, oracle}) add_common(cmd);

    CLI11_PARSE(app, argc, argv);

    try {
        const ScenarioConfig config = resolve_config(config_path, ov);
        if (solve->parsed()) return cmd_solve(config);
        if (simulate->parsed()) return cmd_simulate(config);
        if (sweep->parsed()) return cmd_sweep(config);
        if (oracle->parsed()) return cmd_oracle_check(config);
    } catch (const jcpba::ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return kExitParseError;
    } catch (const jcpba::ValidationError& e) {
        std::cerr << "invalid scenario: " << e.what() << "\n";
        return kExitValidationError;
    } catch (const jcpba::Infeasible& e) {
        std::cerr << "infeasible: " << e.what() << "\n";
        return kExitInfeasible;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
