#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "jcpba/errors.hpp"
#include "jcpba/fedsim.hpp"

namespace jcpba::scenario {

// Machine-readable form of the default experiment setup: every field has a
// documented default, unknown keys are rejected with their full path.
struct ScenarioConfig {
    std::string architecture_preset = "gpt2-medium";
    arch::TransformerDescriptor descriptor;  // resolved preset or explicit shape
    arch::PartitionSpec partition{0, 21, 22, 23};
    channel::LinkBudget link;
    solver::ConstraintSet constraints;

    double f0_flops = 1e12;
    std::pair<double, double> speed_range{0.5, 2.0};
    std::pair<double, double> mem_range_gb{4.0, 8.0};
    std::int64_t m_iterations = 20;
    std::int64_t batch_size = 4;

    std::int64_t n_clients = 8;

    std::int64_t rounds = 50;
    std::uint64_t seed = 42;
    std::string policy = "jcpba";
    double ubfp_beta = 0.3;
    std::int64_t adapter_dimension = 32;
    double step_scale = 0.01;
    double loss_start = 3.0;
    double loss_floor = 1.0;
    double loss_decay = 0.05;

    std::vector<std::pair<double, double>> sweep_speed_ranges{{1.0, 1.5}, {0.5, 2.0}, {0.2, 2.5}};
    std::vector<std::string> sweep_policies{"jcpba", "ubfp"};

    double solver_epsilon_s = 1e-4;
    std::int64_t solver_max_iterations = 50;
    std::int64_t oracle_grid_points = 201;

    std::string output_dir = ".";

    void validate() const;

    fedsim::SimulationSetup simulation_setup() const;
    fedsim::ClientPopulation sample_population() const;
};

ScenarioConfig default_scenario();

// Parses the document (empty input means all defaults), applies defaults,
// validates, and rejects unknown keys with their path.
ScenarioConfig parse_scenario(const std::string& text);
ScenarioConfig load_scenario(const std::string& path);

// Canonical serialization; parse(serialize(c)) reproduces c exactly.
std::string serialize_scenario(const ScenarioConfig& config);

// FNV-1a digest of the canonical serialization, for output provenance.
std::uint64_t config_hash(const ScenarioConfig& config);

nlohmann::json to_json(const ScenarioConfig& config);

}  // namespace jcpba::scenario
