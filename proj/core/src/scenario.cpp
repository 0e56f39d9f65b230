#include "jcpba/scenario.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace jcpba::scenario {

using nlohmann::json;

namespace {

void reject_unknown(const json& obj, const std::string& path,
                    const std::set<std::string>& allowed) {
    for (const auto& [key, value] : obj.items()) {
        if (!allowed.contains(key)) {
            throw UnknownKey(path.empty() ? key : path + "." + key);
        }
    }
}

template <typename T>
void read(const json& obj, const std::string& key, const std::string& path, T& out) {
    if (!obj.contains(key)) return;
    try {
        out = obj.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ValidationError(path.empty() ? key : path + "." + key, e.what());
    }
}

void read_range(const json& obj, const std::string& key, const std::string& path,
                std::pair<double, double>& out) {
    if (!obj.contains(key)) return;
    const auto& arr = obj.at(key);
    if (!arr.is_array() || arr.size() != 2) {
        throw ValidationError(path + "." + key, "expected a [lo, hi] pair");
    }
    out = {arr[0].get<double>(), arr[1].get<double>()};
}

void require_positive(double value, const std::string& key) {
    if (!(value > 0.0)) throw ValidationError(key, "must be > 0");
}

}  // namespace

void ScenarioConfig::validate() const {
    if (descriptor.n_layers < 2) throw ValidationError("architecture.n_layers", "must be >= 2");
    if (descriptor.d_model <= 0 || descriptor.n_heads <= 0 ||
        descriptor.d_model % descriptor.n_heads != 0) {
        throw ValidationError("architecture.d_model", "must be positive and divisible by n_heads");
    }
    if (descriptor.d_ff <= 0) throw ValidationError("architecture.d_ff", "must be > 0");
    if (descriptor.vocab_size <= 0) throw ValidationError("architecture.vocab_size", "must be > 0");
    if (descriptor.seq_len <= 0) throw ValidationError("architecture.seq_len", "must be > 0");
    if (descriptor.bytes_per_param <= 0) {
        throw ValidationError("architecture.bytes_per_param", "must be > 0");
    }
    try {
        partition.validate(descriptor);
    } catch (const InvalidPartition& e) {
        throw ValidationError("partition", e.what());
    }

    require_positive(link.server_power_w, "link.server_power_w");
    require_positive(link.client_power_w, "link.client_power_w");
    require_positive(link.noise_power_w, "link.noise_power_w");
    if (link.path_loss_db < 0.0) throw ValidationError("link.path_loss_db", "must be >= 0");

    if (constraints.beta_min < 0.0 || constraints.beta_min > constraints.beta_max) {
        throw ValidationError("constraints.beta_min", "must satisfy 0 <= beta_min <= beta_max");
    }
    if (constraints.beta_max >= 1.0) throw ValidationError("constraints.beta_max", "must be < 1");
    require_positive(constraints.total_bandwidth_hz, "link.total_bandwidth_hz");
    require_positive(constraints.xi, "constraints.xi");
    require_positive(constraints.phi, "constraints.phi");
    require_positive(constraints.psi, "constraints.psi");
    require_positive(constraints.gamma_min, "constraints.gamma_min");
    if (constraints.memory_overhead < 1.0) {
        throw ValidationError("constraints.memory_overhead", "must be >= 1");
    }

    require_positive(f0_flops, "compute.f0_flops");
    if (!(speed_range.first > 0.0) || speed_range.second < speed_range.first) {
        throw ValidationError("compute.speed_range", "must satisfy 0 < lo <= hi");
    }
    if (!(mem_range_gb.first > 0.0) || mem_range_gb.second < mem_range_gb.first) {
        throw ValidationError("compute.mem_range_gb", "must satisfy 0 < lo <= hi");
    }
    if (m_iterations < 1) throw ValidationError("compute.m_iterations", "must be >= 1");
    if (batch_size < 1) throw ValidationError("compute.batch_size", "must be >= 1");

    if (n_clients < 1) throw ValidationError("population.n_clients", "must be >= 1");
    if (rounds < 0) throw ValidationError("simulation.rounds", "must be >= 0");
    if (policy != "jcpba" && policy != "ubfp") {
        throw ValidationError("simulation.policy", "must be 'jcpba' or 'ubfp'");
    }
    if (ubfp_beta < 0.0 || ubfp_beta >= 1.0) {
        throw ValidationError("simulation.ubfp_beta", "must be in [0,1)");
    }
    if (adapter_dimension < 1) {
        throw ValidationError("simulation.adapter_dimension", "must be >= 1");
    }
    for (const auto& p : sweep_policies) {
        if (p != "jcpba" && p != "ubfp") {
            throw ValidationError("sweep.policies", "must list only 'jcpba' or 'ubfp'");
        }
    }
    for (const auto& [lo, hi] : sweep_speed_ranges) {
        if (!(lo > 0.0) || hi < lo) {
            throw ValidationError("sweep.speed_ranges", "each range must satisfy 0 < lo <= hi");
        }
    }
    require_positive(solver_epsilon_s, "solver.epsilon_s");
    if (solver_max_iterations < 1) throw ValidationError("solver.max_iterations", "must be >= 1");
    if (oracle_grid_points < 1) throw ValidationError("oracle.grid_points", "must be >= 1");
}

fedsim::SimulationSetup ScenarioConfig::simulation_setup() const {
    fedsim::SimulationSetup setup;
    setup.descriptor = descriptor;
    setup.partition = partition;
    setup.link = link;
    setup.constraints = constraints;
    setup.constraints.n_clients = n_clients;
    setup.constraints.batch_size = batch_size;
    setup.compute_defaults.flops_per_second = f0_flops;
    setup.compute_defaults.local_iterations = m_iterations;
    setup.compute_defaults.batch_size = batch_size;
    setup.ubfp_beta = ubfp_beta;
    setup.step_scale = step_scale;
    setup.adapter_dimension = adapter_dimension;
    setup.loss_start = loss_start;
    setup.loss_floor = loss_floor;
    setup.loss_decay = loss_decay;
    return setup;
}

fedsim::ClientPopulation ScenarioConfig::sample_population() const {
    return fedsim::sample_population(n_clients, f0_flops, speed_range.first, speed_range.second,
                                     mem_range_gb.first, mem_range_gb.second, seed);
}

ScenarioConfig default_scenario() {
    ScenarioConfig config;
    config.descriptor = arch::preset(config.architecture_preset);
    return config;
}

ScenarioConfig parse_scenario(const std::string& text) {
    json doc;
    std::string trimmed = text;
    trimmed.erase(0, trimmed.find_first_not_of(" \t\r\n"));
    if (trimmed.empty()) {
        doc = json::object();
    } else {
        try {
            doc = json::parse(text);
        } catch (const json::parse_error& e) {
            throw ParseError(e.what());
        }
    }
    if (!doc.is_object()) throw ParseError("scenario document must be an object");

    reject_unknown(doc, "",
                   {"architecture", "partition", "link", "constraints", "compute", "population",
                    "simulation", "sweep", "solver", "oracle", "output"});

    ScenarioConfig config = default_scenario();

    if (doc.contains("architecture")) {
        const auto& a = doc.at("architecture");
        reject_unknown(a, "architecture",
                       {"preset", "n_layers", "d_model", "n_heads", "d_ff", "vocab_size",
                        "seq_len", "bytes_per_param"});
        read(a, "preset", "architecture", config.architecture_preset);
        try {
            config.descriptor = arch::preset(config.architecture_preset);
        } catch (const OutOfRange& e) {
            throw ValidationError("architecture.preset", e.what());
        }
        read(a, "n_layers", "architecture", config.descriptor.n_layers);
        read(a, "d_model", "architecture", config.descriptor.d_model);
        read(a, "n_heads", "architecture", config.descriptor.n_heads);
        read(a, "d_ff", "architecture", config.descriptor.d_ff);
        read(a, "vocab_size", "architecture", config.descriptor.vocab_size);
        read(a, "seq_len", "architecture", config.descriptor.seq_len);
        read(a, "bytes_per_param", "architecture", config.descriptor.bytes_per_param);
    }

    if (doc.contains("partition")) {
        const auto& p = doc.at("partition");
        reject_unknown(p, "partition", {"emulator_layers", "adapter_layers"});
        std::pair<double, double> emu{static_cast<double>(config.partition.emulator_first),
                                      static_cast<double>(config.partition.emulator_last)};
        std::pair<double, double> ada{static_cast<double>(config.partition.adapter_first),
                                      static_cast<double>(config.partition.adapter_last)};
        read_range(p, "emulator_layers", "partition", emu);
        read_range(p, "adapter_layers", "partition", ada);
        config.partition.emulator_first = static_cast<std::int64_t>(emu.first);
        config.partition.emulator_last = static_cast<std::int64_t>(emu.second);
        config.partition.adapter_first = static_cast<std::int64_t>(ada.first);
        config.partition.adapter_last = static_cast<std::int64_t>(ada.second);
    }

    if (doc.contains("link")) {
        const auto& l = doc.at("link");
        reject_unknown(l, "link",
                       {"server_power_w", "client_power_w", "noise_power_w", "path_loss_db",
                        "total_bandwidth_hz"});
        read(l, "server_power_w", "link", config.link.server_power_w);
        read(l, "client_power_w", "link", config.link.client_power_w);
        read(l, "noise_power_w", "link", config.link.noise_power_w);
        read(l, "path_loss_db", "link", config.link.path_loss_db);
        read(l, "total_bandwidth_hz", "link", config.constraints.total_bandwidth_hz);
    }

    if (doc.contains("constraints")) {
        const auto& c = doc.at("constraints");
        reject_unknown(c, "constraints",
                       {"beta_min", "beta_max", "xi", "phi", "psi", "gamma_min",
                        "memory_overhead"});
        read(c, "beta_min", "constraints", config.constraints.beta_min);
        read(c, "beta_max", "constraints", config.constraints.beta_max);
        read(c, "xi", "constraints", config.constraints.xi);
        read(c, "phi", "constraints", config.constraints.phi);
        read(c, "psi", "constraints", config.constraints.psi);
        read(c, "gamma_min", "constraints", config.constraints.gamma_min);
        read(c, "memory_overhead", "constraints", config.constraints.memory_overhead);
    }

    if (doc.contains("compute")) {
        const auto& c = doc.at("compute");
        reject_unknown(c, "compute",
                       {"f0_flops", "speed_range", "mem_range_gb", "m_iterations", "batch_size"});
        read(c, "f0_flops", "compute", config.f0_flops);
        read_range(c, "speed_range", "compute", config.speed_range);
        read_range(c, "mem_range_gb", "compute", config.mem_range_gb);
        read(c, "m_iterations", "compute", config.m_iterations);
        read(c, "batch_size", "compute", config.batch_size);
    }

    if (doc.contains("population")) {
        const auto& p = doc.at("population");
        reject_unknown(p, "population", {"n_clients"});
        read(p, "n_clients", "population", config.n_clients);
    }

    if (doc.contains("simulation")) {
        const auto& s = doc.at("simulation");
        reject_unknown(s, "simulation",
                       {"rounds", "seed", "policy", "ubfp_beta", "adapter_dimension",
                        "step_scale", "loss_start", "loss_floor", "loss_decay"});
        read(s, "rounds", "simulation", config.rounds);
        read(s, "seed", "simulation", config.seed);
        read(s, "policy", "simulation", config.policy);
        read(s, "ubfp_beta", "simulation", config.ubfp_beta);
        read(s, "adapter_dimension", "simulation", config.adapter_dimension);
        read(s, "step_scale", "simulation", config.step_scale);
        read(s, "loss_start", "simulation", config.loss_start);
        read(s, "loss_floor", "simulation", config.loss_floor);
        read(s, "loss_decay", "simulation", config.loss_decay);
    }

    if (doc.contains("sweep")) {
        const auto& s = doc.at("sweep");
        reject_unknown(s, "sweep", {"speed_ranges", "policies"});
        if (s.contains("speed_ranges")) {
            config.sweep_speed_ranges.clear();
            for (const auto& r : s.at("speed_ranges")) {
                if (!r.is_array() || r.size() != 2) {
                    throw ValidationError("sweep.speed_ranges", "each entry must be [lo, hi]");
                }
                config.sweep_speed_ranges.emplace_back(r[0].get<double>(), r[1].get<double>());
            }
        }
        read(s, "policies", "sweep", config.sweep_policies);
    }

    if (doc.contains("solver")) {
        const auto& s = doc.at("solver");
        reject_unknown(s, "solver", {"epsilon_s", "max_iterations"});
        read(s, "epsilon_s", "solver", config.solver_epsilon_s);
        read(s, "max_iterations", "solver", config.solver_max_iterations);
    }

    if (doc.contains("oracle")) {
        const auto& o = doc.at("oracle");
        reject_unknown(o, "oracle", {"grid_points"});
        read(o, "grid_points", "oracle", config.oracle_grid_points);
    }

    if (doc.contains("output")) {
        const auto& o = doc.at("output");
        reject_unknown(o, "output", {"dir"});
        read(o, "dir", "output", config.output_dir);
    }

    config.validate();
    return config;
}

ScenarioConfig load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open scenario file: " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_scenario(buffer.str());
}

json to_json(const ScenarioConfig& c) {
    json doc;
    doc["architecture"] = {
        {"preset", c.architecture_preset}, {"n_layers", c.descriptor.n_layers},
        {"d_model", c.descriptor.d_model}, {"n_heads", c.descriptor.n_heads},
        {"d_ff", c.descriptor.d_ff},       {"vocab_size", c.descriptor.vocab_size},
        {"seq_len", c.descriptor.seq_len}, {"bytes_per_param", c.descriptor.bytes_per_param},
    };
    doc["partition"] = {
        {"emulator_layers", {c.partition.emulator_first, c.partition.emulator_last}},
        {"adapter_layers", {c.partition.adapter_first, c.partition.adapter_last}},
    };
    doc["link"] = {
        {"server_power_w", c.link.server_power_w},
        {"client_power_w", c.link.client_power_w},
        {"noise_power_w", c.link.noise_power_w},
        {"path_loss_db", c.link.path_loss_db},
        {"total_bandwidth_hz", c.constraints.total_bandwidth_hz},
    };
    doc["constraints"] = {
        {"beta_min", c.constraints.beta_min},
        {"beta_max", c.constraints.beta_max},
        {"xi", c.constraints.xi},
        {"phi", c.constraints.phi},
        {"psi", c.constraints.psi},
        {"gamma_min", c.constraints.gamma_min},
        {"memory_overhead", c.constraints.memory_overhead},
    };
    doc["compute"] = {
        {"f0_flops", c.f0_flops},
        {"speed_range", {c.speed_range.first, c.speed_range.second}},
        {"mem_range_gb", {c.mem_range_gb.first, c.mem_range_gb.second}},
        {"m_iterations", c.m_iterations},
        {"batch_size", c.batch_size},
    };
    doc["population"] = {{"n_clients", c.n_clients}};
    doc["simulation"] = {
        {"rounds", c.rounds},
        {"seed", c.seed},
        {"policy", c.policy},
        {"ubfp_beta", c.ubfp_beta},
        {"adapter_dimension", c.adapter_dimension},
        {"step_scale", c.step_scale},
        {"loss_start", c.loss_start},
        {"loss_floor", c.loss_floor},
        {"loss_decay", c.loss_decay},
    };
    json ranges = json::array();
    for (const auto& [lo, hi] : c.sweep_speed_ranges) ranges.push_back({lo, hi});
    doc["sweep"] = {{"speed_ranges", ranges}, {"policies", c.sweep_policies}};
    doc["solver"] = {{"epsilon_s", c.solver_epsilon_s},
                     {"max_iterations", c.solver_max_iterations}};
    doc["oracle"] = {{"grid_points", c.oracle_grid_points}};
    doc["output"] = {{"dir", c.output_dir}};
    return doc;
}

std::string serialize_scenario(const ScenarioConfig& config) {
    return to_json(config).dump(2);
}

std::uint64_t config_hash(const ScenarioConfig& config) {
    // FNV-1a, 64-bit, over the semantic content only: the output directory
    // does not change what is computed.
    auto doc = to_json(config);
    doc.erase("output");
    const std::string text = doc.dump(2);
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        hash ^= ch;
        hash *= 0x100000001b3ULL;
    }
    return hash;
}

}  // namespace jcpba::scenario
