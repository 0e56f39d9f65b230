#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "jcpba/errors.hpp"
#include "jcpba/latency.hpp"

namespace jcpba::solver {

// Everything about one client that is constant within a round: compute
// profile, memory budget, per-Hz spectral efficiencies (channel terms folded
// out of B_k), and the model's FLOP/bit loads.
struct ClientStatic {
    latency::ComputeProfile compute;
    double memory_budget_bytes = 0.0;   // b-hat_k
    double spectral_eff_down = 0.0;     // bits/s/Hz
    double spectral_eff_up = 0.0;       // bits/s/Hz
    double adapter_flops = 0.0;         // a
    double emulator_flops_unpruned = 0.0;  // e0
    double adapter_bits = 0.0;
    double emulator_bits = 0.0;
    double update_bits = 0.0;
};

struct ConstraintSet {
    double total_bandwidth_hz = 1e8;  // B
    double beta_min = 0.05;
    double beta_max = 0.8;
    double xi = 0.1;
    double phi = 0.4;
    double psi = 1.0;
    double gamma_min = 0.6;
    std::int64_t n_clients = 8;   // K
    std::int64_t batch_size = 4;  // N
    double memory_overhead = 4.0;  // kappa

    void validate() const;
};

struct Allocation {
    std::vector<double> beta;
    std::vector<double> bandwidth_hz;
    std::vector<double> per_client_latency_s;
    double objective_s = 0.0;
};

struct SolveReport {
    std::int64_t iterations = 0;
    std::vector<double> objective_trace;
    bool converged = false;
    Allocation final;
};

// --- latency pieces used by both subproblems ---

// Compute-side latency at beta, T = A_k - (M e0 / f_k) * extra pruning.
double comp_part(const ClientStatic& c, double beta);

// Hertz-normalized bit load D_k: T^comm = D_k / B_k.
double bit_load_per_hz(const ClientStatic& c, double beta);

// Full T_k(beta_k, B_k); infinite comm is an error unless the load is zero.
double client_latency(const ClientStatic& c, double beta, double bandwidth_hz);

// --- constraint algebra ---

// Largest allowed sum of pruning rates under C5.
double pruning_budget(const ConstraintSet& cs);

// Smallest beta satisfying the memory constraint C3.
double memory_lower_bound(const ClientStatic& client, const ConstraintSet& cs);

// Empty when a feasible allocation exists, else the violated constraint ids.
std::vector<std::string> feasibility_check(std::span<const ClientStatic> clients,
                                           const ConstraintSet& cs);

// Independent re-validation of a finished allocation against C1-C5; returns
// violated constraint ids. Recomputes every bound from first principles and
// does not trust any solver state.
std::vector<std::string> validate_allocation(std::span<const ClientStatic> clients,
                                             const ConstraintSet& cs, const Allocation& alloc,
                                             double tolerance = 1e-6);

// --- subproblems ---

// Equal-latency (water-filling) bandwidth split at fixed pruning rates: the
// unique T* > max_k A_k with sum_k D_k / (T* - A_k) = B. Clients with zero
// bit load are excluded and get B_k = 0.
struct BandwidthSolution {
    std::vector<double> bandwidth_hz;
    double objective_s = 0.0;
};

BandwidthSolution bandwidth_subproblem(std::span<const ClientStatic> clients,
                                       std::span<const double> beta, double total_bandwidth_hz);

// Min-max pruning rates at fixed bandwidths under the per-client boxes and
// the coupled C5 budget; leftover budget is spent greedily on the currently
// slowest client (lowest index wins ties).
struct PruningSolution {
    std::vector<double> beta;
    double objective_s = 0.0;
};

PruningSolution pruning_subproblem(std::span<const ClientStatic> clients,
                                   std::span<const double> bandwidth_hz,
                                   const ConstraintSet& cs);

// --- Algorithm: alternate the two exact subproblem solves ---

struct BcdOptions {
    double epsilon_s = 1e-4;
    std::int64_t max_iterations = 50;
    std::optional<std::vector<double>> initial_beta;       // default beta_min
    std::optional<std::vector<double>> initial_bandwidth;  // default B/K
};

SolveReport bcd_solve(std::span<const ClientStatic> clients, const ConstraintSet& cs,
                      const BcdOptions& opts = {});

// Exhaustive grid oracle for K <= 3: enumerates beta tuples, solves the exact
// bandwidth subproblem at each, keeps the best feasible point.
Allocation brute_force_oracle(std::span<const ClientStatic> clients, const ConstraintSet& cs,
                              std::int64_t grid_points);

}  // namespace jcpba::solver
