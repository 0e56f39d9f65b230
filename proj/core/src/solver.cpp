#include "jcpba/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace jcpba::solver {

namespace {

constexpr double kBisectRelTol = 1e-12;
constexpr int kBisectMaxIters = 200;

double clamp(double x, double lo, double hi) { return std::min(hi, std::max(lo, x)); }

// Root of sum_i load_i / (T - comp_i) = total_bandwidth over the clients with
// load_i > 0, i.e. the equal-latency water level. Safeguarded Newton: the
// demand curve is convex and decreasing in T, so after the first step the
// iterates approach the root monotonically from the left.
double equal_latency_target(std::span<const double> comp, std::span<const double> load,
                            double total_bandwidth) {
    double floor = 0.0;
    double load_sum = 0.0;
    for (std::size_t i = 0; i < comp.size(); ++i) {
        if (load[i] > 0.0) {
            floor = std::max(floor, comp[i]);
            load_sum += load[i];
        }
    }
    double t = floor + load_sum / total_bandwidth;  // demand(t) <= B here
    for (int iter = 0; iter < 100; ++iter) {
        double g = -total_bandwidth;
        double gp = 0.0;
        for (std::size_t i = 0; i < comp.size(); ++i) {
            if (load[i] <= 0.0) continue;
            const double d = t - comp[i];
            const double q = load[i] / d;
            g += q;
            gp -= q / d;
        }
        double next = t - g / gp;
        if (!(next > floor)) next = 0.5 * (t + floor);
        if (std::abs(next - t) <= 1e-15 * t) return next;
        t = next;
    }
    return t;
}

// The alternation can stall on the equal-latency manifold: once every client
// finishes at the same time and the C5 budget is tight, neither block moves
// alone. The escape uses the structure of the joint problem. At a fixed
// target T the total bandwidth demand is
//     Phi(T, beta) = sum_i D_i(beta_i) / (T - A_i(beta_i)),
// with D_i (bit load per Hz) and A_i (compute time) affine decreasing in
// beta_i. Phi is separable convex in beta, and d(Phi)/d(beta_i) =
// -C_i / u_i^2 with u_i = T - A_i(beta_i) and the beta-independent constant
//     C_i = q_i * D_i(0) + p_i * (T - A_i(0)),
// where q_i = -A_i', p_i = -D_i'. Minimizing Phi over the C5 simplex is
// therefore a water-filling with u_i proportional to sqrt(C_i); bisection on
// the multiplier meets the budget and an outer bisection on T finds the
// smallest target whose minimal demand fits the spectrum. That smallest T is
// the joint optimum of the whole min-max problem.
struct JointBox {
    std::vector<double> lo, hi;
    double budget = 0.0;
};

bool joint_pruning(std::span<const ClientStatic> clients, const JointBox& box,
                   double total_bandwidth, double t_upper, std::vector<double>& beta_out) {
    const std::size_t k = clients.size();
    std::vector<double> a0(k), d0(k), p(k), q(k);
    double floor = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        const auto& c = clients[i];
        a0[i] = comp_part(c, 0.0);
        d0[i] = bit_load_per_hz(c, 0.0);
        p[i] = c.emulator_bits / c.spectral_eff_down;
        q[i] = static_cast<double>(c.compute.local_iterations) * c.emulator_flops_unpruned /
               c.compute.flops_per_second;
        if (d0[i] <= 0.0 || q[i] <= 0.0) return false;  // degenerate client; keep alternation
        floor = std::max(floor, a0[i] - q[i] * box.hi[i]);
    }

    double hi_sum = 0.0;
    for (std::size_t i = 0; i < k; ++i) hi_sum += box.hi[i];

    std::vector<double> beta(k);
    // beta for a given T at the equal-marginal multiplier meeting the budget
    const auto beta_at = [&](double target) {
        if (hi_sum <= box.budget) {
            beta = box.hi;
            return;
        }
        std::vector<double> c_i(k);
        for (std::size_t i = 0; i < k; ++i) {
            c_i[i] = q[i] * d0[i] + p[i] * (target - a0[i]);
        }
        const auto fill = [&](double lambda) {
            double sum = 0.0;
            for (std::size_t i = 0; i < k; ++i) {
                double b;
                if (c_i[i] <= 0.0) {
                    b = box.hi[i];
                } else {
                    const double u = std::sqrt(c_i[i] / lambda);
                    b = clamp((u - (target - a0[i])) / q[i], box.lo[i], box.hi[i]);
                }
                beta[i] = b;
                sum += b;
            }
            return sum;
        };
        double log_lo = -80.0, log_hi = 80.0;
        for (int iter = 0; iter < 200; ++iter) {
            const double mid = 0.5 * (log_lo + log_hi);
            (fill(std::exp(mid)) > box.budget ? log_lo : log_hi) = mid;
        }
        fill(std::exp(log_hi));
    };

    // minimal demand at T; +inf when some client cannot even finish computing
    const auto demand = [&](double target) {
        beta_at(target);
        double sum = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            const double u = target - (a0[i] - q[i] * beta[i]);
            if (u <= 0.0) return std::numeric_limits<double>::infinity();
            sum += (d0[i] - p[i] * beta[i]) / u;
        }
        return sum;
    };

    if (!(t_upper > floor) || demand(t_upper) > total_bandwidth) return false;
    double lo_t = floor, hi_t = t_upper;
    for (int iter = 0;
         iter < kBisectMaxIters && (hi_t - lo_t) > kBisectRelTol * std::max(hi_t, 1.0); ++iter) {
        const double mid = 0.5 * (lo_t + hi_t);
        (demand(mid) > total_bandwidth ? lo_t : hi_t) = mid;
    }
    beta_at(hi_t);
    beta_out = beta;
    return true;
}

}  // namespace

void ConstraintSet::validate() const {
    if (total_bandwidth_hz <= 0.0) throw OutOfRange("total bandwidth must be > 0");
    if (beta_min < 0.0 || beta_min > beta_max || beta_max >= 1.0) {
        throw OutOfRange("pruning bounds must satisfy 0 <= beta_min <= beta_max < 1");
    }
    if (xi <= 0.0 || phi <= 0.0 || psi <= 0.0 || gamma_min <= 0.0) {
        throw OutOfRange("C5 constants must be > 0");
    }
    if (n_clients < 1) throw OutOfRange("need at least one client");
    if (batch_size < 1) throw OutOfRange("batch size must be >= 1");
    if (memory_overhead < 1.0) throw OutOfRange("memory overhead factor must be >= 1");
}

double comp_part(const ClientStatic& c, double beta) {
    const double per_iter = c.adapter_flops + c.emulator_flops_unpruned * (1.0 - beta);
    return static_cast<double>(c.compute.local_iterations) * per_iter / c.compute.flops_per_second;
}

double bit_load_per_hz(const ClientStatic& c, double beta) {
    return (c.adapter_bits + (1.0 - beta) * c.emulator_bits) / c.spectral_eff_down +
           c.update_bits / c.spectral_eff_up;
}

double client_latency(const ClientStatic& c, double beta, double bandwidth_hz) {
    const double load = bit_load_per_hz(c, beta);
    if (load == 0.0) return comp_part(c, beta);
    if (bandwidth_hz <= 0.0) return std::numeric_limits<double>::infinity();
    return comp_part(c, beta) + load / bandwidth_hz;
}

double pruning_budget(const ConstraintSet& cs) {
    const double kn = static_cast<double>(cs.n_clients) * static_cast<double>(cs.batch_size);
    double slack = cs.gamma_min - cs.xi - cs.phi / kn;
    if (slack < 0.0 && slack > -1e-12 * cs.gamma_min) slack = 0.0;
    if (slack < 0.0) {
        throw InfeasibleC5("gamma_min below the pruning-free convergence bound");
    }
    const double budget = static_cast<double>(cs.n_clients) * slack / cs.psi;
    if (budget < static_cast<double>(cs.n_clients) * cs.beta_min) {
        throw InfeasibleC5("minimal pruning already exceeds the C5 budget");
    }
    return budget;
}

double memory_lower_bound(const ClientStatic& client, const ConstraintSet& cs) {
    const double adapter_bytes = client.adapter_bits / 8.0;
    const double emulator_bytes = client.emulator_bits / 8.0;
    const double usable = client.memory_budget_bytes / cs.memory_overhead;
    if (usable < adapter_bytes) {
        throw InfeasibleMemory("adapter alone exceeds the client memory budget");
    }
    double beta_mem = 0.0;
    if (emulator_bytes > 0.0) {
        beta_mem = clamp(1.0 - (usable - adapter_bytes) / emulator_bytes, 0.0, 1.0);
    }
    if (beta_mem > cs.beta_max) {
        throw InfeasibleMemory("memory budget requires pruning beyond beta_max");
    }
    return beta_mem;
}

std::vector<std::string> feasibility_check(std::span<const ClientStatic> clients,
                                           const ConstraintSet& cs) {
    std::vector<std::string> violated;
    auto add = [&violated](const std::string& id) {
        if (std::find(violated.begin(), violated.end(), id) == violated.end()) {
            violated.push_back(id);
        }
    };

    if (cs.total_bandwidth_hz <= 0.0) add("C1");
    if (cs.beta_min < 0.0 || cs.beta_min > cs.beta_max || cs.beta_max >= 1.0) add("C4");

    double budget = std::numeric_limits<double>::infinity();
    try {
        budget = pruning_budget(cs);
    } catch (const InfeasibleC5&) {
        add("C5");
    }

    double lo_sum = 0.0;
    for (const auto& c : clients) {
        try {
            lo_sum += std::max(cs.beta_min, memory_lower_bound(c, cs));
        } catch (const InfeasibleMemory&) {
            add("C3");
        }
    }
    if (violated.empty() && lo_sum > budget) add("C5");
    return violated;
}

std::vector<std::string> validate_allocation(std::span<const ClientStatic> clients,
                                             const ConstraintSet& cs, const Allocation& alloc,
                                             double tolerance) {
    std::vector<std::string> violated;
    auto add = [&violated](const std::string& id) {
        if (std::find(violated.begin(), violated.end(), id) == violated.end()) {
            violated.push_back(id);
        }
    };
    const std::size_t k = clients.size();
    if (alloc.beta.size() != k || alloc.bandwidth_hz.size() != k) {
        throw DimensionMismatch("allocation size does not match client count");
    }

    const double bw_sum = std::accumulate(alloc.bandwidth_hz.begin(), alloc.bandwidth_hz.end(), 0.0);
    if (bw_sum > cs.total_bandwidth_hz * (1.0 + tolerance)) add("C1");
    for (double b : alloc.bandwidth_hz) {
        if (b < -tolerance * cs.total_bandwidth_hz) add("C2");
    }

    double beta_sum = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        const double beta = alloc.beta[i];
        beta_sum += beta;
        if (beta < cs.beta_min - tolerance || beta > cs.beta_max + tolerance) add("C4");
        const double adapter_bytes = clients[i].adapter_bits / 8.0;
        const double emulator_bytes = clients[i].emulator_bits / 8.0;
        const double footprint =
            cs.memory_overhead * (adapter_bytes + (1.0 - beta) * emulator_bytes);
        if (footprint > clients[i].memory_budget_bytes * (1.0 + tolerance)) add("C3");
    }

    const double kn = static_cast<double>(cs.n_clients) * static_cast<double>(cs.batch_size);
    const double lhs = cs.xi + cs.phi / kn + cs.psi / static_cast<double>(cs.n_clients) * beta_sum;
    if (lhs > cs.gamma_min + tolerance * std::max(1.0, cs.gamma_min)) add("C5");
    return violated;
}

BandwidthSolution bandwidth_subproblem(std::span<const ClientStatic> clients,
                                       std::span<const double> beta, double total_bandwidth_hz) {
    const std::size_t k = clients.size();
    if (k == 0) throw EmptyClientSet("bandwidth subproblem over no clients");
    if (beta.size() != k) throw DimensionMismatch("beta size does not match client count");
    if (total_bandwidth_hz <= 0.0) throw OutOfRange("total bandwidth must be > 0");

    std::vector<double> comp(k), load(k);
    std::vector<std::size_t> active;
    double comp_max_all = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        comp[i] = comp_part(clients[i], beta[i]);
        load[i] = bit_load_per_hz(clients[i], beta[i]);
        comp_max_all = std::max(comp_max_all, comp[i]);
        if (load[i] > 0.0) active.push_back(i);
    }

    BandwidthSolution sol;
    sol.bandwidth_hz.assign(k, 0.0);
    if (active.empty()) {
        sol.objective_s = comp_max_all;
        return sol;
    }

    const double target = equal_latency_target(comp, load, total_bandwidth_hz);

    double bw_sum = 0.0;
    for (std::size_t i : active) {
        sol.bandwidth_hz[i] = load[i] / (target - comp[i]);
        bw_sum += sol.bandwidth_hz[i];
    }
    // Rescale so the C1 sum is exact; the factor is within bisection tolerance
    // of 1 so the equal-latency property survives.
    const double scale = total_bandwidth_hz / bw_sum;
    for (std::size_t i : active) sol.bandwidth_hz[i] *= scale;

    double objective = comp_max_all;
    for (std::size_t i : active) {
        objective = std::max(objective, comp[i] + load[i] / sol.bandwidth_hz[i]);
    }
    sol.objective_s = objective;
    return sol;
}

PruningSolution pruning_subproblem(std::span<const ClientStatic> clients,
                                   std::span<const double> bandwidth_hz,
                                   const ConstraintSet& cs) {
    const std::size_t k = clients.size();
    if (k == 0) throw EmptyClientSet("pruning subproblem over no clients");
    if (bandwidth_hz.size() != k) throw DimensionMismatch("bandwidth size mismatch");
    const double budget = pruning_budget(cs);

    // T_i(beta) = g[i] - c[i] * beta within the box [lo, hi].
    std::vector<double> g(k), c(k), lo(k), hi(k);
    double lo_sum = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        const auto& cl = clients[i];
        const double load0 = bit_load_per_hz(cl, 0.0);
        if (load0 > 0.0 && bandwidth_hz[i] <= 0.0) {
            throw ZeroRate("client has bit load but zero bandwidth");
        }
        g[i] = client_latency(cl, 0.0, bandwidth_hz[i]);
        c[i] = static_cast<double>(cl.compute.local_iterations) * cl.emulator_flops_unpruned /
               cl.compute.flops_per_second;
        if (bandwidth_hz[i] > 0.0) {
            c[i] += cl.emulator_bits / (cl.spectral_eff_down * bandwidth_hz[i]);
        }
        lo[i] = std::max(cs.beta_min, memory_lower_bound(cl, cs));
        hi[i] = cs.beta_max;
        if (lo[i] > hi[i]) throw InfeasibleBox("empty pruning box");
        lo_sum += lo[i];
    }
    if (lo_sum > budget * (1.0 + 1e-12)) {
        throw InfeasibleC5("sum of minimal pruning rates exceeds the C5 budget");
    }

    const auto required = [&](double target, std::size_t i) {
        if (c[i] <= 0.0) return lo[i];
        return clamp((g[i] - target) / c[i], lo[i], hi[i]);
    };
    const auto demand = [&](double target) {
        double sum = 0.0;
        for (std::size_t i = 0; i < k; ++i) sum += required(target, i);
        return sum;
    };

    // Floor: the latency when every client prunes as hard as its box allows.
    double t_floor = 0.0;
    double t_ceiling = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        t_floor = std::max(t_floor, g[i] - c[i] * hi[i]);
        t_ceiling = std::max(t_ceiling, g[i] - c[i] * lo[i]);
    }

    // Phase 1: smallest target T whose required pruning fits the C5 budget.
    double target;
    if (demand(t_floor) <= budget) {
        target = t_floor;
    } else {
        double lo_t = t_floor, hi_t = t_ceiling;
        for (int iter = 0; iter < kBisectMaxIters && (hi_t - lo_t) > kBisectRelTol * std::max(hi_t, 1.0);
             ++iter) {
            const double mid = 0.5 * (lo_t + hi_t);
            (demand(mid) > budget ? lo_t : hi_t) = mid;
        }
        target = hi_t;
    }
    const double t_star = target;

    // Phase 2: spend any leftover C5 budget lowering non-bottleneck latencies
    // (the slowest raisable client first). The water level may drop below
    // t_floor once the bottleneck's box has capped out.
    if (budget - demand(t_star) > 1e-15 * std::max(1.0, budget)) {
        double t_all_hi = t_star;
        for (std::size_t i = 0; i < k; ++i) {
            if (c[i] > 0.0) t_all_hi = std::min(t_all_hi, g[i] - c[i] * hi[i]);
        }
        if (demand(t_all_hi) <= budget) {
            target = t_all_hi;
        } else {
            double lo_t = t_all_hi, hi_t = t_star;
            for (int iter = 0;
                 iter < kBisectMaxIters && (hi_t - lo_t) > kBisectRelTol * std::max(std::abs(hi_t), 1.0);
                 ++iter) {
                const double mid = 0.5 * (lo_t + hi_t);
                (demand(mid) > budget ? lo_t : hi_t) = mid;
            }
            target = hi_t;
        }
    }

    PruningSolution sol;
    sol.beta.resize(k);
    for (std::size_t i = 0; i < k; ++i) sol.beta[i] = required(target, i);

    double objective = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        objective = std::max(objective, g[i] - c[i] * sol.beta[i]);
    }
    sol.objective_s = objective;
    return sol;
}

SolveReport bcd_solve(std::span<const ClientStatic> clients, const ConstraintSet& cs,
                      const BcdOptions& opts) {
    cs.validate();
    const auto violated = feasibility_check(clients, cs);
    if (!violated.empty()) {
        std::string ids;
        for (const auto& v : violated) ids += (ids.empty() ? "" : ",") + v;
        throw Infeasible(ids, "no feasible allocation exists");
    }

    const std::size_t k = clients.size();
    std::vector<double> beta =
        opts.initial_beta ? *opts.initial_beta : std::vector<double>(k, cs.beta_min);
    std::vector<double> bandwidth =
        opts.initial_bandwidth
            ? *opts.initial_bandwidth
            : std::vector<double>(k, cs.total_bandwidth_hz / static_cast<double>(k));
    if (beta.size() != k || bandwidth.size() != k) {
        throw DimensionMismatch("initial point size does not match client count");
    }

    const auto objective_at = [&]() {
        double worst = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            worst = std::max(worst, client_latency(clients[i], beta[i], bandwidth[i]));
        }
        return worst;
    };

    JointBox box;
    box.lo.resize(k);
    box.hi.assign(k, cs.beta_max);
    box.budget = pruning_budget(cs);
    for (std::size_t i = 0; i < k; ++i) {
        box.lo[i] = std::max(cs.beta_min, memory_lower_bound(clients[i], cs));
    }

    SolveReport report;
    report.objective_trace.push_back(objective_at());
    for (std::int64_t t = 1; t <= opts.max_iterations; ++t) {
        auto pruning = pruning_subproblem(clients, bandwidth, cs);
        beta = std::move(pruning.beta);
        auto bw = bandwidth_subproblem(clients, beta, cs.total_bandwidth_hz);

        // pruning-aware escape from the equal-latency stall (see joint_pruning)
        std::vector<double> candidate;
        if (joint_pruning(clients, box, cs.total_bandwidth_hz, bw.objective_s, candidate)) {
            auto refined = bandwidth_subproblem(clients, candidate, cs.total_bandwidth_hz);
            if (refined.objective_s < bw.objective_s) {
                beta = std::move(candidate);
                bw = std::move(refined);
            }
        }
        bandwidth = std::move(bw.bandwidth_hz);

        report.iterations = t;
        const double objective = objective_at();
        const double previous = report.objective_trace.back();
        report.objective_trace.push_back(objective);
        if (std::abs(objective - previous) < opts.epsilon_s) {
            report.converged = true;
            break;
        }
    }

    report.final.beta = beta;
    report.final.bandwidth_hz = bandwidth;
    report.final.per_client_latency_s.resize(k);
    for (std::size_t i = 0; i < k; ++i) {
        report.final.per_client_latency_s[i] = client_latency(clients[i], beta[i], bandwidth[i]);
    }
    report.final.objective_s = report.objective_trace.back();
    return report;
}

Allocation brute_force_oracle(std::span<const ClientStatic> clients, const ConstraintSet& cs,
                              std::int64_t grid_points) {
    const std::size_t k = clients.size();
    if (k > 3) throw TooManyClients("brute-force oracle limited to K <= 3");
    if (k == 0) throw EmptyClientSet("oracle over no clients");
    if (grid_points < 1) throw OutOfRange("grid must have at least one point");
    cs.validate();

    const double budget = pruning_budget(cs);
    std::vector<double> lo(k);
    for (std::size_t i = 0; i < k; ++i) {
        lo[i] = std::max(cs.beta_min, memory_lower_bound(clients[i], cs));
    }

    const auto grid_value = [&](std::int64_t idx) {
        if (grid_points == 1) return cs.beta_min;
        return cs.beta_min + static_cast<double>(idx) * (cs.beta_max - cs.beta_min) /
                                 static_cast<double>(grid_points - 1);
    };

    // Per-client latency pieces depend on one grid coordinate only, so they
    // are tabulated once; the tuple loop just gathers and water-fills.
    const auto g = static_cast<std::size_t>(grid_points);
    std::vector<std::vector<double>> comp_tab(k, std::vector<double>(g));
    std::vector<std::vector<double>> load_tab(k, std::vector<double>(g));
    std::vector<std::vector<bool>> ok_tab(k, std::vector<bool>(g));
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < g; ++j) {
            const double b = grid_value(static_cast<std::int64_t>(j));
            comp_tab[i][j] = comp_part(clients[i], b);
            load_tab[i][j] = bit_load_per_hz(clients[i], b);
            ok_tab[i][j] = b >= lo[i];  // C3
        }
    }

    std::vector<double> best_beta;
    double best_objective = std::numeric_limits<double>::infinity();
    std::vector<std::int64_t> idx(k, 0);
    std::vector<double> comp(k), load(k), beta(k);
    while (true) {
        double beta_sum = 0.0;
        bool feasible = true;
        bool any_load = false;
        double comp_max = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            const auto j = static_cast<std::size_t>(idx[i]);
            feasible = feasible && ok_tab[i][j];
            beta[i] = grid_value(idx[i]);
            beta_sum += beta[i];
            comp[i] = comp_tab[i][j];
            load[i] = load_tab[i][j];
            any_load = any_load || load[i] > 0.0;
            comp_max = std::max(comp_max, comp[i]);
        }
        if (beta_sum > budget * (1.0 + 1e-12)) feasible = false;  // C5
        if (feasible) {
            const double objective =
                any_load ? std::max(comp_max, equal_latency_target(comp, load,
                                                                   cs.total_bandwidth_hz))
                         : comp_max;
            if (objective < best_objective) {
                best_objective = objective;
                best_beta = beta;
            }
        }
        // odometer over the K-dimensional grid
        std::size_t pos = 0;
        while (pos < k && ++idx[pos] == grid_points) {
            idx[pos] = 0;
            ++pos;
        }
        if (pos == k) break;
    }
    if (!std::isfinite(best_objective)) {
        throw Infeasible("C3,C5", "no feasible grid point");
    }
    const auto bw = bandwidth_subproblem(clients, best_beta, cs.total_bandwidth_hz);
    Allocation best;
    best.beta = std::move(best_beta);
    best.bandwidth_hz = bw.bandwidth_hz;
    best.objective_s = bw.objective_s;
    best.per_client_latency_s.resize(k);
    for (std::size_t i = 0; i < k; ++i) {
        best.per_client_latency_s[i] =
            client_latency(clients[i], best.beta[i], best.bandwidth_hz[i]);
    }
    return best;
}

}  // namespace jcpba::solver
