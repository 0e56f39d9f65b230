#pragma once

#include <cstdint>
#include <span>

#include "jcpba/errors.hpp"

namespace jcpba::latency {

struct ComputeProfile {
    double flops_per_second = 1e12;   // f_k
    std::int64_t local_iterations = 20;  // M
    std::int64_t batch_size = 4;      // N

    void validate() const;
};

struct LatencyBreakdown {
    double comp_s = 0.0;
    double comm_down_s = 0.0;
    double comm_up_s = 0.0;
    double total_s = 0.0;
};

// T^comp = M (a + e0 (1 - beta)) / f_k
double comp_latency(double adapter_flops, double emulator_flops_unpruned, double beta,
                    const ComputeProfile& prof);

struct CommLatency {
    double down_s = 0.0;
    double up_s = 0.0;
};

// down = (|w^A| + (1-beta) |w^E|) / R_down, up = |delta w^A| / R_up
CommLatency comm_latency(double adapter_bits, double emulator_bits, double update_bits,
                         double beta, double rate_down_bps, double rate_up_bps);

LatencyBreakdown client_latency(double adapter_flops, double emulator_flops_unpruned,
                                double beta, const ComputeProfile& prof, double adapter_bits,
                                double emulator_bits, double update_bits, double rate_down_bps,
                                double rate_up_bps);

// Round latency is the straggler's total.
double round_latency(std::span<const LatencyBreakdown> breakdowns);

}  // namespace jcpba::latency
