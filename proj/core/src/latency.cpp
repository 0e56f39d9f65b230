#include "jcpba/latency.hpp"

#include <algorithm>

namespace jcpba::latency {

void ComputeProfile::validate() const {
    if (flops_per_second <= 0.0) throw OutOfRange("f_k must be > 0");
    if (local_iterations < 1) throw OutOfRange("local iterations must be >= 1");
    if (batch_size < 1) throw OutOfRange("batch size must be >= 1");
}

double comp_latency(double adapter_flops, double emulator_flops_unpruned, double beta,
                    const ComputeProfile& prof) {
    if (beta < 0.0 || beta > 1.0) throw OutOfRange("pruning rate must be in [0,1]");
    prof.validate();
    const double per_iteration = adapter_flops + emulator_flops_unpruned * (1.0 - beta);
    return static_cast<double>(prof.local_iterations) * per_iteration / prof.flops_per_second;
}

CommLatency comm_latency(double adapter_bits, double emulator_bits, double update_bits,
                         double beta, double rate_down_bps, double rate_up_bps) {
    if (beta < 0.0 || beta > 1.0) throw OutOfRange("pruning rate must be in [0,1]");
    if (rate_down_bps <= 0.0 || rate_up_bps <= 0.0) {
        throw ZeroRate("client unreachable: zero transmission rate");
    }
    CommLatency comm;
    comm.down_s = (adapter_bits + (1.0 - beta) * emulator_bits) / rate_down_bps;
    comm.up_s = update_bits / rate_up_bps;
    return comm;
}

LatencyBreakdown client_latency(double adapter_flops, double emulator_flops_unpruned,
                                double beta, const ComputeProfile& prof, double adapter_bits,
                                double emulator_bits, double update_bits, double rate_down_bps,
                                double rate_up_bps) {
    LatencyBreakdown b;
    b.comp_s = comp_latency(adapter_flops, emulator_flops_unpruned, beta, prof);
    const auto comm = comm_latency(adapter_bits, emulator_bits, update_bits, beta,
                                   rate_down_bps, rate_up_bps);
    b.comm_down_s = comm.down_s;
    b.comm_up_s = comm.up_s;
    b.total_s = b.comp_s + b.comm_down_s + b.comm_up_s;
    return b;
}

double round_latency(std::span<const LatencyBreakdown> breakdowns) {
    if (breakdowns.empty()) throw EmptyClientSet("round latency of an empty client set");
    double worst = 0.0;
    for (const auto& b : breakdowns) worst = std::max(worst, b.total_s);
    return worst;
}

}  // namespace jcpba::latency
