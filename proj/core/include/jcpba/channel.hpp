#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "jcpba/errors.hpp"

namespace jcpba::channel {

struct LinkBudget {
    double server_power_w = 10.0;
    double client_power_w = 0.2;
    double noise_power_w = 1e-13;
    double path_loss_db = 60.0;

    void validate() const;
};

// Dimensionless power gains, one per client per direction, drawn once per
// round and held fixed while that round's allocation and transfers run.
struct ChannelState {
    std::vector<double> downlink_gain;
    std::vector<double> uplink_gain;
    std::int64_t round_index = 0;
};

// Rayleigh fading: amplitude Rayleigh means power gain is Exp(1), scaled by
// the path-loss attenuation 10^(-path_loss_db/10).
ChannelState sample_channel(std::int64_t n_clients, const LinkBudget& budget,
                            std::mt19937_64& rng, std::int64_t round_index = 0);

struct Rates {
    double downlink_bps = 0.0;
    double uplink_bps = 0.0;
};

Rates rates(const ChannelState& state, const LinkBudget& budget, double bandwidth_hz,
            std::size_t client);

// Bandwidth-independent factors of the Shannon rates, bits/s/Hz.
struct SpectralEfficiency {
    double down = 0.0;
    double up = 0.0;
};

SpectralEfficiency spectral_efficiency(const ChannelState& state, const LinkBudget& budget,
                                       std::size_t client);

}  // namespace jcpba::channel
