#include "jcpba/channel.hpp"

#include <cmath>

namespace jcpba::channel {

void LinkBudget::validate() const {
    if (server_power_w <= 0.0 || client_power_w <= 0.0 || noise_power_w <= 0.0) {
        throw OutOfRange("link budget powers must be > 0");
    }
    if (path_loss_db < 0.0) throw OutOfRange("path_loss_db must be >= 0");
}

ChannelState sample_channel(std::int64_t n_clients, const LinkBudget& budget,
                            std::mt19937_64& rng, std::int64_t round_index) {
    if (n_clients < 1) throw OutOfRange("need at least one client");
    budget.validate();
    const double attenuation = std::pow(10.0, -budget.path_loss_db / 10.0);
    std::exponential_distribution<double> exp1(1.0);
    ChannelState state;
    state.round_index = round_index;
    state.downlink_gain.resize(static_cast<std::size_t>(n_clients));
    state.uplink_gain.resize(static_cast<std::size_t>(n_clients));
    for (std::size_t k = 0; k < state.downlink_gain.size(); ++k) {
        state.downlink_gain[k] = attenuation * exp1(rng);
        state.uplink_gain[k] = attenuation * exp1(rng);
    }
    return state;
}

SpectralEfficiency spectral_efficiency(const ChannelState& state, const LinkBudget& budget,
                                       std::size_t client) {
    SpectralEfficiency eff;
    eff.down = std::log2(1.0 + budget.server_power_w * state.downlink_gain.at(client) /
                                   budget.noise_power_w);
    eff.up = std::log2(1.0 + budget.client_power_w * state.uplink_gain.at(client) /
                                 budget.noise_power_w);
    return eff;
}

Rates rates(const ChannelState& state, const LinkBudget& budget, double bandwidth_hz,
            std::size_t client) {
    if (bandwidth_hz < 0.0) throw OutOfRange("bandwidth must be >= 0");
    const auto eff = spectral_efficiency(state, budget, client);
    return Rates{bandwidth_hz * eff.down, bandwidth_hz * eff.up};
}

}  // namespace jcpba::channel
