// SPDX-License-Identifier: Apache-2.0
//
// Centralized collision detection with on-off coded pilot sequences:
// each device keeps l of its tau pilot symbols silent at random
// positions. Overlapping transmissions fill in each other's nulls, so a
// received sequence with fewer than l silent symbols reveals a collision.

#pragma once

#include <algorithm>
#include <span>
#include <stdexcept>
#include <vector>

#include "rapsim/channel.hpp"
#include "rapsim/rng.hpp"

namespace rapsim {

struct CodedPilot {
    int length = 0;                    // tau
    std::vector<int> null_positions;   // size l, sorted
    std::vector<int> useful_positions; // complement, sorted

    int num_nulls() const { return static_cast<int>(null_positions.size()); }
};

/// l distinct null positions uniform without replacement (partial
/// Fisher-Yates over [0, tau)).
inline CodedPilot generate_coded_pilot(int tau, int l, RandomStream& rng) {
    if (tau < 2) throw std::invalid_argument("tau: must be >= 2");
    if (l <= 0 || l >= tau) throw std::invalid_argument("l: must satisfy 0 < l < tau");
    std::vector<int> positions(static_cast<std::size_t>(tau));
    for (int i = 0; i < tau; ++i) positions[static_cast<std::size_t>(i)] = i;
    for (int i = 0; i < l; ++i) {
        const auto j = static_cast<std::size_t>(
            i + static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(tau - i))));
        std::swap(positions[static_cast<std::size_t>(i)], positions[j]);
    }
    CodedPilot cp;
    cp.length = tau;
    cp.null_positions.assign(positions.begin(), positions.begin() + l);
    std::sort(cp.null_positions.begin(), cp.null_positions.end());
    cp.useful_positions.assign(positions.begin() + l, positions.end());
    std::sort(cp.useful_positions.begin(), cp.useful_positions.end());
    return cp;
}

enum class CollisionVerdict { kNoCollision, kCollision, kNoTransmission };

/// Counts positions whose energy falls below the threshold. Fewer than
/// l silent symbols means at least two overlapping patterns; more than
/// l means nobody (or a deeply faded device) transmitted.
inline CollisionVerdict detect_collision(std::span<const double> energy_per_position, int l,
                                         double energy_threshold) {
    if (!(energy_threshold > 0.0)) {
        throw std::invalid_argument("energy_threshold: must be > 0");
    }
    if (l <= 0 || l >= static_cast<int>(energy_per_position.size())) {
        throw std::invalid_argument("l: must satisfy 0 < l < tau");
    }
    int silent = 0;
    for (const double e : energy_per_position) {
        if (e < energy_threshold) ++silent;
    }
    if (silent < l) return CollisionVerdict::kCollision;
    if (silent == l) return CollisionVerdict::kNoCollision;
    return CollisionVerdict::kNoTransmission;
}

/// Per-position received energy averaged over the BS antennas. Each
/// device contributes amplitude sqrt(power) through an i.i.d. Rayleigh
/// channel on its useful positions; antenna averaging concentrates the
/// noise-only energy around noise_power, which is what a fixed-multiple
/// threshold needs.
inline std::vector<double> received_coded_energies(const std::vector<CodedPilot>& pilots,
                                                   std::span<const double> rx_powers,
                                                   int num_antennas, double noise_power,
                                                   RandomStream& rng) {
    if (pilots.size() != rx_powers.size()) {
        throw std::invalid_argument("rx_powers: one entry per transmitting device");
    }
    const int tau = pilots.empty() ? 0 : pilots.front().length;
    for (const auto& p : pilots) {
        if (p.length != tau) throw std::invalid_argument("pilots: mismatched lengths");
    }
    // Block fading: one channel vector per device, constant across the
    // sequence; noise is fresh per symbol and antenna.
    std::vector<CVec> h;
    h.reserve(pilots.size());
    for (std::size_t k = 0; k < pilots.size(); ++k) {
        h.push_back(draw_channel(rx_powers[k], num_antennas, rng));
    }
    std::vector<double> energies;
    energies.reserve(static_cast<std::size_t>(tau));
    for (int pos = 0; pos < tau; ++pos) {
        double acc = 0.0;
        for (int a = 0; a < num_antennas; ++a) {
            Cx r{0.0, 0.0};
            for (std::size_t k = 0; k < pilots.size(); ++k) {
                const auto& nulls = pilots[k].null_positions;
                if (std::binary_search(nulls.begin(), nulls.end(), pos)) continue;
                r += h[k][static_cast<std::size_t>(a)];
            }
            if (noise_power > 0.0) r += rng.cgauss(noise_power);
            acc += std::norm(r);
        }
        energies.push_back(acc / static_cast<double>(num_antennas));
    }
    return energies;
}

/// Default constant-false-alarm threshold: a fixed multiple of the
/// per-symbol noise energy.
inline double coded_pilot_threshold(double noise_power) { return 5.0 * noise_power; }

}  // namespace rapsim
