// SPDX-License-Identifier: Apache-2.0
//
// Cell-level configuration: array size, pilot budget, powers and the
// pathloss normalization that pins the average SNR at the cell edge.

#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace rapsim {

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }

/// Distances below this are clamped before applying the pathloss law,
/// so path gains stay bounded near the array.
constexpr double kMinPathlossDistanceM = 10.0;

struct SystemConfig {
    int num_antennas = 100;       // M
    int num_pilots = 10;          // tau_p
    int slot_length = 300;        // tau_u, symbols per coherence slot
    double cell_radius_m = 250.0;
    double pathloss_exponent = 3.76;
    double edge_snr_db = 0.0;     // average SNR at distance = cell_radius
    double ul_power = 1.0;        // p (linear, normalized)
    double noise_power = 1.0;     // sigma^2 (linear, normalized)
    double shadowing_std_db = 0.0;  // 0 disables shadowing

    /// Pathloss coefficient C in beta = C * d^-alpha, chosen so that a
    /// shadowing-free device at the cell edge sees exactly edge_snr_db.
    double pathloss_coefficient() const {
        return db_to_linear(edge_snr_db) * (noise_power / ul_power) *
               std::pow(cell_radius_m, pathloss_exponent);
    }

    double edge_snr_linear() const { return db_to_linear(edge_snr_db); }

    void validate() const {
        if (num_antennas < 1) throw std::invalid_argument("num_antennas: must be >= 1");
        if (num_pilots < 1) throw std::invalid_argument("num_pilots: must be >= 1");
        if (slot_length < num_pilots) {
            throw std::invalid_argument("slot_length: must be >= num_pilots");
        }
        if (!(cell_radius_m > 0.0)) throw std::invalid_argument("cell_radius_m: must be > 0");
        if (!(pathloss_exponent > 0.0)) {
            throw std::invalid_argument("pathloss_exponent: must be > 0");
        }
        if (!(ul_power > 0.0)) throw std::invalid_argument("ul_power: must be > 0");
        if (!(noise_power > 0.0)) throw std::invalid_argument("noise_power: must be > 0");
        if (shadowing_std_db < 0.0) {
            throw std::invalid_argument("shadowing_std_db: must be >= 0");
        }
    }
};

}  // namespace rapsim
