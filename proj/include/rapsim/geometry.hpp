// SPDX-License-Identifier: Apache-2.0
//
// Hexagonal cell geometry and device population sampling. The cell is a
// flat-top hexagon of circumradius cell_radius_m centered on the base
// station; orientation is fixed for reproducibility.

#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "rapsim/rng.hpp"
#include "rapsim/system_config.hpp"

namespace rapsim {

struct Point2D {
    double x = 0.0;
    double y = 0.0;

    double norm() const { return std::hypot(x, y); }
};

/// Point-in-hexagon test for a flat-top hexagon with circumradius r
/// centered at the origin (vertices on the x axis).
inline bool inside_hexagon(Point2D p, double r) {
    const double hx = std::abs(p.x);
    const double hy = std::abs(p.y);
    const double s3 = std::sqrt(3.0);
    return hy <= s3 / 2.0 * r + 1e-12 && s3 * hx + hy <= s3 * r + 1e-12;
}

/// Uniform point in the hexagon by rejection from the bounding box
/// (acceptance ratio 3/4).
inline Point2D sample_point_in_hexagon(double r, RandomStream& rng) {
    for (;;) {
        const Point2D p{(2.0 * rng.uniform() - 1.0) * r,
                        (2.0 * rng.uniform() - 1.0) * std::sqrt(3.0) / 2.0 * r};
        if (inside_hexagon(p, r)) return p;
    }
}

/// Large-scale gain beta = C * d^-alpha with optional lognormal
/// shadowing. Distances below kMinPathlossDistanceM are clamped.
inline double path_gain(Point2D position, const SystemConfig& cfg, RandomStream& rng) {
    const double d = std::max(position.norm(), kMinPathlossDistanceM);
    double beta = cfg.pathloss_coefficient() * std::pow(d, -cfg.pathloss_exponent);
    if (cfg.shadowing_std_db > 0.0) {
        beta *= db_to_linear(cfg.shadowing_std_db * rng.normal());
    }
    return beta;
}

struct Device {
    Point2D position;
    double beta = 0.0;  // large-scale gain, linear
};

struct Population {
    std::vector<Device> devices;
    double activation_prob = 0.0;  // p_a

    std::size_t size() const { return devices.size(); }
};

/// K devices uniform over the hexagonal cell, gains from the pathloss law.
inline Population sample_population(const SystemConfig& cfg, int num_devices,
                                    double activation_prob, RandomStream& rng) {
    if (num_devices < 1) throw std::invalid_argument("num_devices: must be >= 1");
    if (activation_prob < 0.0 || activation_prob > 1.0) {
        throw std::invalid_argument("activation_prob: must be in [0, 1]");
    }
    Population pop;
    pop.activation_prob = activation_prob;
    pop.devices.reserve(static_cast<std::size_t>(num_devices));
    for (int k = 0; k < num_devices; ++k) {
        const Point2D pos = sample_point_in_hexagon(cfg.cell_radius_m, rng);
        pop.devices.push_back({pos, path_gain(pos, cfg, rng)});
    }
    return pop;
}

}  // namespace rapsim
