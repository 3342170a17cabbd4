// SPDX-License-Identifier: Apache-2.0
//
// Ergodic random access with pilot hopping: every active device picks a
// fresh pilot each slot, the BS applies MRC over the contaminated
// estimate, and the codeword rides over many contamination events. The
// sum-rate figure is a use-and-then-forget style lower bound averaged
// over activity/pilot/contender configurations by Monte Carlo.

#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "rapsim/rng.hpp"
#include "rapsim/stats.hpp"
#include "rapsim/system_config.hpp"

namespace rapsim {

// Substream ids reserved next to per-slot substreams.
constexpr uint32_t kSubGains = 0xFFFFFFF0u;

struct ErapidConfig {
    int num_devices = 800;    // K
    int num_antennas = 100;   // M
    int slot_length = 300;    // tau_u
    int num_pilots = 100;     // tau_p
    double activation_prob = 0.075;  // p_a
    double mean_gain = 1.0;   // beta-bar
    double gain_spread = 0.25;  // gains uniform in beta-bar * [1 -/+ spread]
    double snr_db = 10.0;     // operating SNR at beta-bar
    double ul_power = 1.0;    // p
    int mc_slots = 2000;

    double noise_power() const { return ul_power * mean_gain / db_to_linear(snr_db); }

    void validate() const {
        if (num_devices < 1) throw std::invalid_argument("num_devices: must be >= 1");
        if (num_antennas < 1) throw std::invalid_argument("num_antennas: must be >= 1");
        if (num_pilots < 1) throw std::invalid_argument("num_pilots: must be >= 1");
        if (num_pilots >= slot_length) {
            throw std::invalid_argument("num_pilots: must be < slot_length");
        }
        if (activation_prob < 0.0 || activation_prob > 1.0) {
            throw std::invalid_argument("activation_prob: must be in [0, 1]");
        }
        if (!(mean_gain > 0.0)) throw std::invalid_argument("mean_gain: must be > 0");
        if (gain_spread < 0.0 || gain_spread >= 1.0) {
            throw std::invalid_argument("gain_spread: must be in [0, 1)");
        }
        if (!(ul_power > 0.0)) throw std::invalid_argument("ul_power: must be > 0");
        if (mc_slots < 1) throw std::invalid_argument("mc_slots: must be >= 1");
    }
};

/// Device gains for one realization, uniform around the mean.
inline std::vector<double> draw_erapid_gains(const ErapidConfig& cfg,
                                             const RandomStream& stream) {
    std::vector<double> gains(static_cast<std::size_t>(cfg.num_devices));
    for (int k = 0; k < cfg.num_devices; ++k) {
        const double u = stream.uniform_at(kSubGains, static_cast<std::uint64_t>(k));
        gains[static_cast<std::size_t>(k)] =
            cfg.mean_gain * (1.0 + cfg.gain_spread * (2.0 * u - 1.0));
    }
    return gains;
}

struct ErapidSlot {
    std::vector<int> active;    // device indices
    std::vector<int> pilot_of;  // per device (selection exists whether or not used)
};

/// Activity and pilot choices for one transmission slot. Draws are
/// indexed by (slot, device), so identical (stream, slot) pairs yield
/// identical slots regardless of p_a / tau_p: this is the common-random-
/// number coupling the optimizer relies on.
inline ErapidSlot simulate_erapid_slot(const ErapidConfig& cfg, const RandomStream& stream,
                                       uint32_t slot_index) {
    ErapidSlot slot;
    slot.pilot_of.resize(static_cast<std::size_t>(cfg.num_devices));
    for (int k = 0; k < cfg.num_devices; ++k) {
        const auto [u_act, u_pilot] =
            stream.u64_pair_at(slot_index, static_cast<std::uint64_t>(k));
        const double act = static_cast<double>(u_act >> 11) * 0x1.0p-53;
        const double pil = static_cast<double>(u_pilot >> 11) * 0x1.0p-53;
        const int pilot =
            std::min(static_cast<int>(pil * cfg.num_pilots), cfg.num_pilots - 1);
        slot.pilot_of[static_cast<std::size_t>(k)] = pilot;
        if (act < cfg.activation_prob) slot.active.push_back(k);
    }
    return slot;
}

struct RateBound {
    double sum_rate = 0.0;         // bit/s/Hz
    double mean_active = 0.0;      // expected active devices per slot
    double per_active_rate = 0.0;  // bit/s/Hz
    double sum_rate_stderr = 0.0;
};

namespace detail {

/// Per-slot sum of log2(1 + SINR) over active devices, already scaled
/// by nothing: caller applies the pre-log factor. Contaminated-MRC
/// deterministic equivalent:
///   SINR_k = M p b_k^2/g_t / ( M p sum_{j in C_t, j != k} b_j^2/g_t
///            + p sum_{j active, j != k} b_j + sigma^2 ),
/// with g_t = sum_{j in C_t} b_j + sigma^2/(p tau_p).
inline double slot_rate_sum(const ErapidSlot& slot, std::span<const double> gains,
                            const ErapidConfig& cfg, std::vector<double>& sum_b,
                            std::vector<double>& sum_b2) {
    const double p = cfg.ul_power;
    const double sigma2 = cfg.noise_power();
    sum_b.assign(static_cast<std::size_t>(cfg.num_pilots), 0.0);
    sum_b2.assign(static_cast<std::size_t>(cfg.num_pilots), 0.0);
    double total_gain = 0.0;
    for (const int k : slot.active) {
        const double b = gains[static_cast<std::size_t>(k)];
        const auto t = static_cast<std::size_t>(slot.pilot_of[static_cast<std::size_t>(k)]);
        sum_b[t] += b;
        sum_b2[t] += b * b;
        total_gain += b;
    }
    const double est_noise = sigma2 / (p * static_cast<double>(cfg.num_pilots));
    double rate = 0.0;
    for (const int k : slot.active) {
        const double b = gains[static_cast<std::size_t>(k)];
        const auto t = static_cast<std::size_t>(slot.pilot_of[static_cast<std::size_t>(k)]);
        const double g = sum_b[t] + est_noise;
        const double num = cfg.num_antennas * p * b * b / g;
        const double coherent = cfg.num_antennas * p * (sum_b2[t] - b * b) / g;
        const double noncoherent = p * (total_gain - b);
        const double sinr = num / (coherent + noncoherent + sigma2);
        rate += std::log2(1.0 + sinr);
    }
    return rate;
}

}  // namespace detail

/// Monte Carlo evaluation of the sum-rate lower bound
///   R = (1 - tau_p/tau_u) * E[ sum_{k active} log2(1 + SINR_k) ].
inline RateBound ergodic_sum_rate(const ErapidConfig& cfg, const RandomStream& stream) {
    cfg.validate();
    const std::vector<double> gains = draw_erapid_gains(cfg, stream);
    const double prelog =
        1.0 - static_cast<double>(cfg.num_pilots) / static_cast<double>(cfg.slot_length);
    RunningStat slot_rates;
    RunningStat actives;
    std::vector<double> sum_b, sum_b2;
    for (int s = 0; s < cfg.mc_slots; ++s) {
        const ErapidSlot slot = simulate_erapid_slot(cfg, stream, static_cast<uint32_t>(s));
        slot_rates.push(detail::slot_rate_sum(slot, gains, cfg, sum_b, sum_b2));
        actives.push(static_cast<double>(slot.active.size()));
    }
    RateBound out;
    out.sum_rate = prelog * slot_rates.mean();
    out.sum_rate_stderr = prelog * slot_rates.stderr_mean();
    out.mean_active = actives.mean();
    out.per_active_rate = out.mean_active > 0.0 ? out.sum_rate / out.mean_active : 0.0;
    return out;
}

struct ErapidOptimum {
    double activation_prob = 0.0;
    int num_pilots = 0;
    RateBound bound;
};

inline std::vector<double> default_erapid_pa_grid() {
    return {0.020, 0.024, 0.028, 0.033, 0.039, 0.046, 0.054, 0.063, 0.074,
            0.087, 0.102, 0.120, 0.141, 0.166, 0.195, 0.229, 0.269, 0.316};
}

/// Pilot lengths as fixed fractions of the slot, deduplicated.
inline std::vector<int> default_erapid_tp_grid(int tau_u) {
    const double fractions[] = {1.0 / 15, 2.0 / 15, 0.2, 4.0 / 15, 1.0 / 3,
                                0.4,      7.0 / 15, 8.0 / 15};
    std::vector<int> grid;
    for (const double f : fractions) {
        int tp = std::max(1, static_cast<int>(std::lround(f * tau_u)));
        tp = std::min(tp, tau_u - 1);
        if (grid.empty() || grid.back() != tp) grid.push_back(tp);
    }
    return grid;
}

/// Exhaustive grid search over (p_a, tau_p) with common random numbers
/// across grid points. Ties break toward smaller tau_p, then smaller p_a.
inline ErapidOptimum optimize_erapid(const ErapidConfig& base,
                                     std::span<const double> pa_grid,
                                     std::span<const int> tp_grid,
                                     const RandomStream& stream) {
    if (pa_grid.empty() || tp_grid.empty()) {
        throw std::invalid_argument("optimize_erapid: empty grid");
    }
    ErapidOptimum best;
    bool first = true;
    for (const int tp : tp_grid) {
        for (const double pa : pa_grid) {
            ErapidConfig cfg = base;
            cfg.num_pilots = tp;
            cfg.activation_prob = pa;
            const RateBound bound = ergodic_sum_rate(cfg, stream);
            if (first || bound.sum_rate > best.bound.sum_rate) {
                best = {pa, tp, bound};
                first = false;
            }
        }
    }
    return best;
}

struct ErapidSweepPoint {
    int num_antennas = 0;
    int slot_length = 0;
    double sum_rate = 0.0;
    double mean_active = 0.0;
};

struct HeuristicModel {
    double x = 0.0;            // mean_active ~ x * sqrt(M * tau_u)
    double loglog_slope = 0.0; // slope of log R* against log(M * tau_u)

    double predicted_mean_active(int num_antennas, int slot_length) const {
        return x * std::sqrt(static_cast<double>(num_antennas) *
                             static_cast<double>(slot_length));
    }
};

/// Fits the scaling heuristic from optimized sweep results.
inline HeuristicModel fit_heuristic(std::span<const ErapidSweepPoint> points) {
    if (points.size() < 4) {
        throw std::invalid_argument("fit_heuristic: need at least 4 sweep points");
    }
    std::vector<double> log_mt, log_rate, sqrt_mt, active;
    for (const auto& pt : points) {
        const double mt = static_cast<double>(pt.num_antennas) *
                          static_cast<double>(pt.slot_length);
        if (!(pt.sum_rate > 0.0)) {
            throw std::invalid_argument("fit_heuristic: nonpositive sum rate");
        }
        log_mt.push_back(std::log(mt));
        log_rate.push_back(std::log(pt.sum_rate));
        sqrt_mt.push_back(std::sqrt(mt));
        active.push_back(pt.mean_active);
    }
    HeuristicModel model;
    model.loglog_slope = fit_line(log_mt, log_rate).slope;
    model.x = fit_through_origin(sqrt_mt, active);
    return model;
}

}  // namespace rapsim
