// SPDX-License-Identifier: Apache-2.0
//
// Four-phase random access with distributed strongest-user collision
// resolution, plus the retry-only baseline. One access occasion:
//   Phase 1: active devices send a uniformly chosen access sequence.
//   Phase 2: the BS beamforms a response over the contaminated estimate;
//            each contender infers the total gain on its sequence.
//   Phase 3: a device retransmits only if it believes it is strongest.
//   Phase 4: the BS admits the sole retransmitter of a sequence.
// The baseline skips Phases 2-3 and admits only collision-free Phase-1
// transmissions.

#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "rapsim/channel.hpp"
#include "rapsim/geometry.hpp"
#include "rapsim/rng.hpp"
#include "rapsim/stats.hpp"
#include "rapsim/system_config.hpp"

namespace rapsim {

enum class EstimatorMode { kIdeal, kNoisy };
enum class AccessMode { kSucre, kBaseline };

struct SucreConfig {
    double retry_prob = 0.5;
    int max_attempts = 10;
    double decision_bias = 0.0;  // epsilon added to the half-sum threshold
    EstimatorMode estimator_mode = EstimatorMode::kIdeal;
    double dl_power = 1.0;  // q, used by the noisy gain estimator

    void validate() const {
        if (!(retry_prob > 0.0) || retry_prob > 1.0) {
            throw std::invalid_argument("retry_prob: must be in (0, 1]");
        }
        if (max_attempts < 1) throw std::invalid_argument("max_attempts: must be >= 1");
        if (decision_bias < 0.0) throw std::invalid_argument("decision_bias: must be >= 0");
        if (!(dl_power > 0.0)) throw std::invalid_argument("dl_power: must be > 0");
    }
};

/// Retransmit iff the own gain strictly exceeds half the estimated
/// contender total (plus bias). Exact ties withdraw.
inline bool sucre_decision(double own_beta, double est_sum_gain, double bias) {
    return own_beta > est_sum_gain / 2.0 + bias;
}

/// Phase-2 downlink gain estimation as seen by one contender.
///
/// Ideal mode returns the exact contender gain total. Noisy mode models
/// the BS precoding along the normalized Phase-1 observation y_t: the
/// device averages |z|^2 over tau_p downlink symbols, where
///   z = sqrt(q) h_k^H y_t / ||y_t|| + w,   E|z|^2 = q M beta_k^2 / gamma + sigma^2,
/// and inverts the relation for gamma = sum beta + sigma^2/(p tau_p).
/// The estimate is clamped below at the device's own gain.
inline double phase2_gain_estimate(EstimatorMode mode, double own_beta, double true_sum_gain,
                                   const CVec* own_channel, const CVec* observation,
                                   const SystemConfig& cfg, const SucreConfig& scfg,
                                   RandomStream& rng) {
    if (mode == EstimatorMode::kIdeal) {
        return std::max(true_sum_gain, own_beta);
    }
    const double q = scfg.dl_power;
    const Cx g = inner_product(*own_channel, *observation);
    const double obs_norm = std::sqrt(squared_norm(*observation));
    const Cx dl_gain = obs_norm > 0.0 ? std::sqrt(q) * g / obs_norm : Cx{0.0, 0.0};
    double mean_sq = 0.0;
    for (int i = 0; i < cfg.num_pilots; ++i) {
        mean_sq += std::norm(dl_gain + rng.cgauss(cfg.noise_power));
    }
    mean_sq /= static_cast<double>(cfg.num_pilots);

    const double floor = 1e-9 * cfg.noise_power;
    const double signal = std::max(mean_sq - cfg.noise_power, floor);
    const double gamma_hat = q * cfg.num_antennas * own_beta * own_beta / signal;
    const double alpha_hat =
        gamma_hat - cfg.noise_power / (cfg.ul_power * cfg.num_pilots);
    return std::max(alpha_hat, own_beta);
}

/// One device's Phase-1 transmission within a slot.
struct Phase1Entry {
    int device = 0;
    int pilot = 0;
};

struct Phase1Result {
    std::vector<CVec> observations;  // per pilot: y_t
    std::vector<CVec> channels;      // aligned with the input entries
};

/// Draws block-fading channels for the active devices and produces the
/// per-pilot correlated observations. Channels are returned so Phases
/// 2-3 stay coherent within the slot.
inline Phase1Result phase1(const std::vector<Phase1Entry>& active, const Population& pop,
                           const SystemConfig& cfg, double noise_power, RandomStream& rng) {
    Phase1Result out;
    out.channels.reserve(active.size());
    for (const auto& e : active) {
        if (e.pilot < 0 || e.pilot >= cfg.num_pilots) {
            throw std::invalid_argument("pilot: index out of range");
        }
        out.channels.push_back(
            draw_channel(pop.devices[static_cast<std::size_t>(e.device)].beta,
                         cfg.num_antennas, rng));
    }
    out.observations.assign(static_cast<std::size_t>(cfg.num_pilots), CVec());
    std::vector<std::vector<const CVec*>> per_pilot(static_cast<std::size_t>(cfg.num_pilots));
    for (std::size_t i = 0; i < active.size(); ++i) {
        per_pilot[static_cast<std::size_t>(active[i].pilot)].push_back(&out.channels[i]);
    }
    for (int t = 0; t < cfg.num_pilots; ++t) {
        out.observations[static_cast<std::size_t>(t)] =
            correlated_observation(per_pilot[static_cast<std::size_t>(t)], cfg.ul_power,
                                   cfg.num_pilots, cfg.num_antennas, noise_power, rng);
    }
    return out;
}

/// Report for one access occasion.
struct AccessRound {
    std::vector<std::vector<int>> contenders;         // per pilot
    std::vector<double> sum_gain_true;                // per pilot
    std::vector<std::vector<double>> gain_estimates;  // aligned with contenders
    std::vector<std::vector<char>> decisions;         // aligned with contenders
    std::vector<std::vector<int>> phase3_contenders;  // per pilot
    std::vector<int> admitted;
    int num_collisions = 0;  // pilots with >= 2 contenders
    int num_resolved = 0;    // collided pilots with exactly one retransmitter

    void reset(int tau_p) {
        contenders.assign(static_cast<std::size_t>(tau_p), {});
        sum_gain_true.assign(static_cast<std::size_t>(tau_p), 0.0);
        gain_estimates.assign(static_cast<std::size_t>(tau_p), {});
        decisions.assign(static_cast<std::size_t>(tau_p), {});
        phase3_contenders.assign(static_cast<std::size_t>(tau_p), {});
        admitted.clear();
        num_collisions = 0;
        num_resolved = 0;
    }
};

struct CrowdStats {
    double mean_attempts = 0.0;       // per completed access session
    double admission_fraction = 0.0;  // admitted / completed sessions
    double resolution_fraction = 0.0; // collisions resolved to one retransmitter
    std::uint64_t num_sessions = 0;
    std::uint64_t num_collisions = 0;
};

/// Exact Binomial(n, p) sample by CDF inversion; falls back to per-trial
/// draws when the pmf start underflows.
inline int binomial_sample(int n, double p, RandomStream& rng) {
    if (n <= 0 || p <= 0.0) return 0;
    if (p >= 1.0) return n;
    const double q = 1.0 - p;
    double pmf = std::pow(q, n);
    if (pmf < 1e-290) {
        int count = 0;
        for (int i = 0; i < n; ++i) count += rng.bernoulli(p) ? 1 : 0;
        return count;
    }
    double cdf = pmf;
    const double u = rng.uniform();
    int k = 0;
    while (u > cdf && k < n) {
        ++k;
        pmf *= (static_cast<double>(n - k + 1) / k) * (p / q);
        cdf += pmf;
    }
    return k;
}

/// Slot-stepped crowd simulation. Devices cycle idle -> contending ->
/// idle; a contention session ends in admission or, after max_attempts
/// failed transmissions, denial. Backlogged devices re-enter each slot
/// with probability retry_prob.
class AccessSimulator {
public:
    struct SessionOutcome {
        int device = 0;
        int attempts = 0;
        bool admitted = false;
        std::uint64_t start_slot = 0;
    };

    AccessSimulator(Population pop, SystemConfig cfg, SucreConfig scfg, AccessMode mode)
        : pop_(std::move(pop)), cfg_(std::move(cfg)), scfg_(scfg), mode_(mode) {
        cfg_.validate();
        scfg_.validate();
        const int k = static_cast<int>(pop_.size());
        state_.assign(static_cast<std::size_t>(k), {});
        idle_.resize(static_cast<std::size_t>(k));
        idle_pos_.resize(static_cast<std::size_t>(k));
        for (int i = 0; i < k; ++i) {
            idle_[static_cast<std::size_t>(i)] = i;
            idle_pos_[static_cast<std::size_t>(i)] = i;
        }
        round_.reset(cfg_.num_pilots);
    }

    /// Advances one access occasion. `with_arrivals = false` drains the
    /// backlog without activating new devices.
    const AccessRound& step(RandomStream& rng, bool with_arrivals = true) {
        round_.reset(cfg_.num_pilots);
        participants_.clear();

        if (with_arrivals) {
            const int arrivals =
                binomial_sample(static_cast<int>(idle_.size()), pop_.activation_prob, rng);
            for (int i = 0; i < arrivals; ++i) {
                const auto pick = static_cast<std::size_t>(
                    rng.uniform_int(static_cast<std::uint64_t>(idle_.size())));
                activate(idle_[pick]);
            }
        }
        for (const int dev : backlog_) {
            if (rng.bernoulli(scfg_.retry_prob)) participants_.push_back(dev);
        }
        for (const int dev : arriving_) participants_.push_back(dev);
        arriving_.clear();

        for (const int dev : participants_) {
            const int pilot = static_cast<int>(
                rng.uniform_int(static_cast<std::uint64_t>(cfg_.num_pilots)));
            round_.contenders[static_cast<std::size_t>(pilot)].push_back(dev);
            round_.sum_gain_true[static_cast<std::size_t>(pilot)] +=
                pop_.devices[static_cast<std::size_t>(dev)].beta;
        }

        if (mode_ == AccessMode::kSucre) {
            run_sucre_phases(rng);
        } else {
            run_baseline();
        }

        settle_outcomes();
        ++slot_;
        return round_;
    }

    bool has_pending() const { return !backlog_.empty() || !arriving_.empty(); }
    std::size_t backlog_size() const { return backlog_.size(); }
    const std::vector<SessionOutcome>& completed() const { return completed_; }
    std::uint64_t current_slot() const { return slot_; }
    const Population& population() const { return pop_; }

private:
    struct DeviceState {
        int attempts = 0;
        bool contending = false;
        std::uint64_t start_slot = 0;
    };

    void activate(int dev) {
        auto& st = state_[static_cast<std::size_t>(dev)];
        st.contending = true;
        st.attempts = 0;
        st.start_slot = slot_;
        remove_from_idle(dev);
        arriving_.push_back(dev);
    }

    void remove_from_idle(int dev) {
        const int pos = idle_pos_[static_cast<std::size_t>(dev)];
        const int last = idle_.back();
        idle_[static_cast<std::size_t>(pos)] = last;
        idle_pos_[static_cast<std::size_t>(last)] = pos;
        idle_.pop_back();
        idle_pos_[static_cast<std::size_t>(dev)] = -1;
    }

    void return_to_idle(int dev) {
        idle_pos_[static_cast<std::size_t>(dev)] = static_cast<int>(idle_.size());
        idle_.push_back(dev);
        state_[static_cast<std::size_t>(dev)].contending = false;
    }

    void run_sucre_phases(RandomStream& rng) {
        const bool noisy = scfg_.estimator_mode == EstimatorMode::kNoisy;
        Phase1Result p1;
        std::vector<std::size_t> entry_of_device;
        if (noisy) {
            std::vector<Phase1Entry> entries;
            entries.reserve(participants_.size());
            for (int t = 0; t < cfg_.num_pilots; ++t) {
                for (const int dev : round_.contenders[static_cast<std::size_t>(t)]) {
                    entries.push_back({dev, t});
                }
            }
            p1 = phase1(entries, pop_, cfg_, cfg_.noise_power, rng);
            entry_of_device.assign(pop_.size(), 0);
            for (std::size_t i = 0; i < entries.size(); ++i) {
                entry_of_device[static_cast<std::size_t>(entries[i].device)] = i;
            }
        }

        for (int t = 0; t < cfg_.num_pilots; ++t) {
            const auto ti = static_cast<std::size_t>(t);
            const auto& devs = round_.contenders[ti];
            if (devs.empty()) continue;
            if (devs.size() >= 2) ++round_.num_collisions;
            for (const int dev : devs) {
                const double beta = pop_.devices[static_cast<std::size_t>(dev)].beta;
                const CVec* h = noisy ? &p1.channels[entry_of_device[static_cast<std::size_t>(dev)]]
                                      : nullptr;
                const CVec* y = noisy ? &p1.observations[ti] : nullptr;
                const double est = phase2_gain_estimate(
                    scfg_.estimator_mode, beta, round_.sum_gain_true[ti], h, y, cfg_, scfg_, rng);
                const bool retransmit = sucre_decision(beta, est, scfg_.decision_bias);
                round_.gain_estimates[ti].push_back(est);
                round_.decisions[ti].push_back(retransmit ? 1 : 0);
                if (retransmit) round_.phase3_contenders[ti].push_back(dev);
            }
            if (round_.phase3_contenders[ti].size() == 1) {
                round_.admitted.push_back(round_.phase3_contenders[ti].front());
                if (devs.size() >= 2) ++round_.num_resolved;
            }
        }
    }

    void run_baseline() {
        for (int t = 0; t < cfg_.num_pilots; ++t) {
            const auto ti = static_cast<std::size_t>(t);
            const auto& devs = round_.contenders[ti];
            if (devs.size() >= 2) ++round_.num_collisions;
            if (devs.size() == 1) {
                round_.admitted.push_back(devs.front());
                round_.phase3_contenders[ti] = devs;
            }
        }
    }

    void settle_outcomes() {
        // Generation stamps avoid O(K) clears on the per-slot hot path.
        ++stamp_gen_;
        if (admitted_stamp_.size() != pop_.size()) {
            admitted_stamp_.assign(pop_.size(), 0);
            participant_stamp_.assign(pop_.size(), 0);
        }
        for (const int dev : round_.admitted) {
            admitted_stamp_[static_cast<std::size_t>(dev)] = stamp_gen_;
        }
        for (const int dev : participants_) {
            participant_stamp_[static_cast<std::size_t>(dev)] = stamp_gen_;
        }
        backlog_next_.clear();
        for (const int dev : participants_) {
            auto& st = state_[static_cast<std::size_t>(dev)];
            ++st.attempts;
            if (admitted_stamp_[static_cast<std::size_t>(dev)] == stamp_gen_) {
                completed_.push_back({dev, st.attempts, true, st.start_slot});
                return_to_idle(dev);
            } else if (st.attempts >= scfg_.max_attempts) {
                completed_.push_back({dev, st.attempts, false, st.start_slot});
                return_to_idle(dev);
            } else {
                backlog_next_.push_back(dev);
            }
        }
        for (const int dev : backlog_) {
            if (participant_stamp_[static_cast<std::size_t>(dev)] != stamp_gen_) {
                backlog_next_.push_back(dev);
            }
        }
        backlog_.swap(backlog_next_);
    }

    Population pop_;
    SystemConfig cfg_;
    SucreConfig scfg_;
    AccessMode mode_;
    std::vector<DeviceState> state_;
    std::vector<int> idle_;
    std::vector<int> idle_pos_;
    std::vector<int> arriving_;
    std::vector<int> backlog_;
    std::vector<int> backlog_next_;
    std::vector<int> participants_;
    std::vector<std::uint64_t> admitted_stamp_;
    std::vector<std::uint64_t> participant_stamp_;
    std::uint64_t stamp_gen_ = 0;
    std::vector<SessionOutcome> completed_;
    AccessRound round_;
    std::uint64_t slot_ = 0;
};

/// Steady-state crowd statistics: `num_slots` measured access occasions
/// after `warmup_slots`, then a drain phase (no new arrivals) so every
/// session that started inside the window reaches its outcome.
inline CrowdStats run_crowd_scenario(const Population& pop, const SystemConfig& cfg,
                                     const SucreConfig& scfg, AccessMode mode,
                                     std::uint64_t num_slots, RandomStream& rng,
                                     std::uint64_t warmup_slots = 200) {
    AccessSimulator sim(pop, cfg, scfg, mode);
    std::uint64_t collisions = 0;
    std::uint64_t resolved = 0;
    std::uint64_t slot = 0;
    for (; slot < warmup_slots + num_slots; ++slot) {
        RandomStream slot_rng = rng.fork(static_cast<uint32_t>(slot));
        const AccessRound& round = sim.step(slot_rng);
        if (slot >= warmup_slots) {
            collisions += static_cast<std::uint64_t>(round.num_collisions);
            resolved += static_cast<std::uint64_t>(round.num_resolved);
        }
    }
    std::uint64_t drain = 0;
    constexpr std::uint64_t kDrainCap = 100000;
    while (sim.has_pending()) {
        if (++drain > kDrainCap) {
            throw std::logic_error("crowd scenario: backlog failed to drain");
        }
        RandomStream slot_rng = rng.fork(static_cast<uint32_t>(slot + drain));
        sim.step(slot_rng, /*with_arrivals=*/false);
    }

    CrowdStats stats;
    RunningStat attempts;
    std::uint64_t admitted = 0;
    for (const auto& s : sim.completed()) {
        if (s.start_slot < warmup_slots || s.start_slot >= warmup_slots + num_slots) continue;
        attempts.push(static_cast<double>(s.attempts));
        admitted += s.admitted ? 1 : 0;
    }
    stats.num_sessions = attempts.count();
    stats.num_collisions = collisions;
    stats.mean_attempts = attempts.mean();
    stats.admission_fraction =
        stats.num_sessions > 0 ? static_cast<double>(admitted) /
                                     static_cast<double>(stats.num_sessions)
                               : 0.0;
    stats.resolution_fraction =
        collisions > 0 ? static_cast<double>(resolved) / static_cast<double>(collisions) : 1.0;
    return stats;
}

}  // namespace rapsim
