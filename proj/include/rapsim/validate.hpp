// SPDX-License-Identifier: Apache-2.0
//
// Fast self-checks behind the `validate` CLI subcommand: library
// invariants and small closed-form oracles that must hold on any
// platform before trusting a long experiment run.

#pragma once

#include <cmath>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "rapsim/channel.hpp"
#include "rapsim/coded_pilot.hpp"
#include "rapsim/crapid.hpp"
#include "rapsim/erapid.hpp"
#include "rapsim/experiment.hpp"
#include "rapsim/geometry.hpp"
#include "rapsim/rng.hpp"
#include "rapsim/sucre.hpp"

namespace rapsim {

namespace detail {

struct Check {
    std::string name;
    std::function<void()> body;
};

inline void require(bool ok, const std::string& what) {
    if (!ok) throw ValidationFailure(what);
}

inline void require_close(double got, double want, double tol, const std::string& what) {
    if (!(std::abs(got - want) <= tol)) {
        std::ostringstream ss;
        ss << what << ": got " << got << ", want " << want << " +/- " << tol;
        throw ValidationFailure(ss.str());
    }
}

inline std::vector<Check> validation_checks() {
    std::vector<Check> checks;

    checks.push_back({"rng determinism", [] {
        RandomStream a = derive_stream(7, 1, 2, 3);
        RandomStream b = derive_stream(7, 1, 2, 3);
        for (int i = 0; i < 1000; ++i) {
            require(a.next_u64() == b.next_u64(), "identical tuples must agree");
        }
        RandomStream c = derive_stream(7, 1, 2, 4);
        bool any_diff = false;
        RandomStream a2 = derive_stream(7, 1, 2, 3);
        for (int i = 0; i < 16; ++i) any_diff |= a2.next_u64() != c.next_u64();
        require(any_diff, "distinct tuples must differ");
    }});

    checks.push_back({"pilot book orthogonality", [] {
        const PilotBook book = make_dft_pilot_book(8);
        for (int i = 0; i < 8; ++i) {
            for (int j = 0; j < 8; ++j) {
                const double mag = std::abs(inner_product(book.sequence(i), book.sequence(j)));
                if (i == j) {
                    require_close(mag, 1.0, 1e-12, "self inner product");
                } else {
                    require(mag < 1e-12, "cross inner product must vanish");
                }
            }
        }
    }});

    checks.push_back({"edge SNR normalization", [] {
        SystemConfig cfg;
        cfg.edge_snr_db = 0.0;
        cfg.validate();
        RandomStream rng = derive_stream(1, 4, 0, 0);
        const double beta = path_gain({cfg.cell_radius_m, 0.0}, cfg, rng);
        require_close(cfg.ul_power * beta / cfg.noise_power, 1.0, 1e-12,
                      "cell-edge SNR (linear)");
    }});

    checks.push_back({"hexagon sampling stays inside", [] {
        RandomStream rng = derive_stream(1, 4, 0, 1);
        for (int i = 0; i < 2000; ++i) {
            require(inside_hexagon(sample_point_in_hexagon(250.0, rng), 250.0),
                    "sample must lie inside the hexagon");
        }
    }});

    checks.push_back({"strongest-user decision", [] {
        require(sucre_decision(3.0, 4.0, 0.0), "3 > 4/2 must retransmit");
        require(!sucre_decision(1.0, 4.0, 0.0), "1 < 4/2 must stay silent");
        require(!sucre_decision(2.0, 4.0, 0.0), "exact tie must withdraw");
    }});

    checks.push_back({"coded pilot basics", [] {
        RandomStream rng = derive_stream(1, 4, 0, 2);
        const CodedPilot cp = generate_coded_pilot(10, 3, rng);
        require(cp.num_nulls() == 3, "null count");
        require(static_cast<int>(cp.useful_positions.size()) == 7, "useful count");
        // Distinct null sets overlapping in one position: collision.
        std::vector<double> energies(10, 10.0);
        energies[2] = 0.0;
        require(detect_collision(energies, 3, 1.0) == CollisionVerdict::kCollision,
                "1 silent < l means collision");
        std::vector<double> single(10, 10.0);
        single[1] = single[4] = single[7] = 0.0;
        require(detect_collision(single, 3, 1.0) == CollisionVerdict::kNoCollision,
                "l silent means no collision");
    }});

    checks.push_back({"SIC peeling toy case", [] {
        CrapidConfig cfg;
        cfg.num_devices = 2;
        cfg.num_antennas = 400;
        cfg.num_pilots = 4;
        cfg.frame_length = 2;
        cfg.code_rate = 0.5;
        cfg.gain_spread = 0.0;
        ReplicaFrame frame;
        frame.frame_length = 2;
        frame.num_pilots = 4;
        frame.num_devices = 2;
        frame.rx_snr = {10.0, 10.0};
        frame.replicas = {{0, 0, 1}, {0, 1, 1}, {1, 0, 1}};
        frame.device_replicas = {{0, 1}, {2}};
        frame.slot_replicas = {{0, 2}, {1}};
        const SicResult sic = sic_decode(frame, cfg);
        require(sic.decoded_count == 2, "cancellation must free the blocked device");
        require(sic.converged, "peeling must converge");
    }});

    checks.push_back({"scheduled upper bound", [] {
        CrapidConfig cfg;
        cfg.num_devices = 400;
        cfg.num_antennas = 400;
        cfg.num_pilots = 10;
        cfg.code_rate = 0.5;
        require_close(smm_throughput(cfg).throughput, 10.0, 1e-12,
                      "all scheduled packets decode at M=400");
    }});

    checks.push_back({"single-user rate bound closed form", [] {
        ErapidConfig cfg;
        cfg.num_devices = 1;
        cfg.num_antennas = 100;
        cfg.slot_length = 300;
        cfg.num_pilots = 10;
        cfg.activation_prob = 1.0;
        cfg.gain_spread = 0.0;
        cfg.snr_db = 10.0;
        cfg.mc_slots = 4;
        RandomStream stream = derive_stream(1, 4, 0, 3);
        const RateBound bound = ergodic_sum_rate(cfg, stream);
        const double rho = db_to_linear(cfg.snr_db);
        const double tau_p = cfg.num_pilots;
        const double sinr = cfg.num_antennas * rho * (tau_p * rho / (tau_p * rho + 1.0));
        const double want =
            (1.0 - tau_p / cfg.slot_length) * std::log2(1.0 + sinr);
        require_close(bound.sum_rate, want, 1e-9, "single-user bound");
    }});

    checks.push_back({"harness determinism across workers", [] {
        ExperimentSpec spec = default_spec(ExperimentKind::kSucreFig3);
        spec.sweep_values = {60};
        spec.num_trials = 2;
        spec.sucre.num_slots = 40;
        spec.sucre.warmup_slots = 10;
        spec.sucre.activation_prob = 0.05;
        const std::string a = to_csv(run_experiment(spec, 1));
        const std::string b = to_csv(run_experiment(spec, 2));
        require(a == b, "worker count must not change output");
    }});

    return checks;
}

}  // namespace detail

/// Runs every check, printing one line each; returns the failure count.
inline int run_validation(std::ostream& out = std::cout) {
    int failures = 0;
    for (const auto& check : detail::validation_checks()) {
        try {
            check.body();
            out << "ok   " << check.name << "\n";
        } catch (const std::exception& e) {
            ++failures;
            out << "FAIL " << check.name << ": " << e.what() << "\n";
        }
    }
    return failures;
}

}  // namespace rapsim
