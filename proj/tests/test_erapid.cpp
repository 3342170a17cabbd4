// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include "rapsim/erapid.hpp"
#include "rapsim/rng.hpp"
#include "rapsim/stats.hpp"

using namespace rapsim;

namespace {

ErapidConfig base_config() {
    ErapidConfig cfg;
    cfg.num_devices = 800;
    cfg.num_antennas = 100;
    cfg.slot_length = 300;
    cfg.num_pilots = 100;
    cfg.activation_prob = 0.075;
    cfg.mc_slots = 500;
    return cfg;
}

}  // namespace

TEST_CASE("slot simulation respects the activation probability") {
    const RandomStream stream = derive_stream(1, 14, 0, 0);

    SECTION("nobody is active at p_a = 0") {
        ErapidConfig cfg = base_config();
        cfg.activation_prob = 0.0;
        for (uint32_t s = 0; s < 50; ++s) {
            CHECK(simulate_erapid_slot(cfg, stream, s).active.empty());
        }
    }

    SECTION("two always-active devices share a pilot half the time") {
        ErapidConfig cfg = base_config();
        cfg.num_devices = 2;
        cfg.num_pilots = 2;
        cfg.activation_prob = 1.0;
        int same = 0;
        const int n = 10000;
        for (uint32_t s = 0; s < static_cast<uint32_t>(n); ++s) {
            const ErapidSlot slot = simulate_erapid_slot(cfg, stream, s);
            REQUIRE(slot.active.size() == 2);
            if (slot.pilot_of[0] == slot.pilot_of[1]) ++same;
        }
        const double sigma = std::sqrt(0.25 / n);
        CHECK(std::abs(same / static_cast<double>(n) - 0.5) <= 3.0 * sigma);
    }

    SECTION("mean activity matches the binomial mean") {
        ErapidConfig cfg = base_config();
        RunningStat active;
        for (uint32_t s = 0; s < 10000; ++s) {
            active.push(static_cast<double>(simulate_erapid_slot(cfg, stream, s).active.size()));
        }
        CHECK(active.mean() == Catch::Approx(60.0).margin(2.0));
    }
}

TEST_CASE("single-user rate bound matches the closed form exactly") {
    ErapidConfig cfg;
    cfg.num_devices = 1;
    cfg.num_antennas = 100;
    cfg.slot_length = 300;
    cfg.num_pilots = 10;
    cfg.activation_prob = 1.0;
    cfg.gain_spread = 0.0;
    cfg.snr_db = 10.0;
    cfg.mc_slots = 8;
    const RandomStream stream = derive_stream(2, 14, 0, 0);
    const RateBound bound = ergodic_sum_rate(cfg, stream);
    const double rho = db_to_linear(cfg.snr_db);
    const double tau_p = cfg.num_pilots;
    const double closed_form = (1.0 - tau_p / cfg.slot_length) *
                               std::log2(1.0 + cfg.num_antennas * rho *
                                                   (tau_p * rho / (tau_p * rho + 1.0)));
    CHECK(bound.sum_rate == Catch::Approx(closed_form).epsilon(1e-12));
    CHECK(bound.mean_active == Catch::Approx(1.0));
}

TEST_CASE("rate vanishes without activity") {
    ErapidConfig cfg = base_config();
    cfg.activation_prob = 0.0;
    const RateBound bound = ergodic_sum_rate(cfg, derive_stream(3, 14, 0, 0));
    CHECK(bound.sum_rate == 0.0);
    CHECK(bound.mean_active == 0.0);
    CHECK(bound.per_active_rate == 0.0);
}

TEST_CASE("rate bound invariants hold on a loaded system") {
    ErapidConfig cfg = base_config();
    const RateBound bound = ergodic_sum_rate(cfg, derive_stream(4, 14, 0, 0));
    CHECK(bound.sum_rate > 0.0);
    CHECK(bound.sum_rate ==
          Catch::Approx(bound.per_active_rate * bound.mean_active).epsilon(1e-12));
}

TEST_CASE("pre-log factor scales the bound exactly") {
    // same pilots and identical slot draws; only the slot length moves
    ErapidConfig long_slot = base_config();
    ErapidConfig short_slot = base_config();
    short_slot.slot_length = 150;
    const RandomStream stream = derive_stream(5, 14, 0, 0);
    const RateBound a = ergodic_sum_rate(long_slot, stream);
    const RateBound b = ergodic_sum_rate(short_slot, stream);
    const double prelog_a = 1.0 - 100.0 / 300.0;
    const double prelog_b = 1.0 - 100.0 / 150.0;
    CHECK(b.sum_rate / a.sum_rate == Catch::Approx(prelog_b / prelog_a).epsilon(1e-12));
}

TEST_CASE("more antennas never hurt under common random numbers") {
    ErapidConfig small = base_config();
    ErapidConfig big = base_config();
    big.num_antennas = 200;
    const RandomStream stream = derive_stream(6, 14, 0, 0);
    CHECK(ergodic_sum_rate(big, stream).sum_rate >=
          ergodic_sum_rate(small, stream).sum_rate);
}

TEST_CASE("pilot-hopping series identify devices uniquely") {
    ErapidConfig cfg = base_config();
    cfg.num_devices = 50;
    cfg.num_pilots = 4;
    const RandomStream stream = derive_stream(7, 14, 0, 0);
    std::vector<std::vector<int>> series(50);
    for (uint32_t s = 0; s < 40; ++s) {
        const ErapidSlot slot = simulate_erapid_slot(cfg, stream, s);
        for (int k = 0; k < 50; ++k) {
            series[static_cast<std::size_t>(k)].push_back(
                slot.pilot_of[static_cast<std::size_t>(k)]);
        }
    }
    std::sort(series.begin(), series.end());
    CHECK(std::adjacent_find(series.begin(), series.end()) == series.end());
}

TEST_CASE("grid search breaks ties toward small tau_p and p_a") {
    ErapidConfig cfg = base_config();
    cfg.activation_prob = 0.0;  // every grid point scores zero
    const std::vector<double> pa = {0.0, 0.0};
    const std::vector<int> tp = {10, 20};
    const ErapidOptimum opt = optimize_erapid(cfg, pa, tp, derive_stream(8, 14, 0, 0));
    CHECK(opt.num_pilots == 10);
    CHECK(opt.activation_prob == 0.0);
    CHECK_THROWS_AS(optimize_erapid(cfg, {}, tp, derive_stream(8, 14, 0, 0)),
                    std::invalid_argument);
}

TEST_CASE("heuristic fit recovers synthetic scaling laws") {
    std::vector<ErapidSweepPoint> pts;
    for (const int m : {50, 100, 200, 400}) {
        for (const int tu : {100, 300}) {
            const double mt = static_cast<double>(m) * tu;
            pts.push_back({m, tu, 3.0 * std::sqrt(mt), 0.4 * std::sqrt(mt)});
        }
    }
    const HeuristicModel model = fit_heuristic(pts);
    CHECK(model.loglog_slope == Catch::Approx(0.5).epsilon(1e-9));
    CHECK(model.x == Catch::Approx(0.4).epsilon(1e-9));
    // doubling both M and tau_u doubles the predicted active count
    CHECK(model.predicted_mean_active(200, 600) ==
          Catch::Approx(2.0 * model.predicted_mean_active(100, 300)).epsilon(1e-9));

    pts.resize(3);
    CHECK_THROWS_AS(fit_heuristic(pts), std::invalid_argument);
}

TEST_CASE("wider gain spread favors more simultaneous devices") {
    const auto pa_grid = default_erapid_pa_grid();
    const auto tp_grid = default_erapid_tp_grid(300);
    double active_by_spread[2];
    int i = 0;
    for (const double spread : {0.25, 0.75}) {
        ErapidConfig cfg = base_config();
        cfg.gain_spread = spread;
        cfg.mc_slots = 800;
        const ErapidOptimum opt =
            optimize_erapid(cfg, pa_grid, tp_grid, derive_stream(9, 14, 0, 0));
        active_by_spread[i++] = opt.bound.mean_active;
    }
    CHECK(active_by_spread[1] > active_by_spread[0]);
}

TEST_CASE("config invariants are validated") {
    ErapidConfig cfg = base_config();
    cfg.num_pilots = cfg.slot_length;  // pilots must leave room for data
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = base_config();
    cfg.gain_spread = 1.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}
