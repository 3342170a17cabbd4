// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "rapsim/channel.hpp"
#include "rapsim/rng.hpp"
#include "rapsim/stats.hpp"

using namespace rapsim;

TEST_CASE("channel coefficients carry the configured variance") {
    RandomStream rng = derive_stream(1, 11, 0, 0);
    RunningStat norm1;
    for (int i = 0; i < 10000; ++i) {
        norm1.push(squared_norm(draw_channel(1.0, 100, rng)) / 100.0);
    }
    CHECK(norm1.mean() == Catch::Approx(1.0).margin(0.02));

    RunningStat norm4;
    for (int i = 0; i < 5000; ++i) {
        norm4.push(squared_norm(draw_channel(4.0, 100, rng)));
    }
    CHECK(norm4.mean() == Catch::Approx(400.0).epsilon(0.02));
}

TEST_CASE("independent channels decorrelate as the array grows") {
    RandomStream rng = derive_stream(2, 11, 0, 0);
    RunningStat cosine;
    for (int i = 0; i < 10000; ++i) {
        const CVec a = draw_channel(1.0, 400, rng);
        const CVec b = draw_channel(1.0, 400, rng);
        cosine.push(std::abs(inner_product(a, b)) /
                    std::sqrt(squared_norm(a) * squared_norm(b)));
    }
    // mean magnitude is on the order sqrt(pi)/(2 sqrt(M)) ~ 0.044
    CHECK(cosine.mean() < 0.1);
}

TEST_CASE("squared-norm concentration strengthens with antennas") {
    RandomStream rng = derive_stream(3, 11, 0, 0);
    RunningStat m100, m400;
    for (int i = 0; i < 10000; ++i) {
        m100.push(squared_norm(draw_channel(1.0, 100, rng)) / 100.0);
        m400.push(squared_norm(draw_channel(1.0, 400, rng)) / 400.0);
    }
    CHECK(m400.variance() < m100.variance());
}

TEST_CASE("pilot book is unit-norm and orthogonal") {
    for (int tau_p : {1, 2, 7, 16}) {
        const PilotBook book = make_dft_pilot_book(tau_p);
        for (int i = 0; i < tau_p; ++i) {
            CHECK(std::abs(inner_product(book.sequence(i), book.sequence(i)) - Cx{1.0, 0.0}) <
                  1e-12);
            for (int j = i + 1; j < tau_p; ++j) {
                CHECK(std::abs(inner_product(book.sequence(i), book.sequence(j))) < 1e-12);
            }
        }
    }
}

TEST_CASE("correlation with an unused pilot returns zero") {
    const PilotBook book = make_dft_pilot_book(4);
    RandomStream rng = derive_stream(4, 11, 0, 0);
    const CVec h = draw_channel(2.0, 16, rng);
    const CMat rx = received_pilot_matrix({{1, &h, 1.0}}, book, 16, 0.0, rng);
    const CVec hit = pilot_correlate(rx, 1, book);
    const CVec miss = pilot_correlate(rx, 2, book);
    // leakage energy at most 1e-10 of the in-pilot correlation
    CHECK(squared_norm(miss) <= 1e-10 * squared_norm(hit));
}

TEST_CASE("two devices on one pilot superpose exactly") {
    const PilotBook book = make_dft_pilot_book(5);
    RandomStream rng = derive_stream(5, 11, 0, 0);
    const CVec ha = draw_channel(1.0, 8, rng);
    const CVec hb = draw_channel(3.0, 8, rng);
    const double p = 0.7;
    const CMat rx = received_pilot_matrix({{2, &ha, p}, {2, &hb, p}}, book, 8, 0.0, rng);
    const CVec y = pilot_correlate(rx, 2, book);
    const double amp = std::sqrt(p * 5.0);
    for (std::size_t i = 0; i < y.size(); ++i) {
        CHECK(std::abs(y[i] - amp * (ha[i] + hb[i])) < 1e-9);
    }
}

TEST_CASE("correlated observation has the predicted energy") {
    const int tau_p = 5, m = 50;
    const double p = 2.0, beta = 1.5, sigma2 = 0.8;
    const PilotBook book = make_dft_pilot_book(tau_p);
    RandomStream rng = derive_stream(6, 11, 0, 0);
    RunningStat energy;
    for (int i = 0; i < 10000; ++i) {
        const CVec h = draw_channel(beta, m, rng);
        const CMat rx = received_pilot_matrix({{0, &h, p}}, book, m, sigma2, rng);
        energy.push(squared_norm(pilot_correlate(rx, 0, book)));
    }
    const double expected = p * tau_p * m * beta + m * sigma2;
    CHECK(energy.mean() == Catch::Approx(expected).epsilon(0.02));
}

TEST_CASE("dimension mismatches are rejected") {
    const PilotBook book = make_dft_pilot_book(4);
    CMat bad(3, CVec(8));
    CHECK_THROWS_AS(pilot_correlate(bad, 0, book), std::invalid_argument);
    CMat ok(4, CVec(8));
    CHECK_THROWS_AS(pilot_correlate(ok, 7, book), std::invalid_argument);
    RandomStream rng = derive_stream(7, 11, 0, 0);
    CHECK_THROWS_AS(draw_channel(0.0, 4, rng), std::invalid_argument);
}
