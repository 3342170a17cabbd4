// SPDX-License-Identifier: Apache-2.0
//
// Small-scale fading, orthogonal pilot books and received-signal
// correlation. Block fading: every draw is an independent realization
// for one coherence slot.

#pragma once

#include <complex>
#include <stdexcept>
#include <vector>

#include "rapsim/rng.hpp"

namespace rapsim {

using Cx = std::complex<double>;
using CVec = std::vector<Cx>;
using CMat = std::vector<CVec>;  // row-major: rows x columns

/// i.i.d. CN(0, beta) coefficients across the M antennas.
inline CVec draw_channel(double beta, int num_antennas, RandomStream& rng) {
    if (!(beta > 0.0)) throw std::invalid_argument("beta: must be > 0");
    CVec h(static_cast<std::size_t>(num_antennas));
    for (auto& c : h) c = rng.cgauss(beta);
    return h;
}

inline double squared_norm(const CVec& v) {
    double s = 0.0;
    for (const auto& c : v) s += std::norm(c);
    return s;
}

inline Cx inner_product(const CVec& a, const CVec& b) {
    Cx s{0.0, 0.0};
    for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
    return s;
}

/// tau_p mutually orthogonal unit-norm sequences of length tau_p,
/// realized as the columns of a unitary DFT matrix.
struct PilotBook {
    int tau_p = 0;
    CMat sequences;  // sequences[t][i], unit norm columns

    const CVec& sequence(int t) const { return sequences[static_cast<std::size_t>(t)]; }
};

inline PilotBook make_dft_pilot_book(int tau_p) {
    if (tau_p < 1) throw std::invalid_argument("tau_p: must be >= 1");
    PilotBook book;
    book.tau_p = tau_p;
    book.sequences.assign(static_cast<std::size_t>(tau_p),
                          CVec(static_cast<std::size_t>(tau_p)));
    const double scale = 1.0 / std::sqrt(static_cast<double>(tau_p));
    for (int t = 0; t < tau_p; ++t) {
        for (int i = 0; i < tau_p; ++i) {
            const double phase = -2.0 * M_PI * t * i / tau_p;
            book.sequences[static_cast<std::size_t>(t)][static_cast<std::size_t>(i)] =
                scale * Cx{std::cos(phase), std::sin(phase)};
        }
    }
    return book;
}

struct PilotTransmission {
    int pilot = 0;       // index into the book
    const CVec* channel = nullptr;
    double power = 1.0;  // per-symbol transmit power p
};

/// Superposed pilot-phase receive matrix (tau_p x M): each device
/// contributes sqrt(p * tau_p) * s_t h^T spread over the sequence, plus
/// i.i.d. CN(0, noise_power) noise per received symbol.
inline CMat received_pilot_matrix(const std::vector<PilotTransmission>& tx,
                                  const PilotBook& book, int num_antennas,
                                  double noise_power, RandomStream& rng) {
    const auto tau_p = static_cast<std::size_t>(book.tau_p);
    const auto m = static_cast<std::size_t>(num_antennas);
    CMat rx(tau_p, CVec(m, Cx{0.0, 0.0}));
    for (const auto& t : tx) {
        if (t.pilot < 0 || t.pilot >= book.tau_p) {
            throw std::invalid_argument("pilot: index out of range");
        }
        const CVec& s = book.sequence(t.pilot);
        const double amp = std::sqrt(t.power * static_cast<double>(book.tau_p));
        for (std::size_t i = 0; i < tau_p; ++i) {
            const Cx c = amp * s[i];
            for (std::size_t a = 0; a < m; ++a) {
                rx[i][a] += c * (*t.channel)[a];
            }
        }
    }
    if (noise_power > 0.0) {
        for (std::size_t i = 0; i < tau_p; ++i) {
            for (std::size_t a = 0; a < m; ++a) {
                rx[i][a] += rng.cgauss(noise_power);
            }
        }
    }
    return rx;
}

/// Correlates the receive matrix with the unit-norm pilot t:
///   y_t = s_t^H Y = sqrt(p tau_p) sum_{k on t} h_k + n_t,
/// with n_t i.i.d. CN(0, noise_power). Orthogonality removes all other
/// pilots exactly.
inline CVec pilot_correlate(const CMat& rx, int pilot_index, const PilotBook& book) {
    if (pilot_index < 0 || pilot_index >= book.tau_p) {
        throw std::invalid_argument("pilot_index: out of range");
    }
    if (rx.size() != static_cast<std::size_t>(book.tau_p)) {
        throw std::invalid_argument("rx: row count must equal tau_p");
    }
    const std::size_t m = rx.empty() ? 0 : rx[0].size();
    const CVec& s = book.sequence(pilot_index);
    CVec y(m, Cx{0.0, 0.0});
    for (std::size_t i = 0; i < rx.size(); ++i) {
        if (rx[i].size() != m) throw std::invalid_argument("rx: ragged matrix");
        const Cx c = std::conj(s[i]);
        for (std::size_t a = 0; a < m; ++a) {
            y[a] += c * rx[i][a];
        }
    }
    return y;
}

/// Shortcut for the post-correlation observation on one pilot:
/// sqrt(p tau_p) * sum of the given channels + CN(0, noise_power) noise.
/// Statistically identical to received_pilot_matrix + pilot_correlate.
inline CVec correlated_observation(const std::vector<const CVec*>& channels, double power,
                                   int tau_p, int num_antennas, double noise_power,
                                   RandomStream& rng) {
    CVec y(static_cast<std::size_t>(num_antennas), Cx{0.0, 0.0});
    const double amp = std::sqrt(power * static_cast<double>(tau_p));
    for (const CVec* h : channels) {
        for (std::size_t a = 0; a < y.size(); ++a) y[a] += amp * (*h)[a];
    }
    if (noise_power > 0.0) {
        for (auto& c : y) c += rng.cgauss(noise_power);
    }
    return y;
}

}  // namespace rapsim
