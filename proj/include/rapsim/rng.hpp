// SPDX-License-Identifier: Apache-2.0
//
// Counter-based random number generation for reproducible parallel
// Monte Carlo. The kernel is Philox4x32-10 (Salmon et al., "Parallel
// random numbers: as easy as 1, 2, 3", SC'11): a bijective block
// function from a 128-bit counter and 64-bit key to 128 output bits.
// Streams are identified by counter prefix, so distinct (experiment,
// sweep, trial, substream) tuples can never collide.

#pragma once

#include <array>
#include <cassert>
#include <cmath>
#include <complex>
#include <cstdint>
#include <utility>

namespace rapsim {

namespace philox {

constexpr uint32_t kMul0 = 0xD2511F53u;
constexpr uint32_t kMul1 = 0xCD9E8D57u;
constexpr uint32_t kWeyl0 = 0x9E3779B9u;
constexpr uint32_t kWeyl1 = 0xBB67AE85u;

using Counter = std::array<uint32_t, 4>;
using Key = std::array<uint32_t, 2>;

inline void round_once(Counter& c, const Key& k) {
    const uint64_t p0 = static_cast<uint64_t>(kMul0) * c[0];
    const uint64_t p1 = static_cast<uint64_t>(kMul1) * c[2];
    const uint32_t hi0 = static_cast<uint32_t>(p0 >> 32);
    const uint32_t lo0 = static_cast<uint32_t>(p0);
    const uint32_t hi1 = static_cast<uint32_t>(p1 >> 32);
    const uint32_t lo1 = static_cast<uint32_t>(p1);
    c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
}

/// Philox4x32 with 10 rounds.
inline Counter block(Counter c, Key k) {
    for (int r = 0; r < 9; ++r) {
        round_once(c, k);
        k[0] += kWeyl0;
        k[1] += kWeyl1;
    }
    round_once(c, k);
    return c;
}

}  // namespace philox

/// A deterministic random stream addressed by (key, context, substream).
///
/// The 128-bit Philox counter is laid out as
///   c0 = running block index, c1 = substream id,
///   c2 = context low word,    c3 = context high word,
/// and the key carries the 64-bit master seed. Sequential draws advance
/// c0; `at`-style accessors evaluate the block function at an explicit
/// index without touching stream state, which is what the common-random-
/// number couplings in the optimizers rely on.
class RandomStream {
public:
    RandomStream(uint64_t key, uint32_t ctx_hi, uint32_t ctx_lo, uint32_t sub = 0)
        : key_{static_cast<uint32_t>(key), static_cast<uint32_t>(key >> 32)},
          ctx_hi_(ctx_hi),
          ctx_lo_(ctx_lo),
          sub_(sub) {}

    /// Independent stream for substream id `sub`, starting at block 0.
    RandomStream fork(uint32_t sub) const {
        uint64_t key = static_cast<uint64_t>(key_[1]) << 32 | key_[0];
        return RandomStream(key, ctx_hi_, ctx_lo_, sub);
    }

    uint32_t next_u32() {
        if (word_ == 4) refill();
        return buf_[word_++];
    }

    uint64_t next_u64() {
        const uint64_t lo = next_u32();
        const uint64_t hi = next_u32();
        return hi << 32 | lo;
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n), unbiased via rejection.
    uint64_t uniform_int(uint64_t n) {
        assert(n > 0);
        const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        uint64_t r;
        do {
            r = next_u64();
        } while (r >= limit);
        return r % n;
    }

    bool bernoulli(double p) { return uniform() < p; }

    /// Standard normal via Box-Muller; the paired value is cached.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * M_PI * u2;
        spare_ = radius * std::sin(angle);
        have_spare_ = true;
        return radius * std::cos(angle);
    }

    /// Circularly-symmetric complex Gaussian with E[|z|^2] = variance.
    std::complex<double> cgauss(double variance) {
        const double s = std::sqrt(variance / 2.0);
        const double re = normal();
        const double im = normal();
        return {s * re, s * im};
    }

    /// Stateless draw: the `index`-th u64 of substream `sub` of this
    /// stream's context. Does not interact with sequential position.
    uint64_t u64_at(uint32_t sub, uint64_t index) const {
        const philox::Counter c =
            philox::block({static_cast<uint32_t>(index >> 1), sub, ctx_lo_, ctx_hi_}, key_);
        const int base = 2 * static_cast<int>(index & 1);
        return static_cast<uint64_t>(c[base + 1]) << 32 | c[base];
    }

    /// Both u64 halves of one block: cheaper when a site needs two
    /// draws per index. Block indices and u64_at indices are related by
    /// u64_pair_at(sub, i) == (u64_at(sub, 2i), u64_at(sub, 2i+1)).
    std::pair<uint64_t, uint64_t> u64_pair_at(uint32_t sub, uint64_t block_index) const {
        const philox::Counter c = philox::block(
            {static_cast<uint32_t>(block_index), sub, ctx_lo_, ctx_hi_}, key_);
        return {static_cast<uint64_t>(c[1]) << 32 | c[0],
                static_cast<uint64_t>(c[3]) << 32 | c[2]};
    }

    double uniform_at(uint32_t sub, uint64_t index) const {
        return static_cast<double>(u64_at(sub, index) >> 11) * 0x1.0p-53;
    }

private:
    void refill() {
        assert(block_ <= UINT32_MAX && "substream exhausted");
        buf_ = philox::block({static_cast<uint32_t>(block_), sub_, ctx_lo_, ctx_hi_}, key_);
        ++block_;
        word_ = 0;
    }

    philox::Key key_;
    uint32_t ctx_hi_;
    uint32_t ctx_lo_;
    uint32_t sub_;
    uint64_t block_ = 0;
    int word_ = 4;
    philox::Counter buf_{};
    bool have_spare_ = false;
    double spare_ = 0.0;
};

/// Derives the stream for one Monte Carlo unit of work. Distinct index
/// tuples map to distinct counter prefixes, hence independent streams.
inline RandomStream derive_stream(uint64_t master_seed, uint32_t experiment_id,
                                  uint32_t sweep_index, uint32_t trial_index) {
    assert(experiment_id < (1u << 16));
    assert(sweep_index < (1u << 16));
    return RandomStream(master_seed, experiment_id << 16 | sweep_index, trial_index);
}

}  // namespace rapsim
