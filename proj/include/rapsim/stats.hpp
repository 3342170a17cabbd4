// SPDX-License-Identifier: Apache-2.0
//
// Small statistics helpers shared by the simulators and the harness.

#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace rapsim {

/// Streaming mean/variance (Welford). Used for per-trial aggregation.
class RunningStat {
public:
    void push(double x) {
        ++n_;
        const double delta = x - mean_;
        mean_ += delta / static_cast<double>(n_);
        m2_ += delta * (x - mean_);
    }

    std::size_t count() const { return n_; }
    double mean() const { return mean_; }

    double variance() const {
        return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0;
    }

    /// Standard error of the mean; 0 for fewer than two samples.
    double stderr_mean() const {
        return n_ > 1 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0;
    }

private:
    std::size_t n_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
};

/// Ordinary least squares of y on x.
inline LineFit fit_line(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) {
        throw std::invalid_argument("fit_line: need at least two paired points");
    }
    const auto n = static_cast<double>(x.size());
    double sx = 0, sy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
    }
    const double mx = sx / n, my = sy / n;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx == 0.0) {
        throw std::invalid_argument("fit_line: degenerate x values");
    }
    return {sxy / sxx, my - sxy / sxx * mx};
}

/// Least squares fit of y = c * x through the origin.
inline double fit_through_origin(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.empty()) {
        throw std::invalid_argument("fit_through_origin: empty input");
    }
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += x[i] * y[i];
        sxx += x[i] * x[i];
    }
    if (sxx == 0.0) {
        throw std::invalid_argument("fit_through_origin: degenerate x values");
    }
    return sxy / sxx;
}

}  // namespace rapsim
