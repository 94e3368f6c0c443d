#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "swarmbeam/common.hpp"
#include "swarmbeam/geometry.hpp"

namespace swarmbeam {

/// Complex element weights. The array response divides by the total weight
/// magnitude, so |response| <= 1 with equality only under coherent addition.
struct WeightVector {
    std::vector<std::complex<double>> weights;

    std::size_t size() const { return weights.size(); }
};

inline void validate(const WeightVector& w, std::size_t expected_elements) {
    if (w.weights.size() != expected_elements)
        throw std::invalid_argument("weight vector length must match element count");
    double total = 0.0;
    for (const auto& wn : w.weights) {
        require_finite(wn.real(), "weight real part");
        require_finite(wn.imag(), "weight imag part");
        total += std::abs(wn);
    }
    if (!(total > 0.0))
        throw std::invalid_argument("weight vector must have positive total magnitude");
}

namespace detail {

/// Response kernel without argument validation; (s, c) = (sin, cos) of the
/// observation angle. Summation runs in element-index order so results are
/// bit-reproducible.
inline std::complex<double> response_kernel(const ArrayLayout& layout,
                                            const WeightVector& w, double s, double c) {
    std::complex<double> acc{0.0, 0.0};
    double norm = 0.0;
    for (std::size_t i = 0; i < layout.positions.size(); ++i) {
        const double phase = two_pi * (layout.positions[i].x * s + layout.positions[i].y * c);
        acc += w.weights[i] * std::complex<double>(std::cos(phase), std::sin(phase));
        norm += std::abs(w.weights[i]);
    }
    return acc / norm;
}

inline WeightVector steering_kernel(const ArrayLayout& layout, double theta_s,
                                    std::span<const double> magnitudes) {
    const double s = std::sin(theta_s);
    const double c = std::cos(theta_s);
    WeightVector w;
    w.weights.reserve(layout.positions.size());
    for (std::size_t i = 0; i < layout.positions.size(); ++i) {
        const double mag = magnitudes.empty() ? 1.0 : magnitudes[i];
        const double phase = two_pi * (layout.positions[i].x * s + layout.positions[i].y * c);
        w.weights.emplace_back(mag * std::cos(phase), -mag * std::sin(phase));
    }
    return w;
}

}  // namespace detail

/// Phase-conjugate steering weights: w_n = |w_n| exp(-j 2 pi (x_n sin
/// theta_s + y_n cos theta_s)). Empty `magnitudes` means unit magnitude for
/// every element.
inline WeightVector steering_weights(const ArrayLayout& layout, double theta_s,
                                     std::span<const double> magnitudes = {}) {
    validate(layout);
    require_finite(theta_s, "steering angle");
    if (!magnitudes.empty() && magnitudes.size() != layout.positions.size())
        throw std::invalid_argument("magnitude list length must match element count");
    for (double m : magnitudes) {
        require_finite(m, "weight magnitude");
        if (!(m > 0.0))
            throw std::invalid_argument("weight magnitudes must be > 0");
    }
    return detail::steering_kernel(layout, theta_s, magnitudes);
}

/// Normalized far-field response
///   f(theta) = (1 / sum |w_n|) * sum w_n exp(j 2 pi (x_n sin + y_n cos)).
inline std::complex<double> response(const ArrayLayout& layout, const WeightVector& w,
                                     double theta) {
    validate(layout);
    validate(w, layout.positions.size());
    require_finite(theta, "observation angle");
    return detail::response_kernel(layout, w, std::sin(theta), std::cos(theta));
}

/// Response of a multi-linear topology in factored form: a geometric inner
/// sum per sub-array times that sub-array's leading-element phase. Equals
/// response(expand_topology(t), w, theta) up to rounding; weights are
/// ordered sub-array-major to match expand_topology.
inline std::complex<double> multilinear_response(const MultiLinearTopology& t,
                                                 const WeightVector& w, double theta) {
    validate(t);
    validate(w, element_count(t));
    require_finite(theta, "observation angle");
    const double s = std::sin(theta);
    const double c = std::cos(theta);
    std::complex<double> acc{0.0, 0.0};
    double norm = 0.0;
    std::size_t k = 0;
    for (const auto& sub : t.subarrays) {
        std::complex<double> inner{0.0, 0.0};
        for (int n = 0; n < sub.count; ++n, ++k) {
            const double phase = two_pi * (n * sub.spacing * s);
            inner += w.weights[k] * std::complex<double>(std::cos(phase), std::sin(phase));
            norm += std::abs(w.weights[k]);
        }
        const double lead = two_pi * (sub.leading.x * s + sub.leading.y * c);
        acc += std::complex<double>(std::cos(lead), std::sin(lead)) * inner;
    }
    return acc / norm;
}

/// Uniform inclusive grid over [lo, hi]; a single-point grid sits at the
/// midpoint.
inline std::vector<double> uniform_angle_grid(double lo, double hi, int count) {
    require_finite(lo, "grid lower bound");
    require_finite(hi, "grid upper bound");
    if (count < 1) throw std::invalid_argument("grid needs at least one point");
    if (!(lo < hi)) throw std::invalid_argument("grid bounds must satisfy lo < hi");
    std::vector<double> g;
    g.reserve(static_cast<std::size_t>(count));
    if (count == 1) {
        g.push_back(0.5 * (lo + hi));
        return g;
    }
    for (int k = 0; k < count; ++k)
        g.push_back(lo + (hi - lo) * (static_cast<double>(k) / (count - 1)));
    return g;
}

inline void validate_grid(std::span<const double> grid, const char* name) {
    if (grid.empty())
        throw std::invalid_argument(std::string(name) + " grid must be non-empty");
    for (double v : grid) require_finite(v, name);
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (!(grid[i] > grid[i - 1]))
            throw std::invalid_argument(std::string(name) +
                                        " grid must be strictly increasing");
}

/// |response| over a steering grid x observation grid, row-major by steering
/// index. Magnitudes are clamped at the unit normalization bound to absorb
/// last-ulp rounding above 1.
struct PatternGrid {
    std::vector<double> steer_angles;
    std::vector<double> obs_angles;
    std::vector<double> magnitude;                 // steer-major, size = S*O
    std::vector<std::complex<double>> values;      // optional complex field

    double mag(std::size_t steer_idx, std::size_t obs_idx) const {
        return magnitude[steer_idx * obs_angles.size() + obs_idx];
    }
    const std::complex<double>& value(std::size_t steer_idx, std::size_t obs_idx) const {
        return values[steer_idx * obs_angles.size() + obs_idx];
    }
};

struct SweepOptions {
    bool keep_complex = false;
    unsigned threads = 1;
};

/// Steer to every angle in steer_grid and evaluate the response on obs_grid.
/// Work parallelizes over steering angles; output is identical for any
/// thread count.
inline PatternGrid pattern_sweep(const ArrayLayout& layout,
                                 std::span<const double> steer_grid,
                                 std::span<const double> obs_grid,
                                 std::span<const double> magnitudes = {},
                                 const SweepOptions& opt = {}) {
    validate(layout);
    validate_grid(steer_grid, "steering");
    validate_grid(obs_grid, "observation");
    if (!magnitudes.empty() && magnitudes.size() != layout.positions.size())
        throw std::invalid_argument("magnitude list length must match element count");
    for (double m : magnitudes) {
        require_finite(m, "weight magnitude");
        if (!(m > 0.0))
            throw std::invalid_argument("weight magnitudes must be > 0");
    }

    PatternGrid grid;
    grid.steer_angles.assign(steer_grid.begin(), steer_grid.end());
    grid.obs_angles.assign(obs_grid.begin(), obs_grid.end());
    grid.magnitude.assign(steer_grid.size() * obs_grid.size(), 0.0);
    if (opt.keep_complex)
        grid.values.assign(steer_grid.size() * obs_grid.size(), {0.0, 0.0});

    parallel_for(steer_grid.size(), opt.threads, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            const WeightVector w = detail::steering_kernel(layout, steer_grid[i], magnitudes);
            for (std::size_t j = 0; j < obs_grid.size(); ++j) {
                const std::complex<double> f =
                    detail::response_kernel(layout, w, std::sin(obs_grid[j]), std::cos(obs_grid[j]));
                grid.magnitude[i * obs_grid.size() + j] = std::min(1.0, std::abs(f));
                if (opt.keep_complex) grid.values[i * obs_grid.size() + j] = f;
            }
        }
    });
    return grid;
}

}  // namespace swarmbeam
