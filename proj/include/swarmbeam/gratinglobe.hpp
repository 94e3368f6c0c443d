#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "swarmbeam/beampattern.hpp"
#include "swarmbeam/common.hpp"
#include "swarmbeam/geometry.hpp"

namespace swarmbeam {

// ---------------------------------------------------------------------------
// Period-pair conditions for multi-linear arrays.
//
// Two look angles theta and theta' produce identical responses for every
// weight choice exactly when, writing ds = sin(theta) - sin(theta') and
// dc = cos(theta) - cos(theta'),
//   (C1) d_i * ds is a nonzero integer for every sub-array spacing d_i, and
//   (C2) x_l1 * ds + y_l1 * dc is an integer for every leading element
//        (x_l1, y_l1) of sub-arrays l = 2..M.
// Such image angles are where steered grating lobes live.
// ---------------------------------------------------------------------------

/// A value tested for integrality: the nearest integer and the distance to it.
struct IntegerResidual {
    double value = 0.0;
    long long nearest = 0;
    double residual = 0.0;
};

namespace detail {
inline IntegerResidual integer_residual(double value) {
    IntegerResidual r;
    r.value = value;
    r.nearest = std::llround(value);
    r.residual = std::abs(value - static_cast<double>(r.nearest));
    return r;
}
}  // namespace detail

/// C1 test value d * (sin theta - sin theta_image) for one spacing.
inline IntegerResidual c1_residual(double spacing, double theta, double theta_image) {
    require_finite(spacing, "spacing");
    require_finite(theta, "theta");
    require_finite(theta_image, "theta_image");
    if (!(spacing > 0.0)) throw std::invalid_argument("spacing must be > 0");
    return detail::integer_residual(spacing * (std::sin(theta) - std::sin(theta_image)));
}

/// C2 test value x * (sin theta - sin theta') + y * (cos theta - cos theta')
/// for one leading element.
inline IntegerResidual c2_residual(const Position2D& leading, double theta,
                                   double theta_image) {
    validate(leading);
    require_finite(theta, "theta");
    require_finite(theta_image, "theta_image");
    const double ds = std::sin(theta) - std::sin(theta_image);
    const double dc = std::cos(theta) - std::cos(theta_image);
    return detail::integer_residual(leading.x * ds + leading.y * dc);
}

/// True when (theta, theta_image) satisfy C1 for every sub-array and C2 for
/// every leading element past the first, i.e. the pattern repeats exactly at
/// theta_image no matter how the array is weighted.
inline bool is_period_pair(const MultiLinearTopology& t, double theta,
                           double theta_image, double tol = 1e-9) {
    validate(t);
    require_finite(theta, "theta");
    require_finite(theta_image, "theta_image");
    if (!(tol >= 0.0)) throw std::invalid_argument("tolerance must be >= 0");
    if (std::abs(wrap_pi(theta - theta_image)) < 1e-15) return false;
    for (const auto& s : t.subarrays) {
        const IntegerResidual r = c1_residual(s.spacing, theta, theta_image);
        if (r.residual > tol || r.nearest == 0) return false;
    }
    for (std::size_t l = 1; l < t.subarrays.size(); ++l) {
        const IntegerResidual r = c2_residual(t.subarrays[l].leading, theta, theta_image);
        if (r.residual > tol) return false;
    }
    return true;
}

// ---------------------------------------------------------------------------
// Dual-line criterion. For two parallel lines of common spacing d with the
// second line offset by (x21, y21), the period-pair conditions reduce to a
// lattice test: the candidate (p, q) in Z^2, p != 0, yields an image angle
// only when
//   lhs(p, q) = (p/d)^2 + ((q d - p x21) / (d y21))^2  <=  4.
// lhs > 4 for every candidate means no image angle exists at any steering.
// lhs is symmetric under (p, q) -> (-p, -q), so verdicts enumerate p >= 1.
// ---------------------------------------------------------------------------

enum class C3Verdict { strict, boundary, violated };

inline const char* to_string(C3Verdict v) {
    switch (v) {
        case C3Verdict::strict: return "strict";
        case C3Verdict::boundary: return "boundary";
        default: return "violated";
    }
}

struct C3Witness {
    long long p = 0;
    long long q = 0;
    double lhs = 0.0;
};

/// Enumeration window actually searched: p in [1, p_max]; per p, q in
/// [q_lo, q_hi]. Outside the window the second lhs term alone exceeds 4.
struct C3SearchBounds {
    long long p_max = 0;
    std::vector<std::array<long long, 3>> q_ranges;  // rows (p, q_lo, q_hi)
};

struct C3Report {
    C3Verdict verdict = C3Verdict::strict;
    std::vector<C3Witness> witnesses;  // lhs <= 4 + tol, sorted by lhs then (p, q)
    double min_lhs = std::numeric_limits<double>::infinity();
    C3SearchBounds bounds;
};

namespace detail {

inline void check_dual_params(double d, double x21, double y21, double tol) {
    require_finite(d, "spacing d");
    require_finite(x21, "offset x21");
    require_finite(y21, "offset y21");
    if (!(d > 0.0)) throw std::invalid_argument("spacing d must be > 0");
    if (!(tol >= 0.0)) throw std::invalid_argument("tolerance must be >= 0");
    if (y21 == 0.0)
        throw degenerate_geometry_error(
            "dual-line criterion requires y21 != 0 (lines must not be collinear)");
}

inline long long candidate_p_max(double d) {
    // |sin theta - sin theta'| <= 2 caps |p| at 2d.
    return static_cast<long long>(std::floor(2.0 * d + 1e-12));
}

inline void candidate_q_range(double d, double x21, double y21, long long p,
                              long long& q_lo, long long& q_hi) {
    // |q d - p x21| <= 2 d |y21|, i.e. q within 2|y21| of p x21 / d.
    const double center = static_cast<double>(p) * x21 / d;
    const double half = 2.0 * std::abs(y21);
    const double pad = 1e-9 * (1.0 + std::abs(center) + half);
    q_lo = static_cast<long long>(std::ceil(center - half - pad));
    q_hi = static_cast<long long>(std::floor(center + half + pad));
}

}  // namespace detail

/// Evaluate the dual-line criterion for spacing d and offset (x21, y21).
inline C3Report c3_check(double d, double x21, double y21, double tol = 1e-9) {
    detail::check_dual_params(d, x21, y21, tol);
    C3Report report;
    report.bounds.p_max = detail::candidate_p_max(d);
    for (long long p = 1; p <= report.bounds.p_max; ++p) {
        long long q_lo = 0, q_hi = -1;
        detail::candidate_q_range(d, x21, y21, p, q_lo, q_hi);
        report.bounds.q_ranges.push_back({p, q_lo, q_hi});
        const double a_s = static_cast<double>(p) / d;
        for (long long q = q_lo; q <= q_hi; ++q) {
            const double a_c = (static_cast<double>(q) * d - static_cast<double>(p) * x21) /
                               (d * y21);
            const double lhs = a_s * a_s + a_c * a_c;
            report.min_lhs = std::min(report.min_lhs, lhs);
            if (lhs <= 4.0 + tol) report.witnesses.push_back({p, q, lhs});
        }
    }
    std::sort(report.witnesses.begin(), report.witnesses.end(),
              [](const C3Witness& a, const C3Witness& b) {
                  if (a.lhs != b.lhs) return a.lhs < b.lhs;
                  if (a.p != b.p) return a.p < b.p;
                  return a.q < b.q;
              });
    if (report.min_lhs < 4.0 - tol)
        report.verdict = C3Verdict::violated;
    else if (!report.witnesses.empty())
        report.verdict = C3Verdict::boundary;
    else
        report.verdict = C3Verdict::strict;
    return report;
}

/// Largest |y21| below which the dual-line criterion holds strictly for the
/// given d and x21 (at |y21| equal to the threshold the criterion sits on
/// the boundary). +infinity when every candidate p is already excluded by
/// the first lhs term, e.g. d <= 1/2.
inline double c3_y21_threshold(double d, double x21) {
    require_finite(d, "spacing d");
    require_finite(x21, "offset x21");
    if (!(d > 0.0)) throw std::invalid_argument("spacing d must be > 0");
    double threshold = std::numeric_limits<double>::infinity();
    const long long p_max = detail::candidate_p_max(d);
    for (long long p = 1; p <= p_max; ++p) {
        const double a_s = static_cast<double>(p) / d;
        const double slack = 4.0 - a_s * a_s;
        if (!(slack > 0.0)) continue;
        const long long q0 = std::llround(static_cast<double>(p) * x21 / d);
        for (long long q = q0 - 1; q <= q0 + 1; ++q) {
            const double num =
                std::abs(static_cast<double>(q) * d - static_cast<double>(p) * x21);
            threshold = std::min(threshold, num / (d * std::sqrt(slack)));
        }
    }
    return threshold;
}

/// One exact pattern repetition: steering theta and its image angle, with
/// the lattice witness (p, q) that produced it.
struct PeriodPair {
    double theta = 0.0;
    double theta_image = 0.0;
    long long p = 0;
    long long q = 0;
};

/// Image angles of a specific steering angle for a dual-line array: all
/// theta' != theta with sin theta' = sin theta - p/d and cos theta' =
/// cos theta - (q d - p x21)/(d y21) on the unit circle (within tol).
inline std::vector<PeriodPair> period_angles(double d, double x21, double y21,
                                             double theta, double tol = 1e-9) {
    detail::check_dual_params(d, x21, y21, tol);
    require_finite(theta, "theta");
    std::vector<PeriodPair> pairs;
    const long long p_max = detail::candidate_p_max(d);
    const double s = std::sin(theta);
    const double c = std::cos(theta);
    for (long long ap = 1; ap <= p_max; ++ap) {
        for (int sign = 0; sign < 2; ++sign) {
            const long long p = sign ? -ap : ap;
            long long q_lo = 0, q_hi = -1;
            detail::candidate_q_range(d, x21, y21, p, q_lo, q_hi);
            const double a_s = static_cast<double>(p) / d;
            for (long long q = q_lo; q <= q_hi; ++q) {
                const double a_c =
                    (static_cast<double>(q) * d - static_cast<double>(p) * x21) / (d * y21);
                const double si = s - a_s;
                const double ci = c - a_c;
                if (std::abs(si * si + ci * ci - 1.0) > tol) continue;
                const double theta_image = std::atan2(si, ci);
                if (std::abs(wrap_pi(theta_image - theta)) <= 1e-12) continue;
                pairs.push_back({theta, theta_image, p, q});
            }
        }
    }
    std::sort(pairs.begin(), pairs.end(), [](const PeriodPair& a, const PeriodPair& b) {
        if (a.theta_image != b.theta_image) return a.theta_image < b.theta_image;
        if (a.p != b.p) return a.p < b.p;
        return a.q < b.q;
    });
    return pairs;
}

/// Every (theta, theta_image) pair a dual-line array admits. Per candidate
/// (p, q) with lhs <= 4 the constraint 2 a_s sin(theta) + 2 a_c cos(theta) =
/// lhs picks at most two steering angles on the circle; lhs = 4 is the
/// tangent case with exactly one. Pairs appear in both orientations since
/// (p, q) and (-p, -q) swap theta and theta_image.
inline std::vector<PeriodPair> period_solutions(double d, double x21, double y21,
                                                double tol = 1e-9) {
    detail::check_dual_params(d, x21, y21, tol);
    std::vector<PeriodPair> pairs;
    const long long p_max = detail::candidate_p_max(d);
    for (long long ap = 1; ap <= p_max; ++ap) {
        for (int sign = 0; sign < 2; ++sign) {
            const long long p = sign ? -ap : ap;
            long long q_lo = 0, q_hi = -1;
            detail::candidate_q_range(d, x21, y21, p, q_lo, q_hi);
            const double a_s = static_cast<double>(p) / d;
            for (long long q = q_lo; q <= q_hi; ++q) {
                const double a_c =
                    (static_cast<double>(q) * d - static_cast<double>(p) * x21) / (d * y21);
                const double lhs = a_s * a_s + a_c * a_c;
                if (lhs > 4.0 + tol) continue;
                // R sin(theta + phi) = lhs with R = 2 sqrt(lhs); solutions
                // exist because lhs <= 4 makes lhs / R <= 1.
                const double ratio = std::min(1.0, 0.5 * std::sqrt(lhs));
                const double base = std::asin(ratio);
                const double phi = std::atan2(a_c, a_s);
                const double cands[2] = {wrap_pi(base - phi), wrap_pi(pi - base - phi)};
                for (int k = 0; k < 2; ++k) {
                    if (k == 1 && std::abs(wrap_pi(cands[1] - cands[0])) <= 1e-12)
                        break;  // tangent case: both branches coincide
                    const double th = cands[k];
                    const double si = std::sin(th) - a_s;
                    const double ci = std::cos(th) - a_c;
                    const double theta_image = std::atan2(si, ci);
                    if (std::abs(wrap_pi(theta_image - th)) <= 1e-12) continue;
                    pairs.push_back({th, theta_image, p, q});
                }
            }
        }
    }
    std::sort(pairs.begin(), pairs.end(), [](const PeriodPair& a, const PeriodPair& b) {
        if (a.theta != b.theta) return a.theta < b.theta;
        if (a.p != b.p) return a.p < b.p;
        return a.q < b.q;
    });
    return pairs;
}

/// Heuristic gate for applying integer lattice analysis to measured
/// spacings: true when every pairwise spacing ratio reads as a rational
/// p/q, q <= max_denominator, blurred only by float noise. Ratios that keep
/// producing continued-fraction terms past that denominator cap (e.g.
/// sqrt(2), whose convergents' denominators pass any cap) report false.
inline bool rational_spacing_precheck(std::span<const double> spacings,
                                      long long max_denominator) {
    if (spacings.empty())
        throw std::invalid_argument("spacing list must be non-empty");
    if (max_denominator < 1)
        throw std::invalid_argument("max denominator must be >= 1");
    for (double d : spacings) {
        require_finite(d, "spacing");
        if (!(d > 0.0)) throw std::invalid_argument("spacings must be > 0");
    }
    const auto near_rational = [max_denominator](double r) {
        double x = r;
        long long h0 = 1, k0 = 0;
        long long h1 = static_cast<long long>(std::floor(x)), k1 = 1;
        x -= std::floor(x);
        for (int it = 0; it < 64 && x > 1e-12; ++it) {
            x = 1.0 / x;
            const double af = std::floor(x);
            if (af > 9.0e15) break;  // remainder below float noise: exact here
            const long long a = static_cast<long long>(af);
            if (a > 0 && k1 > (std::numeric_limits<long long>::max() - k0) / a)
                return false;  // denominator overflow, certainly past the cap
            const long long h2 = a * h1 + h0;
            const long long k2 = a * k1 + k0;
            h0 = h1; h1 = h2;
            k0 = k1; k1 = k2;
            if (k1 > max_denominator) return false;
            x -= af;
        }
        return k1 <= max_denominator &&
               std::abs(r - static_cast<double>(h1) / static_cast<double>(k1)) < 1e-9;
    };
    for (std::size_t i = 0; i < spacings.size(); ++i)
        for (std::size_t j = i + 1; j < spacings.size(); ++j) {
            const double hi = std::max(spacings[i], spacings[j]);
            const double lo = std::min(spacings[i], spacings[j]);
            if (!near_rational(hi / lo)) return false;
        }
    return true;
}

namespace detail {

/// One scanned magnitude row: the first-local-minima bracket around the
/// main lobe, the peak sidelobe outside it, and near-unit hits.
struct RowScan {
    std::size_t peak = 0;      // grid index nearest theta_s
    std::size_t main_lo = 0;   // main-lobe bracket [main_lo, main_hi]
    std::size_t main_hi = 0;
    double max_sidelobe = 0.0;
    std::vector<double> hits;  // angles outside the bracket with |f| >= 1 - eps
};

/// Classify a precomputed |f| row over obs_grid for steering angle theta_s.
inline RowScan scan_magnitude_row(std::span<const double> mags,
                                  std::span<const double> obs_grid, double theta_s,
                                  double epsilon) {
    RowScan out;
    out.peak = 0;
    for (std::size_t j = 1; j < obs_grid.size(); ++j)
        if (std::abs(obs_grid[j] - theta_s) < std::abs(obs_grid[out.peak] - theta_s))
            out.peak = j;

    // Walk downhill to the first local minima on both sides; that interval
    // is the main lobe and is exempt from grating detection.
    out.main_lo = out.peak;
    while (out.main_lo > 0 && mags[out.main_lo - 1] < mags[out.main_lo])
        --out.main_lo;
    out.main_hi = out.peak;
    while (out.main_hi + 1 < obs_grid.size() && mags[out.main_hi + 1] < mags[out.main_hi])
        ++out.main_hi;

    for (std::size_t j = 0; j < obs_grid.size(); ++j) {
        if (j >= out.main_lo && j <= out.main_hi) continue;
        out.max_sidelobe = std::max(out.max_sidelobe, mags[j]);
        if (mags[j] >= 1.0 - epsilon) out.hits.push_back(obs_grid[j]);
    }
    return out;
}

struct ScanDetail {
    std::vector<double> magnitudes;
    RowScan row;
};

inline ScanDetail scan_pattern(const ArrayLayout& layout, double theta_s,
                               std::span<const double> obs_grid, double epsilon,
                               std::span<const double> magnitudes = {}) {
    validate(layout);
    require_finite(theta_s, "steering angle");
    validate_grid(obs_grid, "observation");
    if (obs_grid.size() < 3)
        throw std::invalid_argument(
            "observation grid too coarse to bracket the main lobe "
            "(need at least 3 points)");
    if (!(epsilon > 0.0 && epsilon < 1.0))
        throw std::invalid_argument("grating threshold epsilon must lie in (0, 1)");

    ScanDetail out;
    const WeightVector w = steering_kernel(layout, theta_s, magnitudes);
    out.magnitudes.resize(obs_grid.size());
    for (std::size_t j = 0; j < obs_grid.size(); ++j)
        out.magnitudes[j] = std::min(
            1.0, std::abs(response_kernel(layout, w, std::sin(obs_grid[j]),
                                          std::cos(obs_grid[j]))));
    out.row = scan_magnitude_row(out.magnitudes, obs_grid, theta_s, epsilon);
    return out;
}

}  // namespace detail

/// Observation angles (outside the main lobe) whose response magnitude
/// reaches 1 - epsilon when the array steers to theta_s.
inline std::vector<double> scan_grating_lobes(const ArrayLayout& layout, double theta_s,
                                              std::span<const double> obs_grid,
                                              double epsilon) {
    return detail::scan_pattern(layout, theta_s, obs_grid, epsilon).row.hits;
}

}  // namespace swarmbeam
