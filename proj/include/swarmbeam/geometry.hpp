#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "swarmbeam/common.hpp"

namespace swarmbeam {

/// Planar element position in wavelength units (the carrier wavelength is
/// the unit of length throughout the array model).
struct Position2D {
    double x = 0.0;
    double y = 0.0;
};

/// One uniformly spaced line of elements. `leading` is the first element;
/// the remaining `count - 1` elements continue along +x at `spacing`.
struct LinearSubarray {
    Position2D leading;
    double spacing = 0.5;
    int count = 1;
};

/// A set of parallel linear sub-arrays (all aligned with the x axis). By
/// convention the first sub-array's leading element sits at the origin.
struct MultiLinearTopology {
    std::vector<LinearSubarray> subarrays;
};

/// Flat list of element positions, wavelength units.
struct ArrayLayout {
    std::vector<Position2D> positions;
};

/// A far-field look direction: range (wavelengths) plus the angle theta
/// measured from the +y axis, so the unit direction is (sin theta, cos theta).
struct FarFieldQuery {
    double range = 0.0;
    double theta = 0.0;
};

inline void validate(const Position2D& p) {
    require_finite(p.x, "position x");
    require_finite(p.y, "position y");
}

inline void validate(const LinearSubarray& s) {
    validate(s.leading);
    require_finite(s.spacing, "sub-array spacing");
    if (!(s.spacing > 0.0))
        throw std::invalid_argument("sub-array spacing must be > 0");
    if (s.count < 1)
        throw std::invalid_argument("sub-array element count must be >= 1");
}

inline void validate(const MultiLinearTopology& t) {
    if (t.subarrays.empty())
        throw std::invalid_argument("topology needs at least one sub-array");
    for (const auto& s : t.subarrays) validate(s);
    const Position2D& first = t.subarrays.front().leading;
    if (first.x != 0.0 || first.y != 0.0)
        throw std::invalid_argument("first sub-array must lead at the origin");
}

inline void validate(const ArrayLayout& layout) {
    if (layout.positions.empty())
        throw std::invalid_argument("layout needs at least one element");
    for (const auto& p : layout.positions) validate(p);
}

/// Indices (i, j), i < j, of exactly coincident elements. Duplicates are
/// legal for the pattern math (they just re-weight), so this only feeds
/// warnings, not errors.
inline std::vector<std::pair<std::size_t, std::size_t>>
duplicate_positions(const ArrayLayout& layout) {
    std::vector<std::pair<std::size_t, std::size_t>> dups;
    const auto& ps = layout.positions;
    for (std::size_t i = 0; i < ps.size(); ++i)
        for (std::size_t j = i + 1; j < ps.size(); ++j)
            if (ps[i].x == ps[j].x && ps[i].y == ps[j].y) dups.emplace_back(i, j);
    return dups;
}

/// Exact range from an element to the far-field point at
/// (r sin theta, r cos theta).
inline double exact_distance(const FarFieldQuery& q, const Position2D& p) {
    require_finite(q.range, "query range");
    require_finite(q.theta, "query theta");
    validate(p);
    if (!(q.range > 0.0))
        throw std::invalid_argument("query range must be > 0");
    const double dx = q.range * std::sin(q.theta) - p.x;
    const double dy = q.range * std::cos(q.theta) - p.y;
    return std::hypot(dx, dy);
}

/// First-order far-field range: r minus the element's projection onto the
/// look direction. Error is O(|p|^2 / r).
inline double far_field_distance(const FarFieldQuery& q, const Position2D& p) {
    require_finite(q.range, "query range");
    require_finite(q.theta, "query theta");
    validate(p);
    if (!(q.range > 0.0))
        throw std::invalid_argument("query range must be > 0");
    return q.range - (p.x * std::sin(q.theta) + p.y * std::cos(q.theta));
}

inline std::size_t element_count(const MultiLinearTopology& t) {
    std::size_t n = 0;
    for (const auto& s : t.subarrays) n += static_cast<std::size_t>(s.count);
    return n;
}

/// Expand a multi-linear topology to explicit element positions. Order is
/// sub-array-major: all of sub-array 1 (leading element first), then
/// sub-array 2, and so on.
inline ArrayLayout expand_topology(const MultiLinearTopology& t) {
    validate(t);
    ArrayLayout layout;
    layout.positions.reserve(element_count(t));
    for (const auto& s : t.subarrays)
        for (int n = 0; n < s.count; ++n)
            layout.positions.push_back({s.leading.x + n * s.spacing, s.leading.y});
    return layout;
}

/// Two parallel lines with one common spacing d. The second line leads at
/// (x21, y21) relative to the first. y21 == 0 would collapse both lines onto
/// one axis, which the dual-line analysis cannot treat.
inline MultiLinearTopology dual_linear(double d, double x21, double y21,
                                       int n1, int n2) {
    require_finite(d, "spacing d");
    require_finite(x21, "offset x21");
    require_finite(y21, "offset y21");
    if (!(d > 0.0)) throw std::invalid_argument("spacing d must be > 0");
    if (n1 < 1 || n2 < 1)
        throw std::invalid_argument("sub-array element counts must be >= 1");
    if (y21 == 0.0)
        throw degenerate_geometry_error(
            "dual-line topology requires y21 != 0 (lines must not be collinear)");
    MultiLinearTopology t;
    t.subarrays.push_back({{0.0, 0.0}, d, n1});
    t.subarrays.push_back({{x21, y21}, d, n2});
    return t;
}

/// Dual line whose leading pair forms an equilateral triangle of side d with
/// the first two elements of line 1: x21 = d/2, y21 = d*sqrt(3)/2.
inline MultiLinearTopology equilateral_dual(double d, int n1, int n2) {
    require_finite(d, "spacing d");
    if (!(d > 0.0)) throw std::invalid_argument("spacing d must be > 0");
    return dual_linear(d, 0.5 * d, 0.5 * std::sqrt(3.0) * d, n1, n2);
}

}  // namespace swarmbeam
