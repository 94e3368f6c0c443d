#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <set>
#include <vector>

#include <swarmbeam/swarmbeam.hpp>

#include "test_helpers.hpp"

using namespace swarmbeam;
using Catch::Matchers::WithinAbs;

namespace {

// Lattice used throughout: two parallel 50/49-element lines.
MultiLinearTopology nonuniform_lattice() { return dual_linear(0.8, 0.4, 0.32, 50, 49); }

}  // namespace

TEST_CASE("spacing residual against the nearest integer") {
    const IntegerResidual r = c1_residual(0.8, pi / 2.0, -pi / 2.0);
    CHECK_THAT(r.value, WithinAbs(1.6, 1e-15));
    CHECK(r.nearest == 2);
    CHECK_THAT(r.residual, WithinAbs(0.4, 1e-15));

    const IntegerResidual exact = c1_residual(1.0, pi / 2.0, -pi / 2.0);
    CHECK(exact.nearest == 2);
    CHECK_THAT(exact.residual, WithinAbs(0.0, 1e-15));

    CHECK_THROWS_AS(c1_residual(0.0, 0.1, 0.2), std::invalid_argument);
}

TEST_CASE("leading-element residual combines both axis shifts") {
    const IntegerResidual r = c2_residual({0.4, 0.32}, pi / 2.0, -pi / 2.0);
    CHECK_THAT(r.value, WithinAbs(0.8, 1e-15));
    CHECK(r.nearest == 1);
    CHECK_THAT(r.residual, WithinAbs(0.2, 1e-15));
}

TEST_CASE("known period pairs are recognized") {
    // Single line, one-wavelength spacing: sin 30 - sin(-30) = 1.
    MultiLinearTopology ula;
    ula.subarrays.push_back({{0.0, 0.0}, 1.0, 16});
    CHECK(is_period_pair(ula, pi / 6.0, -pi / 6.0));
    CHECK(is_period_pair(ula, pi / 2.0, -pi / 2.0));
    // sin 30 - sin(-150) = 1 as well: the image on the far side of the circle.
    CHECK(is_period_pair(ula, pi / 6.0, -pi + pi / 6.0));

    // Half-wavelength rectangular lattice: endfire pair via the row offset.
    const MultiLinearTopology rect = dual_linear(0.5, 0.0, 0.5, 8, 8);
    CHECK(is_period_pair(rect, pi / 2.0, -pi / 2.0));
}

TEST_CASE("non-pairs and the identity angle are rejected") {
    MultiLinearTopology ula;
    ula.subarrays.push_back({{0.0, 0.0}, 1.0, 16});
    CHECK_FALSE(is_period_pair(ula, 0.3, 0.3));
    CHECK_FALSE(is_period_pair(ula, 0.3, 0.4));

    // Half-wavelength single line never aliases: |d * (sin a - sin b)| < 1.
    MultiLinearTopology half;
    half.subarrays.push_back({{0.0, 0.0}, 0.5, 16});
    for (double a = -1.5; a <= 1.5; a += 0.17)
        for (double b = -1.5; b <= 1.5; b += 0.19)
            CHECK_FALSE(is_period_pair(half, a, b));
}

TEST_CASE("a period pair equalizes the response for every weighting") {
    auto g = testutil::rng(511);
    MultiLinearTopology ula;
    ula.subarrays.push_back({{0.0, 0.0}, 1.0, 16});
    const MultiLinearTopology rect = dual_linear(0.5, 0.0, 0.5, 8, 8);

    const struct {
        const MultiLinearTopology* topo;
        double theta, image;
    } cases[] = {
        {&ula, pi / 6.0, -pi / 6.0},
        {&ula, pi / 6.0, -pi + pi / 6.0},
        {&ula, 0.9, std::asin(std::sin(0.9) - 1.0)},
        {&rect, pi / 2.0, -pi / 2.0},
    };
    for (const auto& cs : cases) {
        REQUIRE(is_period_pair(*cs.topo, cs.theta, cs.image));
        const ArrayLayout layout = expand_topology(*cs.topo);
        for (int trial = 0; trial < 25; ++trial) {
            WeightVector w;
            for (std::size_t n = 0; n < layout.positions.size(); ++n)
                w.weights.emplace_back(std::polar(testutil::uniform(g, 0.3, 2.0),
                                                  testutil::uniform(g, -pi, pi)));
            const std::complex<double> fa = response(layout, w, cs.theta);
            const std::complex<double> fb = response(layout, w, cs.image);
            CHECK(std::abs(fa - fb) <= 1e-10);
        }
    }
}

TEST_CASE("offset lattice admits no period pair anywhere on the circle") {
    const MultiLinearTopology topo = nonuniform_lattice();
    const std::vector<double> fov = uniform_angle_grid(-pi / 2.0, pi / 2.0, 181);
    const std::vector<double> full = uniform_angle_grid(-pi, pi, 361);
    for (double theta : fov)
        for (double image : full)
            CHECK_FALSE(is_period_pair(topo, theta, image));
}

TEST_CASE("lattice certificate: strict case with margin") {
    const C3Report rep = c3_check(0.8, 0.4, 0.32);
    CHECK(rep.verdict == C3Verdict::strict);
    CHECK(rep.witnesses.empty());
    // Minimum over candidates sits at (1, 0) and (1, 1): 1.5625 + 1.5625^2.
    CHECK_THAT(rep.min_lhs, WithinAbs(4.00390625, 1e-12));
    CHECK(rep.bounds.p_max == 1);
    REQUIRE(rep.bounds.q_ranges.size() == 1);
    CHECK(rep.bounds.q_ranges[0][0] == 1);
}

TEST_CASE("lattice certificate: equilateral boundary case") {
    const double d = std::sqrt(3.0) / 3.0;
    const C3Report rep = c3_check(d, d / 2.0, d * std::sqrt(3.0) / 2.0);
    CHECK(rep.verdict == C3Verdict::boundary);
    REQUIRE(rep.witnesses.size() == 2);
    std::set<std::pair<long long, long long>> pq;
    for (const auto& wit : rep.witnesses) {
        pq.insert({wit.p, wit.q});
        CHECK_THAT(wit.lhs, WithinAbs(4.0, 1e-12));
    }
    CHECK(pq == std::set<std::pair<long long, long long>>{{1, 0}, {1, 1}});
}

TEST_CASE("lattice certificate: sub-wavelength equilateral case fails") {
    const C3Report rep = c3_check(0.6, 0.3, 0.3 * std::sqrt(3.0));
    CHECK(rep.verdict == C3Verdict::violated);
    CHECK_THAT(rep.min_lhs, WithinAbs(100.0 / 27.0, 1e-12));
    std::set<std::pair<long long, long long>> pq;
    for (const auto& wit : rep.witnesses) pq.insert({wit.p, wit.q});
    CHECK(pq.count({1, 0}) == 1);
    CHECK(pq.count({1, 1}) == 1);
}

TEST_CASE("certificate rejects bad parameters") {
    CHECK_THROWS_AS(c3_check(0.0, 0.1, 0.1), std::invalid_argument);
    CHECK_THROWS_AS(c3_check(0.8, 0.4, 0.0), degenerate_geometry_error);
    CHECK_THROWS_AS(c3_check(0.8, 0.4, 0.32, -1.0), std::invalid_argument);
}

TEST_CASE("row-offset threshold splits strict from non-strict") {
    // Growing the row offset y21 shrinks the lattice term, so strictness
    // holds strictly below the threshold and fails above it.
    const double thr = c3_y21_threshold(0.8, 0.4);
    CHECK_THAT(thr, WithinAbs(0.32025630761017426, 1e-12));
    CHECK(c3_check(0.8, 0.4, 0.999 * thr).verdict == C3Verdict::strict);
    CHECK(c3_check(0.8, 0.4, 1.001 * thr).verdict != C3Verdict::strict);

    auto g = testutil::rng(613);
    for (int trial = 0; trial < 40; ++trial) {
        const double d = testutil::uniform(g, 0.55, 1.5);
        const double x21 = testutil::uniform(g, 0.01, d);
        const double t = c3_y21_threshold(d, x21);
        REQUIRE(std::isfinite(t));
        REQUIRE(t > 0.0);
        CHECK(c3_check(d, x21, 0.999 * t).verdict == C3Verdict::strict);
        CHECK(c3_check(d, x21, 1.001 * t).verdict != C3Verdict::strict);
    }
}

TEST_CASE("half-wavelength rows make every offset safe") {
    CHECK(std::isinf(c3_y21_threshold(0.5, 0.2)));
    CHECK(std::isinf(c3_y21_threshold(0.4, 0.1)));
    const C3Report rep = c3_check(0.4, 0.1, 0.2);
    CHECK(rep.verdict == C3Verdict::strict);
    CHECK(rep.bounds.p_max == 0);
}

TEST_CASE("image angles for the sub-wavelength equilateral lattice") {
    const double d = 0.6, x21 = 0.3, y21 = 0.3 * std::sqrt(3.0);

    const std::vector<PeriodPair> all = period_solutions(d, x21, y21);
    REQUIRE(all.size() == 8);

    std::set<double> thetas;
    for (const auto& pr : all) thetas.insert(rad2deg(pr.theta));
    const double expect[] = {-135.79316904826396, -104.20683095173605,
                             -75.79316904826395,  -44.20683095173605,
                             44.20683095173605,   75.79316904826395,
                             104.20683095173605,  135.79316904826396};
    REQUIRE(thetas.size() == 8);
    std::size_t k = 0;
    for (double t : thetas) CHECK_THAT(t, WithinAbs(expect[k++], 1e-9));

    const MultiLinearTopology topo = dual_linear(d, x21, y21, 12, 12);
    for (const auto& pr : all) {
        CHECK(is_period_pair(topo, pr.theta, pr.theta_image));
        // Every in-view steering angle images outside the half-plane view.
        if (std::abs(pr.theta) <= pi / 2.0) CHECK(std::abs(pr.theta_image) > pi / 2.0);
        // sin/cos must shift by exactly the lattice increments.
        const double a_s = static_cast<double>(pr.p) / d;
        const double a_c =
            (static_cast<double>(pr.q) * d - static_cast<double>(pr.p) * x21) / (d * y21);
        CHECK_THAT(std::sin(pr.theta) - std::sin(pr.theta_image), WithinAbs(a_s, 1e-9));
        CHECK_THAT(std::cos(pr.theta) - std::cos(pr.theta_image), WithinAbs(a_c, 1e-9));
    }
}

TEST_CASE("image angles of one steering angle match the global enumeration") {
    const double d = 0.6, x21 = 0.3, y21 = 0.3 * std::sqrt(3.0);
    const std::vector<PeriodPair> all = period_solutions(d, x21, y21);
    for (const auto& pr : all) {
        const std::vector<PeriodPair> at = period_angles(d, x21, y21, pr.theta);
        const bool found = std::any_of(at.begin(), at.end(), [&](const PeriodPair& a) {
            return std::abs(wrap_pi(a.theta_image - pr.theta_image)) < 1e-9;
        });
        CHECK(found);
    }
    // Away from the solution angles nothing lands back on the unit circle.
    CHECK(period_angles(d, x21, y21, 0.1).empty());
    CHECK(period_angles(d, x21, y21, deg2rad(25.0)).empty());
}

TEST_CASE("strict lattice yields no image angle at any steering") {
    for (double theta : uniform_angle_grid(-pi / 2.0, pi / 2.0, 721))
        CHECK(period_angles(0.8, 0.4, 0.32, theta).empty());
    CHECK(period_solutions(0.8, 0.4, 0.32).empty());
}

TEST_CASE("boundary lattice has exactly the tangent pairs") {
    const double d = std::sqrt(3.0) / 3.0;
    const std::vector<PeriodPair> all = period_solutions(d, d / 2.0, d * std::sqrt(3.0) / 2.0);
    REQUIRE(all.size() == 4);
    std::set<double> thetas;
    for (const auto& pr : all) thetas.insert(rad2deg(pr.theta));
    const double expect[] = {-120.0, -60.0, 60.0, 120.0};
    std::size_t k = 0;
    for (double t : thetas) CHECK_THAT(t, WithinAbs(expect[k++], 1e-6));
    for (const auto& pr : all)
        CHECK_THAT(std::abs(rad2deg(pr.theta_image)), WithinAbs(180.0 - std::abs(rad2deg(pr.theta)), 1e-6));
}

TEST_CASE("rational spacing gate") {
    const std::vector<double> same{0.5, 0.5};
    CHECK(rational_spacing_precheck(same, 64));

    const std::vector<double> irr{0.5, 0.5 * std::sqrt(2.0)};
    CHECK_FALSE(rational_spacing_precheck(irr, 64));

    const std::vector<double> commensurate{0.3, 0.6, 0.9};
    CHECK(rational_spacing_precheck(commensurate, 64));

    const std::vector<double> single{0.7};
    CHECK(rational_spacing_precheck(single, 64));

    // 65/64 needs denominator 64; a cap of 63 must reject it.
    const std::vector<double> edge{64.0, 65.0};
    CHECK(rational_spacing_precheck(edge, 64));
    CHECK_FALSE(rational_spacing_precheck(edge, 63));

    CHECK_THROWS_AS(rational_spacing_precheck(std::vector<double>{}, 64),
                    std::invalid_argument);
    CHECK_THROWS_AS(rational_spacing_precheck(same, 0), std::invalid_argument);
    const std::vector<double> neg{0.5, -0.5};
    CHECK_THROWS_AS(rational_spacing_precheck(neg, 64), std::invalid_argument);
}

TEST_CASE("pattern scan finds the aliased beam of a full-wavelength line") {
    ArrayLayout layout;
    for (int n = 0; n < 20; ++n) layout.positions.push_back({1.0 * n, 0.0});
    const std::vector<double> grid = uniform_angle_grid(-pi / 2.0, pi / 2.0, 1441);
    const double theta_s = pi / 6.0;
    const std::vector<double> hits = scan_grating_lobes(layout, theta_s, grid, 0.01);
    REQUIRE_FALSE(hits.empty());
    // All hits cluster at the image angle -30 deg [sin(-30) = sin(30) - 1].
    for (double h : hits) CHECK_THAT(rad2deg(h), WithinAbs(-30.0, 0.5));
}

TEST_CASE("pattern scan reports a clean half-wavelength line") {
    ArrayLayout layout;
    for (int n = 0; n < 20; ++n) layout.positions.push_back({0.5 * n, 0.0});
    const std::vector<double> grid = uniform_angle_grid(-pi / 2.0, pi / 2.0, 1441);
    for (double theta_s : {-1.0, -0.3, 0.0, 0.7, 1.2})
        CHECK(scan_grating_lobes(layout, theta_s, grid, 0.01).empty());
}

TEST_CASE("pattern scan validates its inputs") {
    ArrayLayout layout{{{0.0, 0.0}, {0.5, 0.0}}};
    const std::vector<double> two{-0.1, 0.1};
    CHECK_THROWS_AS(scan_grating_lobes(layout, 0.0, two, 0.01), std::invalid_argument);
    const std::vector<double> grid = uniform_angle_grid(-1.0, 1.0, 11);
    CHECK_THROWS_AS(scan_grating_lobes(layout, 0.0, grid, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(scan_grating_lobes(layout, 0.0, grid, 1.0), std::invalid_argument);
}
