// Acceptance harness: one self-contained check per release criterion,
// printed as a single [PASS]/[FAIL] line with the measured quantities.
// Exit status is the number of failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <exception>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <swarmbeam/swarmbeam.hpp>

using namespace swarmbeam;

namespace {

constexpr unsigned kThreads = 4;

struct check_failure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void require(bool ok, const std::string& msg) {
    if (!ok) throw check_failure(msg);
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

std::mt19937_64 rng(std::uint64_t seed) { return std::mt19937_64(seed); }

double uniform(std::mt19937_64& g, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(g);
}

ArrayLayout random_layout(std::mt19937_64& g, int max_elements) {
    std::uniform_int_distribution<int> count(2, max_elements);
    ArrayLayout layout;
    const int n = count(g);
    layout.positions.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        layout.positions.push_back({uniform(g, -10.0, 10.0), uniform(g, -10.0, 10.0)});
    return layout;
}

// Complex sample variance E|z|^2 - |E z|^2.
double complex_variance(const std::vector<std::complex<double>>& zs) {
    std::complex<double> mean{0.0, 0.0};
    double abs2 = 0.0;
    for (const auto& z : zs) {
        mean += z;
        abs2 += std::norm(z);
    }
    mean /= static_cast<double>(zs.size());
    return std::max(0.0, abs2 / static_cast<double>(zs.size()) - std::norm(mean));
}

std::size_t scan_hits(const ArrayLayout& layout, std::span<const double> steer,
                      std::span<const double> obs, double epsilon) {
    SweepOptions opt;
    opt.threads = kThreads;
    const PatternGrid grid = pattern_sweep(layout, steer, obs, {}, opt);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < steer.size(); ++i) {
        const std::span<const double> row(grid.magnitude.data() + i * obs.size(),
                                          obs.size());
        hits += detail::scan_magnitude_row(row, obs, steer[i], epsilon).hits.size();
    }
    return hits;
}

// ---------------------------------------------------------------------------

std::string criterion_steering_exactness() {
    auto g = rng(2001);
    const std::vector<double> circle = uniform_angle_grid(-pi, pi, 721);
    double worst_steer = 0.0, worst_over = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        const ArrayLayout layout = random_layout(g, 200);
        const double theta_s = uniform(g, -pi, pi);
        const WeightVector w = steering_weights(layout, theta_s);
        worst_steer = std::max(
            worst_steer, std::abs(response(layout, w, theta_s) - std::complex<double>(1.0, 0.0)));
        for (double theta : circle)
            worst_over = std::max(worst_over, std::abs(response(layout, w, theta)) - 1.0);
    }
    require(worst_steer <= 1e-12,
            "steered response drifts from 1 by " + fmt(worst_steer));
    require(worst_over <= 1e-12, "|f| exceeds 1 by " + fmt(worst_over));
    return "max |f(theta_s)-1| = " + fmt(worst_steer) +
           ", max |f|-1 = " + fmt(worst_over);
}

std::string criterion_offset_lattice_sweep() {
    const ArrayLayout layout = expand_topology(dual_linear(0.8, 0.4, 0.32, 50, 49));
    const std::vector<double> steer = uniform_angle_grid(-pi / 2.0, pi / 2.0, 181);
    const std::vector<double> obs = uniform_angle_grid(-pi / 2.0, pi / 2.0, 721);
    const std::size_t hits = scan_hits(layout, steer, obs, 0.01);
    require(hits == 0, std::to_string(hits) + " grating detections at epsilon = 0.01");
    return "181x721 sweep, 0 grating detections at epsilon = 0.01";
}

std::string criterion_boundary_lattice() {
    const double d = std::sqrt(3.0) / 3.0;
    const C3Report rep = c3_check(d, std::sqrt(3.0) / 6.0, 0.5);
    require(rep.verdict == C3Verdict::boundary,
            std::string("verdict ") + to_string(rep.verdict) + ", expected boundary");
    std::set<std::pair<long long, long long>> pq;
    double worst = 0.0;
    for (const C3Witness& w : rep.witnesses) {
        pq.insert({w.p, w.q});
        worst = std::max(worst, std::abs(w.lhs - 4.0));
    }
    require(pq == std::set<std::pair<long long, long long>>{{1, 0}, {1, 1}},
            "witness set is not exactly {(1,0),(1,1)}");
    require(worst <= 1e-12, "tangent lhs deviates from 4 by " + fmt(worst));

    const ArrayLayout layout = expand_topology(equilateral_dual(d, 50, 49));
    const std::vector<double> steer = uniform_angle_grid(-pi / 2.0, pi / 2.0, 181);
    const std::vector<double> obs = uniform_angle_grid(-pi / 2.0, pi / 2.0, 721);
    const std::size_t hits = scan_hits(layout, steer, obs, 0.01);
    require(hits == 0, std::to_string(hits) + " in-view grating detections");
    return "boundary witnesses {(1,0),(1,1)}, |lhs-4| = " + fmt(worst) +
           ", sweep clean";
}

std::string criterion_subwavelength_lattice() {
    const double d = 0.6, x21 = 0.3, y21 = 0.3 * std::sqrt(3.0);
    const C3Report rep = c3_check(d, x21, y21);
    require(rep.verdict == C3Verdict::violated,
            std::string("verdict ") + to_string(rep.verdict) + ", expected violated");
    std::set<std::pair<long long, long long>> pq;
    for (const C3Witness& w : rep.witnesses) pq.insert({w.p, w.q});
    require(pq.count({1, 0}) == 1 && pq.count({1, 1}) == 1,
            "witnesses missing (1,0) or (1,1)");

    std::size_t in_view = 0;
    const std::vector<PeriodPair> pairs = period_solutions(d, x21, y21);
    require(!pairs.empty(), "no period solutions found");
    for (const PeriodPair& pp : pairs)
        if (std::abs(pp.theta) <= pi / 2.0 + 1e-12) {
            ++in_view;
            require(std::abs(pp.theta_image) > pi / 2.0,
                    "image angle " + fmt(rad2deg(pp.theta_image)) +
                        " deg lies inside the view");
        }
    require(in_view > 0, "no period solution steers inside the view");

    const ArrayLayout layout = expand_topology(equilateral_dual(d, 50, 49));
    const std::vector<double> steer = uniform_angle_grid(-pi / 2.0, pi / 2.0, 181);
    const std::vector<double> obs = uniform_angle_grid(-pi / 2.0, pi / 2.0, 721);
    const std::size_t hits = scan_hits(layout, steer, obs, 0.01);
    require(hits == 0, std::to_string(hits) + " in-view grating detections");
    return std::to_string(pairs.size()) + " period pairs, " + std::to_string(in_view) +
           " steer in view, images outside, sweep clean";
}

std::string criterion_offset_threshold() {
    const double thr = c3_y21_threshold(0.8, 0.4);
    const double expect = 1.0 / std::sqrt(9.75);
    require(std::abs(thr - expect) <= 1e-9,
            "threshold " + fmt(thr) + " differs from 1/sqrt(9.75)");
    const C3Verdict above = c3_check(0.8, 0.4, 1.001 * thr).verdict;
    const C3Verdict below = c3_check(0.8, 0.4, 0.999 * thr).verdict;
    require(below == C3Verdict::strict, "verdict below threshold is not strict");
    require(above != C3Verdict::strict, "verdict above threshold is strict");
    return "threshold = " + fmt(thr) + " (= 0.3203), flips at +/-0.1%";
}

std::string criterion_steered_laws() {
    const ArrayLayout layout = expand_topology(equilateral_dual(std::sqrt(3.0) / 3.0, 50, 49));
    const WeightVector w = steering_weights(layout, 0.0);
    const PerturbationModel model = PerturbationModel::isotropic(0.1);
    const std::vector<double> grid{0.0};
    MonteCarloOptions opt;
    opt.trials = 100000;
    opt.seed = 12345;
    opt.threads = kThreads;
    const std::vector<FluctuationStats> stats =
        monte_carlo_stats(layout, w, model, grid, 0.0, opt);

    const double mean_expect = 0.8208687174155399;         // exp(-2 pi^2 0.01)
    const double var_expect = 0.0032946924118037015;       // (1-exp(-4 pi^2 0.01))/99
    const double mean_mc = std::abs(stats[0].mc_mean);
    const double var_mc = stats[0].mc_variance;
    const double mean_err = std::abs(mean_mc - mean_expect) / mean_expect;
    const double var_err = std::abs(var_mc - var_expect) / var_expect;
    require(mean_err <= 0.01, "mean off by " + fmt(100.0 * mean_err) + "%");
    require(var_err <= 0.05, "variance off by " + fmt(100.0 * var_err) + "%");
    return "mean err " + fmt(100.0 * mean_err) + "%, var err " + fmt(100.0 * var_err) +
           "% at 1e5 trials";
}

std::string criterion_fluctuation_laws() {
    const ArrayLayout layout = expand_topology(equilateral_dual(std::sqrt(3.0) / 3.0, 50, 49));
    const std::size_t n = layout.positions.size();
    const WeightVector w = steering_weights(layout, 0.0);
    const double sigma = 0.1;
    const PerturbationModel model = PerturbationModel::isotropic(sigma);
    const double theta = deg2rad(30.0);

    // Variance of the first-order fluctuation at a non-steered angle.
    const std::size_t trials = 100000;
    std::vector<std::complex<double>> dfs(trials);
    for (std::uint64_t t = 0; t < trials; ++t)
        dfs[t] = linearized_fluctuation(
            layout, w, sample_perturbation(model, n, derive_stream(777, t)), theta);
    const double var_expect = two_pi * two_pi * sigma * sigma / static_cast<double>(n);
    const double var_mc = complex_variance(dfs);
    const double var_err = std::abs(var_mc - var_expect) / var_expect;
    require(var_err <= 0.10, "fluctuation variance off by " + fmt(100.0 * var_err) + "%");

    // Tail frequencies against the concentration bound on a 20-point grid.
    double worst_margin = 0.0;
    for (int k = 1; k <= 20; ++k) {
        const double t = 0.3 * k / 20.0;
        std::size_t count = 0;
        for (const auto& z : dfs) count += std::abs(z) >= t;
        const double freq = static_cast<double>(count) / static_cast<double>(trials);
        const double bound = tail_bound(t, n, sigma);
        require(freq <= bound, "tail frequency " + fmt(freq) + " exceeds bound " +
                                   fmt(bound) + " at t = " + fmt(t));
        worst_margin = std::max(worst_margin, bound > 0.0 ? freq / bound : 0.0);
    }

    // Quadratic decay of the linearization error when sigma halves.
    const std::vector<double> grid = uniform_angle_grid(-pi / 2.0, pi / 2.0, 41);
    double err_small = 0.0, err_big = 0.0;
    for (std::uint64_t trial = 0; trial < 64; ++trial) {
        const PerturbationSample small = sample_perturbation(
            PerturbationModel::isotropic(0.01), n, derive_stream(31, trial));
        const PerturbationSample big = sample_perturbation(
            PerturbationModel::isotropic(0.02), n, derive_stream(31, trial));
        for (double th : grid) {
            const std::complex<double> f0 = response(layout, w, th);
            err_small = std::max(err_small,
                                 std::abs(perturbed_response(layout, w, small, th) - f0 -
                                          linearized_fluctuation(layout, w, small, th)));
            err_big = std::max(err_big,
                               std::abs(perturbed_response(layout, w, big, th) - f0 -
                                        linearized_fluctuation(layout, w, big, th)));
        }
    }
    const double ratio = err_big / err_small;
    require(ratio >= 3.0 && ratio <= 5.0,
            "error ratio " + fmt(ratio) + " outside [3, 5]");
    return "var err " + fmt(100.0 * var_err) + "%, max tail freq/bound " +
           fmt(worst_margin) + ", sigma-halving error ratio " + fmt(ratio);
}

std::string criterion_fluctuation_trend() {
    const double d = std::sqrt(3.0) / 3.0;
    const std::vector<double> grid = uniform_angle_grid(-pi / 2.0, pi / 2.0, 181);
    const PerturbationModel model = PerturbationModel::isotropic(0.1);

    std::vector<double> off_steer, at_steer;
    const int sizes[] = {40, 80, 160};
    for (std::size_t idx = 0; idx < 3; ++idx) {
        const int nn = sizes[idx];
        const ArrayLayout layout =
            expand_topology(dual_linear(d, d / 2.0, d * std::sqrt(3.0) / 2.0, nn / 2,
                                        nn - nn / 2));
        const WeightVector w = steering_weights(layout, 0.0);
        MonteCarloOptions opt;
        opt.trials = 500;
        opt.seed = derive_stream(1, idx);
        opt.threads = kThreads;
        const std::vector<FluctuationStats> stats =
            monte_carlo_stats(layout, w, model, grid, 0.0, opt);
        double acc = 0.0;
        std::size_t count = 0;
        for (const FluctuationStats& st : stats) {
            const double deg = std::abs(rad2deg(st.theta));
            if (deg >= 20.0 && deg <= 70.0) {
                acc += st.mean_abs_fluctuation;
                ++count;
            }
            if (st.law == AnalyticLaw::steer_exact)
                at_steer.push_back(st.mean_abs_fluctuation);
        }
        off_steer.push_back(acc / static_cast<double>(count));
    }
    require(at_steer.size() == 3, "steering angle missing from the grid");
    const double r1 = off_steer[0] / off_steer[1];
    const double r2 = off_steer[1] / off_steer[2];
    require(r1 >= 1.25 && r1 <= 1.6, "40->80 shrink factor " + fmt(r1));
    require(r2 >= 1.25 && r2 <= 1.6, "80->160 shrink factor " + fmt(r2));
    const double lo = *std::min_element(at_steer.begin(), at_steer.end());
    const double hi = *std::max_element(at_steer.begin(), at_steer.end());
    const double spread = (hi - lo) / (0.5 * (hi + lo));
    require(spread < 0.15,
            "steered fluctuation varies by " + fmt(100.0 * spread) + "% across N");
    return "off-steer shrink 40->80 = " + fmt(r1) + ", 80->160 = " + fmt(r2) +
           " (sqrt(2) = 1.414), steered spread " + fmt(100.0 * spread) + "%";
}

std::string criterion_spectral_laws() {
    const int sizes[] = {500, 1000, 2000};
    std::vector<double> median_sinc, median_cos;
    for (int nn : sizes) {
        std::vector<double> ks_sinc, ks_cos;
        for (std::uint64_t seed = 1; seed <= 5; ++seed) {
            CubeEnsemble ens;
            ens.n = nn;
            ens.side_m = 10.0 * std::sqrt(nn / 2000.0);
            ens.lambda_m = 0.3;
            ens.seed = seed;
            const RegimeDescriptor reg = regime(ens);
            const KernelPair k = build_kernels(sample_cube(ens), ens.lambda_m, kThreads);

            std::vector<double> shifted = esd(k.sinc_part);
            for (double& e : shifted) e += 1.0;
            ks_sinc.push_back(
                compare_esd(shifted, LimitingLaw::marchenko_pastur(reg.beta)).ks);
            ks_cos.push_back(
                compare_esd(esd(k.cosine_part), LimitingLaw::semicircle(reg.beta)).ks);
        }
        std::sort(ks_sinc.begin(), ks_sinc.end());
        std::sort(ks_cos.begin(), ks_cos.end());
        median_sinc.push_back(ks_sinc[2]);
        median_cos.push_back(ks_cos[2]);
    }
    require(median_sinc[2] <= 0.05,
            "median sinc-part KS " + fmt(median_sinc[2]) + " exceeds 0.05");
    require(median_cos[2] <= 0.05,
            "median cosine-part KS " + fmt(median_cos[2]) + " exceeds 0.05");
    require(median_sinc[0] > median_sinc[1] && median_sinc[1] > median_sinc[2],
            "sinc-part KS not monotone: " + fmt(median_sinc[0]) + ", " +
                fmt(median_sinc[1]) + ", " + fmt(median_sinc[2]));
    return "median KS at n=2000: sinc " + fmt(median_sinc[2]) + ", cosine " +
           fmt(median_cos[2]) + "; sinc trend " + fmt(median_sinc[0]) + " > " +
           fmt(median_sinc[1]) + " > " + fmt(median_sinc[2]);
}

std::string criterion_density_normalizations() {
    const auto integral = [](auto f, double lo, double hi, int steps) {
        const double h = (hi - lo) / steps;
        double acc = 0.0;
        for (int k = 0; k < steps; ++k) acc += f(lo + (k + 0.5) * h);
        return acc * h;
    };

    for (double x : {0.5, 1.7, 33.0})
        require(cauchy_density(x) == cauchy_density(-x), "heavy-tailed law asymmetric");
    const double r = 1e4;
    const double cauchy_mass =
        integral([](double x) { return cauchy_density(x); }, -r, r, 4'000'000);
    const double cauchy_expect = 2.0 * std::atan(r) / pi;
    require(std::abs(cauchy_mass - cauchy_expect) <= 1e-6,
            "heavy-tailed quadrature off by " + fmt(cauchy_mass - cauchy_expect));

    const double beta = 0.1277;
    const double a = (1.0 - std::sqrt(beta)) * (1.0 - std::sqrt(beta));
    const double b = (1.0 + std::sqrt(beta)) * (1.0 + std::sqrt(beta));
    const double mp_mass =
        integral([&](double x) { return mp_density(x, beta); }, a, b, 2'000'000);
    require(std::abs(mp_mass - 1.0) <= 1e-6,
            "rectangular-ratio law mass " + fmt(mp_mass));

    const double edge = 2.0 * std::sqrt(beta);
    const double sc_mass = integral(
        [&](double x) { return semicircle_density(x, beta); }, -edge, edge, 2'000'000);
    require(std::abs(sc_mass - 1.0) <= 1e-6, "semicircle mass " + fmt(sc_mass));
    return "masses: heavy-tailed err " + fmt(cauchy_mass - cauchy_expect) +
           ", rectangular-ratio " + fmt(mp_mass) + ", semicircle " + fmt(sc_mass);
}

std::string criterion_oracle_equivalences() {
    auto g = rng(4242);

    // Factored multi-line evaluation vs the flat element sum.
    double worst_ml = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        MultiLinearTopology topo;
        std::uniform_int_distribution<int> subs(1, 4), cnt(1, 12);
        const int m = subs(g);
        for (int i = 0; i < m; ++i) {
            LinearSubarray sub;
            sub.spacing = uniform(g, 0.2, 1.5);
            sub.count = cnt(g);
            if (i > 0)
                sub.leading = {uniform(g, -5.0, 5.0), uniform(g, 0.1, 5.0)};
            topo.subarrays.push_back(sub);
        }
        const ArrayLayout layout = expand_topology(topo);
        WeightVector w;
        for (std::size_t k = 0; k < layout.positions.size(); ++k)
            w.weights.emplace_back(std::polar(uniform(g, 0.2, 2.0), uniform(g, -pi, pi)));
        const double theta = uniform(g, -pi, pi);
        worst_ml = std::max(worst_ml, std::abs(multilinear_response(topo, w, theta) -
                                               response(layout, w, theta)));
    }
    require(worst_ml <= 1e-12, "factored evaluation differs by " + fmt(worst_ml));

    // Perturbed evaluation vs plain evaluation of the displaced layout.
    double worst_pert = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        const ArrayLayout layout = random_layout(g, 60);
        const std::size_t n = layout.positions.size();
        const WeightVector w = steering_weights(layout, uniform(g, -1.0, 1.0));
        const PerturbationSample s = sample_perturbation(
            PerturbationModel::isotropic(0.05), n,
            derive_stream(99, static_cast<std::uint64_t>(trial)));
        ArrayLayout moved = layout;
        for (std::size_t k = 0; k < n; ++k) {
            moved.positions[k].x += s.deltas[k].dx;
            moved.positions[k].y += s.deltas[k].dy;
        }
        const double theta = uniform(g, -pi, pi);
        worst_pert = std::max(worst_pert, std::abs(perturbed_response(layout, w, s, theta) -
                                                   response(moved, w, theta)));
    }
    require(worst_pert <= 1e-12, "perturbed evaluation differs by " + fmt(worst_pert));

    // Eigensolver sanity: trace and Frobenius identities on a kernel matrix.
    const auto pts = sample_cube({300, 3.0, 0.3, 8});
    const KernelPair k = build_kernels(pts, 0.3, kThreads);
    const std::vector<double> eigs = esd(k.sinc_part);
    double sum = 0.0, sum2 = 0.0;
    for (double e : eigs) {
        sum += e;
        sum2 += e * e;
    }
    const double frob = k.sinc_part.squaredNorm();
    const double trace_err = std::abs(sum) / frob;  // trace is exactly zero
    const double frob_err = std::abs(sum2 - frob) / frob;
    require(trace_err <= 1e-6, "trace identity off by " + fmt(trace_err));
    require(frob_err <= 1e-6, "Frobenius identity off by " + fmt(frob_err));
    return "factored diff " + fmt(worst_ml) + ", displaced diff " + fmt(worst_pert) +
           ", trace/Frobenius rel err " + fmt(trace_err) + "/" + fmt(frob_err);
}

}  // namespace

int main() {
    struct Criterion {
        int id;
        const char* label;
        std::function<std::string()> run;
    };
    const std::vector<Criterion> criteria = {
        {1, "steering exactness on random layouts", criterion_steering_exactness},
        {2, "offset-lattice sweep shows no grating lobes", criterion_offset_lattice_sweep},
        {3, "equilateral boundary lattice analytics", criterion_boundary_lattice},
        {4, "sub-wavelength lattice: images leave the view", criterion_subwavelength_lattice},
        {5, "row-offset safety threshold", criterion_offset_threshold},
        {6, "steered-response mean/variance laws", criterion_steered_laws},
        {7, "fluctuation variance, tail bound, quadratic error", criterion_fluctuation_laws},
        {8, "fluctuation shrinks like 1/sqrt(N)", criterion_fluctuation_trend},
        {9, "kernel spectra match the limit laws", criterion_spectral_laws},
        {10, "limit-law densities normalize", criterion_density_normalizations},
        {11, "independent-oracle equivalences", criterion_oracle_equivalences},
    };

    int failures = 0;
    for (const Criterion& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        std::string detail;
        bool ok = true;
        try {
            detail = c.run();
        } catch (const std::exception& e) {
            ok = false;
            detail = e.what();
        }
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::printf("[%s] criterion %d: %s (%s) [%.2f s]\n", ok ? "PASS" : "FAIL", c.id,
                    c.label, detail.c_str(), secs);
        std::fflush(stdout);
        if (!ok) ++failures;
    }
    if (failures == 0)
        std::printf("all %zu criteria passed\n", criteria.size());
    else
        std::printf("%d of %zu criteria FAILED\n", failures, criteria.size());
    return failures;
}
