#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "swarmbeam/common.hpp"

namespace swarmbeam {

// ---------------------------------------------------------------------------
// Spectra of wave-interaction kernels on random point clouds. For points
// drawn uniformly in a cube of side L, the matrix
//   G(i, j) = exp(-j 2 pi r_ij / lambda) / (-2 pi r_ij / lambda),  G(i, i) = 0
// splits into a real part (cosine kernel) and an imaginary part (sinc
// kernel). In the low-density regime their eigenvalue distributions follow
// classical laws parameterized by beta = 2.8 N / (2 pi L / lambda)^2:
// semicircle for the cosine part, Marchenko-Pastur for the sinc part after
// restoring the unit diagonal (+1 shift).
// ---------------------------------------------------------------------------

struct Position3D {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
};

/// N points uniform in [0, L]^3, physical units (meters) plus the carrier
/// wavelength.
struct CubeEnsemble {
    int n = 0;
    double side_m = 0.0;
    double lambda_m = 0.0;
    std::uint64_t seed = 1;
};

struct RegimeDescriptor {
    double beta = 0.0;         // 2.8 N / (2 pi L / lambda)^2
    double rho_lambda3 = 0.0;  // N lambda^3 / L^3
};

inline void validate(const CubeEnsemble& e) {
    if (e.n < 1) throw std::invalid_argument("ensemble size must be >= 1");
    require_finite(e.side_m, "cube side");
    require_finite(e.lambda_m, "wavelength");
    if (!(e.side_m > 0.0)) throw std::invalid_argument("cube side must be > 0");
    if (!(e.lambda_m > 0.0)) throw std::invalid_argument("wavelength must be > 0");
}

inline RegimeDescriptor regime(const CubeEnsemble& e) {
    validate(e);
    const double k_l = two_pi * e.side_m / e.lambda_m;
    RegimeDescriptor r;
    r.beta = 2.8 * static_cast<double>(e.n) / (k_l * k_l);
    r.rho_lambda3 = static_cast<double>(e.n) * std::pow(e.lambda_m, 3) /
                    std::pow(e.side_m, 3);
    return r;
}

/// Deterministic draw of the point cloud; coordinates in draw order x, y, z
/// per point.
inline std::vector<Position3D> sample_cube(const CubeEnsemble& e) {
    validate(e);
    std::mt19937_64 eng(e.seed);
    std::uniform_real_distribution<double> u(0.0, e.side_m);
    std::vector<Position3D> pts(static_cast<std::size_t>(e.n));
    for (auto& p : pts) {
        p.x = u(eng);
        p.y = u(eng);
        p.z = u(eng);
    }
    return pts;
}

/// Real and imaginary kernel parts, zero diagonal, exactly symmetric.
struct KernelPair {
    Eigen::MatrixXd cosine_part;  // -cos(2 pi r / lambda) / (2 pi r / lambda)
    Eigen::MatrixXd sinc_part;    //  sin(2 pi r / lambda) / (2 pi r / lambda)
};

inline KernelPair build_kernels(std::span<const Position3D> points, double lambda_m,
                                unsigned threads = 1) {
    if (points.empty()) throw std::invalid_argument("point list must be non-empty");
    require_finite(lambda_m, "wavelength");
    if (!(lambda_m > 0.0)) throw std::invalid_argument("wavelength must be > 0");
    for (const auto& p : points) {
        require_finite(p.x, "point x");
        require_finite(p.y, "point y");
        require_finite(p.z, "point z");
    }
    const auto n = static_cast<Eigen::Index>(points.size());
    KernelPair k;
    k.cosine_part = Eigen::MatrixXd::Zero(n, n);
    k.sinc_part = Eigen::MatrixXd::Zero(n, n);
    const double wavenumber = two_pi / lambda_m;
    // Row-block parallelism; each unordered pair is written by exactly one row
    // owner, so the result is thread-count independent.
    parallel_for(points.size(), threads, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            for (std::size_t j = i + 1; j < points.size(); ++j) {
                const double dx = points[i].x - points[j].x;
                const double dy = points[i].y - points[j].y;
                const double dz = points[i].z - points[j].z;
                const double r = std::sqrt(dx * dx + dy * dy + dz * dz);
                if (r == 0.0)
                    throw degenerate_geometry_error(
                        "coincident points make the interaction kernel singular");
                const double x = wavenumber * r;
                const double cv = -std::cos(x) / x;
                const double sv = std::sin(x) / x;
                const auto ei = static_cast<Eigen::Index>(i);
                const auto ej = static_cast<Eigen::Index>(j);
                k.cosine_part(ei, ej) = cv;
                k.cosine_part(ej, ei) = cv;
                k.sinc_part(ei, ej) = sv;
                k.sinc_part(ej, ei) = sv;
            }
        }
    });
    return k;
}

/// Empirical spectral distribution: all eigenvalues of a symmetric matrix,
/// ascending.
inline std::vector<double> esd(const Eigen::MatrixXd& a) {
    if (a.rows() == 0 || a.rows() != a.cols())
        throw std::invalid_argument("matrix must be square and non-empty");
    const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
    const double asym = (a - a.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-12 * scale)
        throw std::invalid_argument("matrix must be symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success)
        throw std::runtime_error("eigenvalue iteration failed to converge");
    std::vector<double> eigs(solver.eigenvalues().data(),
                             solver.eigenvalues().data() + a.rows());
    std::sort(eigs.begin(), eigs.end());
    return eigs;
}

// --------------------------- limiting laws ---------------------------------

/// Marchenko-Pastur density on [(1 - sqrt(beta))^2, (1 + sqrt(beta))^2],
/// valid for 0 < beta < 1 (the point mass at zero appears only at beta >= 1,
/// outside the regime treated here).
inline double mp_density(double x, double beta) {
    if (!(beta > 0.0 && beta < 1.0))
        throw std::domain_error("Marchenko-Pastur law requires 0 < beta < 1");
    require_finite(x, "x");
    const double sq = std::sqrt(beta);
    const double a = (1.0 - sq) * (1.0 - sq);
    const double b = (1.0 + sq) * (1.0 + sq);
    if (x <= a || x >= b) return 0.0;
    return std::sqrt((x - a) * (b - x)) / (two_pi * beta * x);
}

/// Wigner semicircle density on [-2 sqrt(beta), 2 sqrt(beta)].
inline double semicircle_density(double x, double beta) {
    if (!(beta > 0.0))
        throw std::domain_error("semicircle law requires beta > 0");
    require_finite(x, "x");
    const double s = 4.0 * beta - x * x;
    if (s <= 0.0) return 0.0;
    return std::sqrt(s) / (two_pi * beta);
}

/// Standard Cauchy density.
inline double cauchy_density(double x) {
    require_finite(x, "x");
    return 1.0 / (pi * (1.0 + x * x));
}

/// One of the limiting spectral laws with density, CDF and quantiles. The
/// Marchenko-Pastur CDF is cached at construction: the arcsine substitution
/// x = (1 + beta) + 2 sqrt(beta) sin(phi) removes the edge singularities,
/// the smooth integrand is accumulated with per-interval Gauss-Legendre over
/// Chebyshev-Lobatto nodes, and evaluation interpolates barycentrically.
class LimitingLaw {
  public:
    enum class Kind { marchenko_pastur, semicircle, cauchy };

    static LimitingLaw marchenko_pastur(double beta) {
        if (!(beta > 0.0 && beta < 1.0))
            throw std::domain_error("Marchenko-Pastur law requires 0 < beta < 1");
        LimitingLaw law(Kind::marchenko_pastur, beta);
        const double sq = std::sqrt(beta);
        law.lo_ = (1.0 - sq) * (1.0 - sq);
        law.hi_ = (1.0 + sq) * (1.0 + sq);
        law.build_mp_cdf();
        return law;
    }

    static LimitingLaw semicircle(double beta) {
        if (!(beta > 0.0))
            throw std::domain_error("semicircle law requires beta > 0");
        LimitingLaw law(Kind::semicircle, beta);
        law.lo_ = -2.0 * std::sqrt(beta);
        law.hi_ = 2.0 * std::sqrt(beta);
        return law;
    }

    static LimitingLaw cauchy() {
        LimitingLaw law(Kind::cauchy, 0.0);
        // Central 99% mass; used as the histogram range since the true
        // support is unbounded.
        law.lo_ = -std::tan(pi * 0.495);
        law.hi_ = std::tan(pi * 0.495);
        return law;
    }

    Kind kind() const { return kind_; }
    double beta() const { return beta_; }

    /// Support of the bounded laws; central 99% mass range for Cauchy.
    double range_lo() const { return lo_; }
    double range_hi() const { return hi_; }

    double density(double x) const {
        switch (kind_) {
            case Kind::marchenko_pastur: return mp_density(x, beta_);
            case Kind::semicircle: return semicircle_density(x, beta_);
            default: return cauchy_density(x);
        }
    }

    double cdf(double x) const {
        require_finite(x, "x");
        switch (kind_) {
            case Kind::marchenko_pastur: {
                if (x <= lo_) return 0.0;
                if (x >= hi_) return 1.0;
                const double m = 1.0 + beta_;
                const double w = 2.0 * std::sqrt(beta_);
                const double phi =
                    std::asin(std::clamp((x - m) / w, -1.0, 1.0));
                return std::clamp(interpolate_cdf(phi), 0.0, 1.0);
            }
            case Kind::semicircle: {
                if (x <= lo_) return 0.0;
                if (x >= hi_) return 1.0;
                const double s = std::sqrt(4.0 * beta_ - x * x);
                return std::clamp(0.5 + x * s / (4.0 * pi * beta_) +
                                      std::asin(x / (2.0 * std::sqrt(beta_))) / pi,
                                  0.0, 1.0);
            }
            default:
                return 0.5 + std::atan(x) / pi;
        }
    }

    /// Inverse CDF for p in (0, 1).
    double quantile(double p) const {
        if (!(p > 0.0 && p < 1.0))
            throw std::invalid_argument("quantile level must lie in (0, 1)");
        if (kind_ == Kind::cauchy) return std::tan(pi * (p - 0.5));
        double lo = lo_, hi = hi_;
        for (int it = 0; it < 200 && hi - lo > 1e-14 * (1.0 + std::abs(lo)); ++it) {
            const double mid = 0.5 * (lo + hi);
            (cdf(mid) < p ? lo : hi) = mid;
        }
        return 0.5 * (lo + hi);
    }

  private:
    LimitingLaw(Kind kind, double beta) : kind_(kind), beta_(beta) {}

    void build_mp_cdf() {
        constexpr int m_nodes = 128;  // Chebyshev-Lobatto intervals
        const double mid = 1.0 + beta_;
        const double half = 2.0 * std::sqrt(beta_);
        const auto integrand = [&](double phi) {
            const double c = std::cos(phi);
            return half * half * c * c / (two_pi * beta_ * (mid + half * std::sin(phi)));
        };
        // 16-point Gauss-Legendre abscissae/weights on [-1, 1].
        static constexpr double gl_x[8] = {
            0.0950125098376374, 0.2816035507792589, 0.4580167776572274,
            0.6178762444026438, 0.7554044083550030, 0.8656312023878318,
            0.9445750230732326, 0.9894009349916499};
        static constexpr double gl_w[8] = {
            0.1894506104550685, 0.1826034150449236, 0.1691565193950025,
            0.1495959888165767, 0.1246289712555339, 0.0951585116824928,
            0.0622535239386479, 0.0271524594117541};
        phi_nodes_.resize(m_nodes + 1);
        cdf_nodes_.resize(m_nodes + 1);
        bary_w_.resize(m_nodes + 1);
        for (int k = 0; k <= m_nodes; ++k) {
            phi_nodes_[k] = -0.5 * pi * std::cos(pi * static_cast<double>(k) / m_nodes);
            bary_w_[k] = (k % 2 == 0 ? 1.0 : -1.0) *
                         ((k == 0 || k == m_nodes) ? 0.5 : 1.0);
        }
        cdf_nodes_[0] = 0.0;
        for (int k = 1; k <= m_nodes; ++k) {
            const double a = phi_nodes_[k - 1], b = phi_nodes_[k];
            const double c = 0.5 * (a + b), h = 0.5 * (b - a);
            double acc = 0.0;
            for (int g = 0; g < 8; ++g)
                acc += gl_w[g] * (integrand(c - h * gl_x[g]) + integrand(c + h * gl_x[g]));
            cdf_nodes_[k] = cdf_nodes_[k - 1] + h * acc;
        }
        // The density integrates to 1 exactly; normalize away quadrature dust
        // so cdf(support top) is exactly 1.
        const double total = cdf_nodes_.back();
        for (double& v : cdf_nodes_) v /= total;
    }

    double interpolate_cdf(double phi) const {
        double num = 0.0, den = 0.0;
        for (std::size_t k = 0; k < phi_nodes_.size(); ++k) {
            const double d = phi - phi_nodes_[k];
            if (d == 0.0) return cdf_nodes_[k];
            const double t = bary_w_[k] / d;
            num += t * cdf_nodes_[k];
            den += t;
        }
        return num / den;
    }

    Kind kind_;
    double beta_;
    double lo_ = 0.0, hi_ = 0.0;
    std::vector<double> phi_nodes_, cdf_nodes_, bary_w_;
};

/// Which half of the complex kernel a spectrum came from.
enum class KernelPart { cosine, sinc };

inline const char* to_string(KernelPart p) {
    return p == KernelPart::cosine ? "cosine" : "sinc";
}

/// One computed spectrum: raw eigenvalues (no shift baked in) plus the shift
/// that the law comparison applied and the sampling regime.
struct SpectrumResult {
    std::vector<double> eigenvalues;
    KernelPart part = KernelPart::sinc;
    double shift_applied = 0.0;
    RegimeDescriptor regime;
};

struct EsdDistance {
    double ks = 0.0;  // Kolmogorov-Smirnov sup distance
    double l1 = 0.0;  // histogram L1 distance, 100 bins over the padded range
};

/// Compare an empirical spectrum against a limiting law. KS evaluates the
/// exact sup over the empirical jumps; L1 uses 100 equal bins over the law's
/// range padded by 10% on each side, with outliers clamped into the edge
/// bins (edge bins absorb the law's outside mass too, keeping both measures
/// normalized).
inline EsdDistance compare_esd(std::span<const double> eigenvalues,
                               const LimitingLaw& law) {
    if (eigenvalues.empty())
        throw std::invalid_argument("eigenvalue list must be non-empty");
    for (double e : eigenvalues) require_finite(e, "eigenvalue");
    std::vector<double> sorted(eigenvalues.begin(), eigenvalues.end());
    std::sort(sorted.begin(), sorted.end());
    const double n = static_cast<double>(sorted.size());

    EsdDistance out;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const double f = law.cdf(sorted[i]);
        const double hi = static_cast<double>(i + 1) / n;
        const double lo = static_cast<double>(i) / n;
        out.ks = std::max({out.ks, std::abs(f - hi), std::abs(f - lo)});
    }

    constexpr int n_bins = 100;
    const double width = law.range_hi() - law.range_lo();
    const double lo_edge = law.range_lo() - 0.1 * width;
    const double hi_edge = law.range_hi() + 0.1 * width;
    const double bin_w = (hi_edge - lo_edge) / n_bins;
    std::array<double, n_bins> emp{};
    for (double e : sorted) {
        int b = static_cast<int>(std::floor((e - lo_edge) / bin_w));
        b = std::clamp(b, 0, n_bins - 1);
        emp[static_cast<std::size_t>(b)] += 1.0 / n;
    }
    double l1 = 0.0;
    for (int b = 0; b < n_bins; ++b) {
        const double edge_lo = lo_edge + b * bin_w;
        const double edge_hi = lo_edge + (b + 1) * bin_w;
        double mass = law.cdf(edge_hi) - law.cdf(edge_lo);
        if (b == 0) mass += law.cdf(edge_lo);
        if (b == n_bins - 1) mass += 1.0 - law.cdf(edge_hi);
        l1 += std::abs(emp[static_cast<std::size_t>(b)] - mass);
    }
    out.l1 = l1;
    return out;
}

}  // namespace swarmbeam
