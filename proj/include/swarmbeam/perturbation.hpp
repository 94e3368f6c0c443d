#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "swarmbeam/beampattern.hpp"
#include "swarmbeam/common.hpp"
#include "swarmbeam/geometry.hpp"

namespace swarmbeam {

// ---------------------------------------------------------------------------
// Gaussian position-error model. Element n moves by (dx_n, dy_n) ~
// N(0, Sigma_n), independent across elements; lengths are in wavelengths.
// With steered weights the perturbed response f~ obeys closed-form laws:
//   E[f~(theta_s)]   = sum |w_n| exp(-2 pi^2 u' Sigma_n u) / sum |w_n|
//   Var[f~(theta_s)] = sum |w_n|^2 (1 - exp(-4 pi^2 u' Sigma_n u)) / (sum |w_n|)^2
// with u = (sin theta_s, cos theta_s), plus a first-order (in the
// displacement) fluctuation law valid at every look angle:
//   Var[df(theta)]   = (2 pi)^2 sum |w_n|^2 u' Sigma_n u / (sum |w_n|)^2.
// ---------------------------------------------------------------------------

/// 2x2 covariance of one element's position error, wavelength^2 units.
struct Covariance2 {
    double xx = 0.0;
    double xy = 0.0;
    double yy = 0.0;
};

/// Either one isotropic sigma shared by all elements or an explicit
/// per-element covariance list.
class PerturbationModel {
  public:
    static PerturbationModel isotropic(double sigma) {
        require_finite(sigma, "sigma");
        if (!(sigma >= 0.0)) throw std::invalid_argument("sigma must be >= 0");
        PerturbationModel m;
        m.isotropic_ = true;
        m.sigma_ = sigma;
        return m;
    }

    static PerturbationModel per_element(std::vector<Covariance2> cov) {
        if (cov.empty())
            throw std::invalid_argument("covariance list must be non-empty");
        PerturbationModel m;
        m.isotropic_ = false;
        m.chol_.reserve(cov.size());
        for (const auto& c : cov) m.chol_.push_back(factor(c));
        m.cov_ = std::move(cov);
        return m;
    }

    bool is_isotropic() const { return isotropic_; }

    double sigma() const {
        if (!isotropic_)
            throw std::logic_error("sigma() is defined only for isotropic models");
        return sigma_;
    }

    /// 0 for isotropic models (which fit any element count).
    std::size_t element_count() const { return isotropic_ ? 0 : cov_.size(); }

    Covariance2 covariance(std::size_t n) const {
        if (isotropic_) return {sigma_ * sigma_, 0.0, sigma_ * sigma_};
        return cov_.at(n);
    }

    /// Lower-triangular factor (l11, l21, l22) with Sigma = L L'.
    std::array<double, 3> cholesky(std::size_t n) const {
        if (isotropic_) return {sigma_, 0.0, sigma_};
        return chol_.at(n);
    }

    void require_compatible(std::size_t n_elements) const {
        if (!isotropic_ && cov_.size() != n_elements)
            throw std::invalid_argument(
                "covariance list length must match element count");
    }

  private:
    static std::array<double, 3> factor(const Covariance2& c) {
        require_finite(c.xx, "covariance xx");
        require_finite(c.xy, "covariance xy");
        require_finite(c.yy, "covariance yy");
        const double det = c.xx * c.yy - c.xy * c.xy;
        const double scale = std::max({1.0, c.xx * c.yy, c.xy * c.xy});
        if (c.xx < 0.0 || c.yy < 0.0 || det < -1e-12 * scale)
            throw std::invalid_argument("covariance matrix must be PSD");
        const double l11 = std::sqrt(std::max(0.0, c.xx));
        if (l11 == 0.0 && c.xy != 0.0)
            throw std::invalid_argument("covariance matrix must be PSD");
        const double l21 = l11 > 0.0 ? c.xy / l11 : 0.0;
        const double l22 = std::sqrt(std::max(0.0, c.yy - l21 * l21));
        return {l11, l21, l22};
    }

    bool isotropic_ = true;
    double sigma_ = 0.0;
    std::vector<Covariance2> cov_;
    std::vector<std::array<double, 3>> chol_;
};

/// One joint draw of all element displacements.
struct PerturbationSample {
    struct Delta2 {
        double dx = 0.0;
        double dy = 0.0;
    };
    std::vector<Delta2> deltas;
};

/// Draw displacements for n_elements elements. The same (model, n, seed)
/// always reproduces the same sample; independent trials should pass
/// derive_stream(master_seed, trial_index).
inline PerturbationSample sample_perturbation(const PerturbationModel& model,
                                              std::size_t n_elements,
                                              std::uint64_t seed) {
    if (n_elements == 0)
        throw std::invalid_argument("element count must be >= 1");
    model.require_compatible(n_elements);
    std::mt19937_64 eng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    PerturbationSample sample;
    sample.deltas.resize(n_elements);
    for (std::size_t n = 0; n < n_elements; ++n) {
        const std::array<double, 3> l = model.cholesky(n);
        const double g1 = gauss(eng);
        const double g2 = gauss(eng);
        sample.deltas[n].dx = l[0] * g1;
        sample.deltas[n].dy = l[1] * g1 + l[2] * g2;
    }
    return sample;
}

namespace detail {

inline std::complex<double> perturbed_kernel(const ArrayLayout& layout,
                                             const WeightVector& w,
                                             const PerturbationSample& sample,
                                             double s, double c) {
    std::complex<double> acc{0.0, 0.0};
    double norm = 0.0;
    for (std::size_t n = 0; n < layout.positions.size(); ++n) {
        const double x = layout.positions[n].x + sample.deltas[n].dx;
        const double y = layout.positions[n].y + sample.deltas[n].dy;
        const double phase = two_pi * (x * s + y * c);
        acc += w.weights[n] * std::complex<double>(std::cos(phase), std::sin(phase));
        norm += std::abs(w.weights[n]);
    }
    return acc / norm;
}

/// u' Sigma u for u = (s, c).
inline double quad_form(const Covariance2& cov, double s, double c) {
    return s * s * cov.xx + 2.0 * s * c * cov.xy + c * c * cov.yy;
}

inline void check_magnitudes(std::span<const double> magnitudes) {
    if (magnitudes.empty())
        throw std::invalid_argument("magnitude list must be non-empty");
    for (double m : magnitudes) {
        require_finite(m, "weight magnitude");
        if (!(m > 0.0))
            throw std::invalid_argument("weight magnitudes must be > 0");
    }
}

}  // namespace detail

/// Response of the array after applying a displacement sample.
inline std::complex<double> perturbed_response(const ArrayLayout& layout,
                                               const WeightVector& w,
                                               const PerturbationSample& sample,
                                               double theta) {
    validate(layout);
    validate(w, layout.positions.size());
    require_finite(theta, "observation angle");
    if (sample.deltas.size() != layout.positions.size())
        throw std::invalid_argument("sample length must match element count");
    return detail::perturbed_kernel(layout, w, sample, std::sin(theta), std::cos(theta));
}

/// E[f~(theta_s)] under steered weights (a real number: per-element phases
/// cancel at the steering angle).
inline double analytic_mean_steer(const PerturbationModel& model,
                                  std::span<const double> magnitudes, double theta_s) {
    detail::check_magnitudes(magnitudes);
    require_finite(theta_s, "steering angle");
    model.require_compatible(magnitudes.size());
    const double s = std::sin(theta_s), c = std::cos(theta_s);
    double num = 0.0, den = 0.0;
    for (std::size_t n = 0; n < magnitudes.size(); ++n) {
        const double q = detail::quad_form(model.covariance(n), s, c);
        num += magnitudes[n] * std::exp(-2.0 * pi * pi * q);
        den += magnitudes[n];
    }
    return num / den;
}

/// Var[f~(theta_s)] under steered weights (complex variance E|X|^2 - |EX|^2).
inline double analytic_var_steer(const PerturbationModel& model,
                                 std::span<const double> magnitudes, double theta_s) {
    detail::check_magnitudes(magnitudes);
    require_finite(theta_s, "steering angle");
    model.require_compatible(magnitudes.size());
    const double s = std::sin(theta_s), c = std::cos(theta_s);
    double num = 0.0, den = 0.0;
    for (std::size_t n = 0; n < magnitudes.size(); ++n) {
        const double q = detail::quad_form(model.covariance(n), s, c);
        num += magnitudes[n] * magnitudes[n] * (1.0 - std::exp(-4.0 * pi * pi * q));
        den += magnitudes[n];
    }
    return num / (den * den);
}

/// First-order response fluctuation for one displacement sample:
///   df = (j 2 pi / sum |w|) sum w_n exp(j phi_n) (dx_n sin + dy_n cos).
inline std::complex<double> linearized_fluctuation(const ArrayLayout& layout,
                                                   const WeightVector& w,
                                                   const PerturbationSample& sample,
                                                   double theta) {
    validate(layout);
    validate(w, layout.positions.size());
    require_finite(theta, "observation angle");
    if (sample.deltas.size() != layout.positions.size())
        throw std::invalid_argument("sample length must match element count");
    const double s = std::sin(theta), c = std::cos(theta);
    std::complex<double> acc{0.0, 0.0};
    double norm = 0.0;
    for (std::size_t n = 0; n < layout.positions.size(); ++n) {
        const double phase =
            two_pi * (layout.positions[n].x * s + layout.positions[n].y * c);
        const double proj = sample.deltas[n].dx * s + sample.deltas[n].dy * c;
        acc += w.weights[n] * std::complex<double>(std::cos(phase), std::sin(phase)) * proj;
        norm += std::abs(w.weights[n]);
    }
    return std::complex<double>(0.0, two_pi) * acc / norm;
}

/// Variance of the first-order fluctuation at look angle theta.
inline double fluctuation_variance(const PerturbationModel& model,
                                   std::span<const double> magnitudes, double theta) {
    detail::check_magnitudes(magnitudes);
    require_finite(theta, "observation angle");
    model.require_compatible(magnitudes.size());
    const double s = std::sin(theta), c = std::cos(theta);
    double num = 0.0, den = 0.0;
    for (std::size_t n = 0; n < magnitudes.size(); ++n) {
        num += magnitudes[n] * magnitudes[n] *
               detail::quad_form(model.covariance(n), s, c);
        den += magnitudes[n];
    }
    return two_pi * two_pi * num / (den * den);
}

/// Concentration bound for isotropic sigma and unit weights:
///   P(|df| >= t) <= min(1, 2 exp(-t^2 n / (2 (2 pi)^2 sigma^2))).
inline double tail_bound(double t, std::size_t n, double sigma) {
    require_finite(t, "threshold t");
    require_finite(sigma, "sigma");
    if (!(t > 0.0)) throw std::invalid_argument("threshold t must be > 0");
    if (n == 0) throw std::invalid_argument("element count must be >= 1");
    if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be > 0");
    const double denom = 2.0 * two_pi * two_pi * sigma * sigma;
    return std::min(1.0, 2.0 * std::exp(-t * t * static_cast<double>(n) / denom));
}

/// Which analytic law filled the analytic fields of FluctuationStats.
enum class AnalyticLaw { steer_exact, linearized };

/// Per-angle summary of a Monte Carlo perturbation experiment next to the
/// matching analytic prediction.
struct FluctuationStats {
    double theta = 0.0;
    AnalyticLaw law = AnalyticLaw::linearized;
    std::complex<double> analytic_mean{0.0, 0.0};
    double analytic_variance = 0.0;
    std::complex<double> mc_mean{0.0, 0.0};
    double mc_variance = 0.0;            // E|f~|^2 - |E f~|^2 over trials
    double mean_abs_fluctuation = 0.0;   // E |f~ - f| over trials
    long trials = 0;
};

struct MonteCarloOptions {
    long trials = 500;
    std::uint64_t seed = 1;
    unsigned threads = 1;
};

/// Run `trials` independent displacement draws and summarize the perturbed
/// response on theta_grid. Weights must be steered to theta_s; at theta_s
/// the analytic columns carry the exact steered-response laws, elsewhere the
/// first-order fluctuation law. Trials are accumulated in fixed-size blocks
/// combined in order, so results do not depend on the thread count.
inline std::vector<FluctuationStats> monte_carlo_stats(
    const ArrayLayout& layout, const WeightVector& w, const PerturbationModel& model,
    std::span<const double> theta_grid, double theta_s,
    const MonteCarloOptions& opt = {}) {
    validate(layout);
    const std::size_t n_elem = layout.positions.size();
    validate(w, n_elem);
    validate_grid(theta_grid, "observation");
    require_finite(theta_s, "steering angle");
    model.require_compatible(n_elem);
    if (opt.trials < 1) throw std::invalid_argument("trial count must be >= 1");
    if (std::abs(response(layout, w, theta_s) - std::complex<double>(1.0, 0.0)) > 1e-9)
        throw std::invalid_argument("weights must be steered to theta_s");

    const std::size_t n_theta = theta_grid.size();
    std::vector<double> sin_t(n_theta), cos_t(n_theta);
    std::vector<std::complex<double>> f0(n_theta);
    for (std::size_t j = 0; j < n_theta; ++j) {
        sin_t[j] = std::sin(theta_grid[j]);
        cos_t[j] = std::cos(theta_grid[j]);
        f0[j] = detail::response_kernel(layout, w, sin_t[j], cos_t[j]);
    }

    // Fixed-size trial blocks keep the reduction order independent of the
    // thread count.
    constexpr long block_size = 1024;
    const std::size_t n_blocks =
        static_cast<std::size_t>((opt.trials + block_size - 1) / block_size);
    struct Block {
        std::vector<std::complex<double>> sum_f;
        std::vector<double> sum_abs2;
        std::vector<double> sum_dev;
    };
    std::vector<Block> blocks(n_blocks);

    parallel_for(n_blocks, opt.threads, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t b = lo; b < hi; ++b) {
            Block& blk = blocks[b];
            blk.sum_f.assign(n_theta, {0.0, 0.0});
            blk.sum_abs2.assign(n_theta, 0.0);
            blk.sum_dev.assign(n_theta, 0.0);
            const long t_lo = static_cast<long>(b) * block_size;
            const long t_hi = std::min(opt.trials, t_lo + block_size);
            for (long t = t_lo; t < t_hi; ++t) {
                const PerturbationSample sample = sample_perturbation(
                    model, n_elem, derive_stream(opt.seed, static_cast<std::uint64_t>(t)));
                for (std::size_t j = 0; j < n_theta; ++j) {
                    const std::complex<double> f =
                        detail::perturbed_kernel(layout, w, sample, sin_t[j], cos_t[j]);
                    blk.sum_f[j] += f;
                    blk.sum_abs2[j] += std::norm(f);
                    blk.sum_dev[j] += std::abs(f - f0[j]);
                }
            }
        }
    });

    std::vector<double> magnitudes(n_elem);
    for (std::size_t n = 0; n < n_elem; ++n) magnitudes[n] = std::abs(w.weights[n]);

    std::vector<FluctuationStats> stats(n_theta);
    const double inv_t = 1.0 / static_cast<double>(opt.trials);
    for (std::size_t j = 0; j < n_theta; ++j) {
        std::complex<double> sum_f{0.0, 0.0};
        double sum_abs2 = 0.0, sum_dev = 0.0;
        for (const Block& blk : blocks) {
            sum_f += blk.sum_f[j];
            sum_abs2 += blk.sum_abs2[j];
            sum_dev += blk.sum_dev[j];
        }
        FluctuationStats& st = stats[j];
        st.theta = theta_grid[j];
        st.trials = opt.trials;
        st.mc_mean = sum_f * inv_t;
        st.mc_variance = std::max(0.0, sum_abs2 * inv_t - std::norm(st.mc_mean));
        st.mean_abs_fluctuation = sum_dev * inv_t;
        if (std::abs(theta_grid[j] - theta_s) <= 1e-12) {
            st.law = AnalyticLaw::steer_exact;
            st.analytic_mean = analytic_mean_steer(model, magnitudes, theta_s);
            st.analytic_variance = analytic_var_steer(model, magnitudes, theta_s);
        } else {
            st.law = AnalyticLaw::linearized;
            st.analytic_mean = f0[j];
            st.analytic_variance = fluctuation_variance(model, magnitudes, theta_grid[j]);
        }
    }
    return stats;
}

}  // namespace swarmbeam
