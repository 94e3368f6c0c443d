#pragma once

#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace swarmbeam {

inline constexpr double pi = 3.14159265358979323846;
inline constexpr double two_pi = 2.0 * pi;

constexpr double deg2rad(double deg) { return deg * (pi / 180.0); }
constexpr double rad2deg(double rad) { return rad * (180.0 / pi); }

/// Wrap an angle to (-pi, pi].
inline double wrap_pi(double a) {
    a = std::remainder(a, two_pi);
    if (a <= -pi) a += two_pi;
    return a;
}

/// Geometry that makes the requested analysis undefined (collinear dual
/// lines, coincident sample points). Distinct from plain bad arguments so
/// callers can route users to the applicable fallback.
class degenerate_geometry_error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

inline void require_finite(double v, const char* name) {
    if (!std::isfinite(v))
        throw std::invalid_argument(std::string(name) + " must be finite");
}

/// SplitMix64 mix; used to derive independent RNG streams from one seed.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

/// Stream k of a master seed. Distinct (seed, k) give independent streams,
/// so per-trial work can run in parallel without changing results.
inline std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t k) {
    return splitmix64(splitmix64(seed) ^ (k * 0x9e3779b97f4a7c15ull + 0x632be59bd9b4e019ull));
}

/// Run body(begin, end) over contiguous blocks of [0, count). Each block is
/// disjoint, so output written per-index is identical for any thread count.
inline void parallel_for(std::size_t count, unsigned threads,
                         const std::function<void(std::size_t, std::size_t)>& body) {
    if (count == 0) return;
    if (threads <= 1 || count < 2) {
        body(0, count);
        return;
    }
    const std::size_t nblocks = std::min<std::size_t>(threads, count);
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(nblocks);
    pool.reserve(nblocks);
    for (std::size_t b = 0; b < nblocks; ++b) {
        const std::size_t lo = count * b / nblocks;
        const std::size_t hi = count * (b + 1) / nblocks;
        pool.emplace_back([&, b, lo, hi] {
            try {
                body(lo, hi);
            } catch (...) {
                errors[b] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace swarmbeam
