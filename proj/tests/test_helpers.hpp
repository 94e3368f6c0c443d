#pragma once

// Shared utilities for the unit tests: deterministic random generators and
// scratch directories.

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <swarmbeam/geometry.hpp>

namespace testutil {

inline std::mt19937_64 rng(std::uint64_t seed) { return std::mt19937_64(seed); }

inline double uniform(std::mt19937_64& g, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(g);
}

inline int uniform_int(std::mt19937_64& g, int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(g);
}

inline swarmbeam::ArrayLayout random_layout(std::mt19937_64& g, int max_elements = 200,
                                            double extent = 10.0) {
    const int n = uniform_int(g, 1, max_elements);
    swarmbeam::ArrayLayout layout;
    layout.positions.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        layout.positions.push_back({uniform(g, -extent, extent), uniform(g, -extent, extent)});
    return layout;
}

inline swarmbeam::MultiLinearTopology random_topology(std::mt19937_64& g,
                                                      int max_subarrays = 4,
                                                      int max_count = 12) {
    swarmbeam::MultiLinearTopology t;
    const int m = uniform_int(g, 1, max_subarrays);
    for (int i = 0; i < m; ++i) {
        swarmbeam::LinearSubarray s;
        s.spacing = uniform(g, 0.2, 1.5);
        s.count = uniform_int(g, 1, max_count);
        if (i > 0) s.leading = {uniform(g, -3.0, 3.0), uniform(g, -3.0, 3.0)};
        t.subarrays.push_back(s);
    }
    return t;
}

/// Fresh scratch directory under the system temp root; never reused across
/// test cases within one process.
inline std::filesystem::path scratch_dir(const std::string& tag) {
    static int counter = 0;
    const auto dir = std::filesystem::temp_directory_path() /
                     ("swarmbeam_test_" + tag + "_" + std::to_string(counter++));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace testutil
