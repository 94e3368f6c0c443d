// Minimal library tour: build two dual-line swarm layouts, check their
// grating-lobe criterion, and print a coarse steered-pattern profile.

#include <cstdio>

#include <swarmbeam/swarmbeam.hpp>

using namespace swarmbeam;

namespace {

void profile(const char* name, const MultiLinearTopology& topo, double steer_deg) {
    const ArrayLayout layout = expand_topology(topo);
    const double d = topo.subarrays[0].spacing;
    const double x21 = topo.subarrays[1].leading.x;
    const double y21 = topo.subarrays[1].leading.y;
    const C3Report c3 = c3_check(d, x21, y21);

    std::printf("%s: %zu elements, criterion verdict = %s\n", name,
                layout.positions.size(), to_string(c3.verdict));
    const WeightVector w = steering_weights(layout, deg2rad(steer_deg));
    std::printf("  |f| steered to %+.0f deg:\n", steer_deg);
    for (int a = -90; a <= 90; a += 10) {
        const double m = std::abs(response(layout, w, deg2rad(a)));
        const int bars = static_cast<int>(m * 40.0 + 0.5);
        std::printf("  %+4d deg |%-40.*s| %.3f\n", a, bars,
                    "########################################", m);
    }
}

}  // namespace

int main() {
    profile("half-wavelength-safe dual line", dual_linear(0.8, 0.4, 0.3, 12, 12), 25.0);
    profile("boundary equilateral dual line",
            equilateral_dual(std::sqrt(3.0) / 3.0, 12, 12), 25.0);
    return 0;
}
