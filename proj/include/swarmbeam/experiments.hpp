#pragma once

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "swarmbeam/beampattern.hpp"
#include "swarmbeam/common.hpp"
#include "swarmbeam/config.hpp"
#include "swarmbeam/geometry.hpp"
#include "swarmbeam/gratinglobe.hpp"
#include "swarmbeam/io.hpp"
#include "swarmbeam/perturbation.hpp"
#include "swarmbeam/randmatrix.hpp"
#include "swarmbeam/version.hpp"

namespace swarmbeam {

/// A run was refused because it would exceed a resource guard (memory /
/// runtime); rerun with --force to override.
class resource_guard_error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Process exit codes used by the CLI.
inline constexpr int exit_ok = 0;
inline constexpr int exit_failure = 1;       // unexpected error
inline constexpr int exit_config = 2;        // bad config / out-of-regime request
inline constexpr int exit_degenerate = 3;    // degenerate geometry
inline constexpr int exit_guard = 4;         // resource guard tripped

namespace experiments {

// ------------------------------ schema -------------------------------------

using Schema = std::map<std::string, std::set<std::string>>;

/// Allowed [topology] keys given the configured kind (the multilinear kind
/// has indexed keys derived from `subarrays`).
inline std::set<std::string> topology_keys(const Config& cfg) {
    std::set<std::string> keys = {"kind", "units", "lambda_m"};
    const std::string kind = cfg.get_string("topology", "kind", "");
    if (kind == "dual") {
        keys.insert({"d", "x21", "y21", "n1", "n2"});
    } else if (kind == "equilateral") {
        keys.insert({"d", "n1", "n2"});
    } else if (kind == "multilinear") {
        keys.insert("subarrays");
        const long long m = cfg.get_int("topology", "subarrays", 0);
        for (long long i = 1; i <= m; ++i) {
            keys.insert("spacing_" + std::to_string(i));
            keys.insert("count_" + std::to_string(i));
            if (i >= 2) {
                keys.insert("leading_x_" + std::to_string(i));
                keys.insert("leading_y_" + std::to_string(i));
            }
        }
    } else if (kind == "layout-csv") {
        keys.insert("file");
    }
    return keys;
}

inline Schema command_schema(const std::string& command, const Config& cfg) {
    Schema schema;
    if (command == "pattern") {
        schema["topology"] = topology_keys(cfg);
        schema["sweep"] = {"steer_count", "obs_count", "fov_deg", "epsilon", "threads"};
    } else if (command == "grating") {
        schema["topology"] = topology_keys(cfg);
        schema["sweep"] = {"steer_count", "obs_count", "fov_deg", "epsilon", "threads"};
    } else if (command == "perturb") {
        schema["topology"] = topology_keys(cfg);
        schema["sweep"] = {"obs_count", "fov_deg", "threads"};
        schema["perturbation"] = {"sigma_wavelengths", "covariance_file", "trials",
                                  "seed", "theta_s_deg", "n_list"};
    } else if (command == "spectrum") {
        schema["spectrum"] = {"n", "side_m", "lambda_m", "seed",
                              "part", "shift", "threads", "force"};
    } else {
        throw config_error("unknown command '" + command + "'");
    }
    return schema;
}

/// Reject unknown sections/keys so config typos fail loudly instead of
/// silently falling back to defaults.
inline void validate_against_schema(const Config& cfg, const Schema& schema) {
    for (const std::string& section : cfg.section_names()) {
        const auto it = schema.find(section);
        if (it == schema.end())
            throw config_error(cfg.origin() + ": unknown section [" + section + "]");
        for (const auto& [key, value] : cfg.items(section))
            if (!it->second.count(key))
                throw config_error(cfg.origin() + ": unknown key '" + key + "' in [" +
                                   section + "]");
    }
}

// ------------------------------ presets ------------------------------------

/// Built-in experiment configurations, selectable with --preset. A user
/// config layered on top overrides individual keys.
inline Config preset_config(const std::string& name) {
    Config cfg;
    const std::string d_equilateral = fmt_g17(std::sqrt(3.0) / 3.0);
    const auto sweep_defaults = [&cfg] {
        cfg.set("sweep", "steer_count", "181");
        cfg.set("sweep", "obs_count", "721");
        cfg.set("sweep", "fov_deg", "90");
        cfg.set("sweep", "epsilon", "0.01");
    };
    if (name == "fig6") {
        cfg.set("topology", "kind", "dual");
        cfg.set("topology", "d", "0.8");
        cfg.set("topology", "x21", "0.4");
        cfg.set("topology", "y21", "0.32");
        cfg.set("topology", "n1", "50");
        cfg.set("topology", "n2", "49");
        sweep_defaults();
    } else if (name == "fig7") {
        cfg.set("topology", "kind", "equilateral");
        cfg.set("topology", "d", d_equilateral);
        cfg.set("topology", "n1", "50");
        cfg.set("topology", "n2", "49");
        sweep_defaults();
    } else if (name == "fig8") {
        cfg.set("topology", "kind", "equilateral");
        cfg.set("topology", "d", "0.6");
        cfg.set("topology", "n1", "50");
        cfg.set("topology", "n2", "49");
        sweep_defaults();
    } else if (name == "fig9") {
        cfg.set("topology", "kind", "equilateral");
        cfg.set("topology", "d", d_equilateral);
        cfg.set("topology", "n1", "20");
        cfg.set("topology", "n2", "20");
        cfg.set("sweep", "obs_count", "181");
        cfg.set("sweep", "fov_deg", "90");
        cfg.set("perturbation", "sigma_wavelengths", "0.1");
        cfg.set("perturbation", "trials", "500");
        cfg.set("perturbation", "seed", "1");
        cfg.set("perturbation", "theta_s_deg", "0");
        cfg.set("perturbation", "n_list", "40,80,160");
    } else if (name == "fig10") {
        cfg.set("spectrum", "n", "8000");
        cfg.set("spectrum", "side_m", "20");
        cfg.set("spectrum", "lambda_m", "0.3");
        cfg.set("spectrum", "seed", "1");
        cfg.set("spectrum", "part", "both");
        cfg.set("spectrum", "shift", "auto");
    } else if (name == "fig10-desk") {
        cfg.set("spectrum", "n", "2000");
        cfg.set("spectrum", "side_m", "10");
        cfg.set("spectrum", "lambda_m", "0.3");
        cfg.set("spectrum", "seed", "1");
        cfg.set("spectrum", "part", "both");
        cfg.set("spectrum", "shift", "auto");
    } else {
        throw config_error("unknown preset '" + name + "' (available: fig6, fig7, fig8, "
                           "fig9, fig10, fig10-desk)");
    }
    return cfg;
}

struct CliOptions {
    std::optional<std::string> preset;
    std::optional<std::string> config_path;
    std::filesystem::path out_dir = ".";
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
    bool force = false;
};

/// Merge preset < config file < CLI flags into the effective config for one
/// command, validated against that command's schema.
inline Config resolve_input(const std::string& command, const CliOptions& opt) {
    if (!opt.preset && !opt.config_path)
        throw config_error("provide --config <file> and/or --preset <name>");
    Config eff;
    std::string origin = "<cli>";
    if (opt.preset) {
        const Config preset = preset_config(*opt.preset);
        const Schema schema = command_schema(command, preset);
        for (const std::string& section : preset.section_names()) {
            const auto it = schema.find(section);
            if (it == schema.end()) continue;  // preset section for another command
            for (const auto& [key, value] : preset.items(section))
                if (it->second.count(key)) eff.set(section, key, value);
        }
        origin = "<preset:" + *opt.preset + ">";
    }
    if (opt.config_path) {
        const Config file = Config::parse_file(*opt.config_path);
        for (const std::string& section : file.section_names())
            for (const auto& [key, value] : file.items(section))
                eff.set(section, key, value);
        origin = *opt.config_path;
    }
    if (opt.seed) {
        const std::string section = command == "spectrum" ? "spectrum" : "perturbation";
        eff.set(section, "seed", std::to_string(*opt.seed));
    }
    if (opt.threads) {
        const std::string section = command == "spectrum" ? "spectrum" : "sweep";
        eff.set(section, "threads", std::to_string(*opt.threads));
    }
    if (opt.force && command == "spectrum") eff.set("spectrum", "force", "true");
    eff.set_origin(origin);
    validate_against_schema(eff, command_schema(command, eff));
    return eff;
}

// ----------------------------- helpers -------------------------------------

inline nlohmann::json config_provenance(const Config& cfg) {
    nlohmann::json j = nlohmann::json::object();
    for (const std::string& section : cfg.section_names()) {
        nlohmann::json sec = nlohmann::json::object();
        for (const auto& [key, value] : cfg.items(section)) sec[key] = value;
        j[section] = sec;
    }
    return j;
}

inline void write_json_file(const std::filesystem::path& path, const nlohmann::json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << j.dump(2) << '\n';
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

inline unsigned resolve_threads(long long requested) {
    if (requested < 0) throw config_error("thread count must be >= 0");
    if (requested == 0) {
        const unsigned hw = std::thread::hardware_concurrency();
        return hw == 0 ? 1u : hw;
    }
    return static_cast<unsigned>(requested);
}

/// Topology/layout resolved from [topology]; lattice parameters are only
/// available for the dual-line kinds.
struct ResolvedTopology {
    std::string kind;
    ArrayLayout layout;
    std::optional<MultiLinearTopology> topology;
    bool dual = false;
    double d = 0.0, x21 = 0.0, y21 = 0.0;  // wavelength units, dual kinds only
};

inline ResolvedTopology resolve_topology(const Config& cfg) {
    ResolvedTopology out;
    out.kind = cfg.get_string("topology", "kind");
    const std::string units = cfg.get_string("topology", "units", "wavelengths");
    double scale = 1.0;
    if (units == "meters") {
        const double lambda_m = cfg.get_double("topology", "lambda_m");
        if (!(lambda_m > 0.0))
            throw config_error(cfg.origin() +
                               ": [topology] lambda_m must be > 0 for units = meters");
        scale = 1.0 / lambda_m;
    } else if (units != "wavelengths") {
        throw config_error(cfg.origin() +
                           ": [topology] units must be 'wavelengths' or 'meters'");
    }

    const auto checked_count = [&](const char* key) {
        const long long n = cfg.get_int("topology", key);
        if (n < 1 || n > 1000000)
            throw config_error(cfg.origin() + ": [topology] " + key +
                               " must lie in [1, 1000000]");
        return static_cast<int>(n);
    };

    if (out.kind == "dual" || out.kind == "equilateral") {
        const double d = cfg.get_double("topology", "d") * scale;
        const int n1 = checked_count("n1");
        const int n2 = checked_count("n2");
        MultiLinearTopology t;
        if (out.kind == "dual") {
            const double x21 = cfg.get_double("topology", "x21") * scale;
            const double y21 = cfg.get_double("topology", "y21") * scale;
            t = dual_linear(d, x21, y21, n1, n2);
        } else {
            t = equilateral_dual(d, n1, n2);
        }
        out.dual = true;
        out.d = t.subarrays[0].spacing;
        out.x21 = t.subarrays[1].leading.x;
        out.y21 = t.subarrays[1].leading.y;
        out.topology = t;
        out.layout = expand_topology(t);
    } else if (out.kind == "multilinear") {
        const long long m = cfg.get_int("topology", "subarrays");
        if (m < 1 || m > 10000)
            throw config_error(cfg.origin() + ": [topology] subarrays must lie in [1, 10000]");
        MultiLinearTopology t;
        for (long long i = 1; i <= m; ++i) {
            const std::string suffix = "_" + std::to_string(i);
            LinearSubarray sub;
            sub.spacing = cfg.get_double("topology", "spacing" + suffix) * scale;
            const long long count = cfg.get_int("topology", "count" + suffix);
            if (count < 1 || count > 1000000)
                throw config_error(cfg.origin() + ": [topology] count" + suffix +
                                   " must lie in [1, 1000000]");
            sub.count = static_cast<int>(count);
            if (i >= 2) {
                sub.leading.x = cfg.get_double("topology", "leading_x" + suffix) * scale;
                sub.leading.y = cfg.get_double("topology", "leading_y" + suffix) * scale;
            }
            t.subarrays.push_back(sub);
        }
        validate(t);
        out.topology = t;
        out.layout = expand_topology(t);
    } else if (out.kind == "layout-csv") {
        std::filesystem::path file = cfg.get_string("topology", "file");
        if (file.is_relative() && cfg.origin().find('<') != 0) {
            const std::filesystem::path base =
                std::filesystem::path(cfg.origin()).parent_path();
            if (!base.empty()) file = base / file;
        }
        out.layout = read_layout_csv(file);
        if (scale != 1.0)
            for (auto& p : out.layout.positions) {
                p.x *= scale;
                p.y *= scale;
            }
    } else {
        throw config_error(cfg.origin() + ": [topology] kind must be one of dual, "
                           "equilateral, multilinear, layout-csv");
    }
    return out;
}

struct SweepParams {
    std::vector<double> steer_deg, steer_rad;
    std::vector<double> obs_deg, obs_rad;
    double fov_deg = 90.0;
    double epsilon = 0.01;
    unsigned threads = 1;
};

inline SweepParams resolve_sweep(const Config& cfg, bool with_steer) {
    SweepParams sp;
    sp.fov_deg = cfg.get_double("sweep", "fov_deg", 90.0);
    if (!(sp.fov_deg > 0.0 && sp.fov_deg <= 180.0))
        throw config_error(cfg.origin() + ": [sweep] fov_deg must lie in (0, 180]");
    sp.epsilon = cfg.get_double("sweep", "epsilon", 0.01);
    if (!(sp.epsilon > 0.0 && sp.epsilon < 1.0))
        throw config_error(cfg.origin() + ": [sweep] epsilon must lie in (0, 1)");
    sp.threads = resolve_threads(cfg.get_int("sweep", "threads", 1));

    const auto grid_deg = [&](const char* key, long long fallback) {
        const long long count = cfg.get_int("sweep", key, fallback);
        if (count < 3 || count > 1000000)
            throw config_error(cfg.origin() + ": [sweep] " + key +
                               " must lie in [3, 1000000]");
        return uniform_angle_grid(-sp.fov_deg, sp.fov_deg, static_cast<int>(count));
    };
    if (with_steer) {
        sp.steer_deg = grid_deg("steer_count", 181);
        sp.steer_rad.reserve(sp.steer_deg.size());
        for (double a : sp.steer_deg) sp.steer_rad.push_back(deg2rad(a));
    }
    sp.obs_deg = grid_deg("obs_count", 721);
    sp.obs_rad.reserve(sp.obs_deg.size());
    for (double a : sp.obs_deg) sp.obs_rad.push_back(deg2rad(a));
    return sp;
}

inline void warn_duplicates(const ArrayLayout& layout, std::ostream& diag) {
    const auto dups = duplicate_positions(layout);
    if (!dups.empty())
        diag << "warning: " << dups.size()
             << " coincident element pair(s) in the layout; they re-weight the "
                "pattern but are otherwise legal\n";
}

/// Per-element covariance rows: index,xx,xy,yy (wavelength^2 units).
inline std::vector<Covariance2> read_covariance_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open covariance file " + path.string());
    std::string line;
    if (!std::getline(in, line))
        throw config_error(path.string() + ": empty covariance file");
    if (line.ends_with('\r')) line.pop_back();
    if (line != "index,xx,xy,yy")
        throw config_error(path.string() + ": expected header index,xx,xy,yy");
    std::vector<Covariance2> cov;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.ends_with('\r')) line.pop_back();
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string idx, xx, xy, yy;
        if (!std::getline(ss, idx, ',') || !std::getline(ss, xx, ',') ||
            !std::getline(ss, xy, ',') || !std::getline(ss, yy))
            throw config_error(path.string() + ":" + std::to_string(lineno) +
                               ": expected 4 comma-separated fields");
        try {
            cov.push_back({std::stod(xx), std::stod(xy), std::stod(yy)});
        } catch (const std::exception&) {
            throw config_error(path.string() + ":" + std::to_string(lineno) +
                               ": malformed number");
        }
    }
    if (cov.empty())
        throw config_error(path.string() + ": covariance file has no data rows");
    return cov;
}

// ----------------------------- commands ------------------------------------

/// pattern: steered magnitude map plus per-steer lobe summary.
inline void cmd_pattern(const Config& cfg, const std::filesystem::path& out_dir,
                        std::ostream& diag = std::cerr) {
    const ResolvedTopology topo = resolve_topology(cfg);
    const SweepParams sp = resolve_sweep(cfg, /*with_steer=*/true);
    warn_duplicates(topo.layout, diag);
    std::filesystem::create_directories(out_dir);

    SweepOptions opt;
    opt.threads = sp.threads;
    const PatternGrid grid = pattern_sweep(topo.layout, sp.steer_rad, sp.obs_rad, {}, opt);

    CsvWriter csv(out_dir / "pattern.csv");
    csv.row({"steer_deg", "obs_deg", "magnitude"});
    for (std::size_t i = 0; i < sp.steer_deg.size(); ++i)
        for (std::size_t j = 0; j < sp.obs_deg.size(); ++j)
            csv.row({fmt_g17(sp.steer_deg[i]), fmt_g17(sp.obs_deg[j]),
                     fmt_g17(grid.mag(i, j))});
    csv.close();
    write_layout_csv(out_dir / "layout.csv", topo.layout);

    nlohmann::json per_steer = nlohmann::json::array();
    double global_max_sidelobe = 0.0;
    std::size_t total_hits = 0;
    for (std::size_t i = 0; i < sp.steer_deg.size(); ++i) {
        const std::span<const double> row(grid.magnitude.data() + i * sp.obs_deg.size(),
                                          sp.obs_deg.size());
        const detail::RowScan scan =
            detail::scan_magnitude_row(row, sp.obs_rad, sp.steer_rad[i], sp.epsilon);
        global_max_sidelobe = std::max(global_max_sidelobe, scan.max_sidelobe);
        total_hits += scan.hits.size();
        nlohmann::json hits = nlohmann::json::array();
        for (double a : scan.hits) hits.push_back(rad2deg(a));
        per_steer.push_back({
            {"steer_deg", sp.steer_deg[i]},
            {"max_sidelobe", scan.max_sidelobe},
            {"main_lobe_width_deg", sp.obs_deg[scan.main_hi] - sp.obs_deg[scan.main_lo]},
            {"grating_lobe_angles_deg", hits},
        });
    }

    nlohmann::json summary{
        {"command", "pattern"},
        {"version", version_string},
        {"config", config_provenance(cfg)},
        {"elements", topo.layout.positions.size()},
        {"duplicate_position_pairs", duplicate_positions(topo.layout).size()},
        {"epsilon", sp.epsilon},
        {"global", {{"max_sidelobe", global_max_sidelobe}, {"grating_hits", total_hits}}},
        {"per_steer", per_steer},
    };
    write_json_file(out_dir / "pattern_summary.json", summary);
}

/// grating: exact lattice analysis for dual-line kinds, numeric period-pair
/// screening otherwise.
inline void cmd_grating(const Config& cfg, const std::filesystem::path& out_dir,
                        std::ostream& diag = std::cerr) {
    const ResolvedTopology topo = resolve_topology(cfg);
    const SweepParams sp = resolve_sweep(cfg, /*with_steer=*/true);
    warn_duplicates(topo.layout, diag);
    std::filesystem::create_directories(out_dir);
    const double fov_rad = deg2rad(sp.fov_deg);

    nlohmann::json report{
        {"command", "grating"},
        {"version", version_string},
        {"config", config_provenance(cfg)},
        {"kind", topo.kind},
        {"elements", topo.layout.positions.size()},
        {"fov_deg", sp.fov_deg},
    };

    CsvWriter csv(out_dir / "period_angles.csv");
    csv.row({"theta_deg", "theta_image_deg", "p", "q", "theta_in_fov", "image_in_fov"});

    if (topo.dual) {
        const C3Report c3 = c3_check(topo.d, topo.x21, topo.y21);
        const double threshold = c3_y21_threshold(topo.d, topo.x21);
        const std::vector<PeriodPair> pairs =
            period_solutions(topo.d, topo.x21, topo.y21);

        std::size_t in_fov_steerings = 0;
        for (const PeriodPair& pp : pairs) {
            const bool in_t = std::abs(pp.theta) <= fov_rad + 1e-12;
            const bool in_i = std::abs(pp.theta_image) <= fov_rad + 1e-12;
            if (in_t) ++in_fov_steerings;
            csv.row({fmt_g17(rad2deg(pp.theta)), fmt_g17(rad2deg(pp.theta_image)),
                     std::to_string(pp.p), std::to_string(pp.q), in_t ? "1" : "0",
                     in_i ? "1" : "0"});
        }

        nlohmann::json witnesses = nlohmann::json::array();
        for (const C3Witness& w : c3.witnesses)
            witnesses.push_back({{"p", w.p}, {"q", w.q}, {"lhs", w.lhs}});
        nlohmann::json q_ranges = nlohmann::json::array();
        for (const auto& r : c3.bounds.q_ranges)
            q_ranges.push_back({r[0], r[1], r[2]});
        report["analysis"] = "lattice";
        report["d"] = topo.d;
        report["x21"] = topo.x21;
        report["y21"] = topo.y21;
        report["verdict"] = to_string(c3.verdict);
        report["min_lhs"] = c3.min_lhs;
        report["witnesses"] = witnesses;
        report["search_bounds"] = {{"p_max", c3.bounds.p_max}, {"q_ranges", q_ranges}};
        report["y21_threshold"] = std::isfinite(threshold)
                                      ? nlohmann::json(threshold)
                                      : nlohmann::json("infinity");
        report["period_pairs"] = pairs.size();
        report["period_pairs_with_steering_in_fov"] = in_fov_steerings;
    } else {
        // No exact lattice form: screen a (theta, theta') grid for the
        // repetition conditions, then confirm each hit on the actual pattern.
        std::vector<double> spacings;
        if (topo.topology)
            for (const auto& s : topo.topology->subarrays) spacings.push_back(s.spacing);
        const bool rational =
            !spacings.empty() && rational_spacing_precheck(spacings, 1000000);

        std::size_t pairs_found = 0;
        if (topo.topology) {
            const std::vector<double> image_deg =
                uniform_angle_grid(-180.0, 180.0, static_cast<int>(sp.obs_deg.size()));
            for (double t_deg : sp.steer_deg) {
                const double t = deg2rad(t_deg);
                for (double i_deg : image_deg) {
                    const double ti = deg2rad(i_deg);
                    if (!is_period_pair(*topo.topology, t, ti)) continue;
                    const WeightVector w = steering_weights(topo.layout, t);
                    const double mag = std::abs(response(topo.layout, w, ti));
                    ++pairs_found;
                    csv.row({fmt_g17(t_deg), fmt_g17(i_deg), "0", "0",
                             std::abs(t) <= fov_rad + 1e-12 ? "1" : "0",
                             std::abs(ti) <= fov_rad + 1e-12 ? "1" : "0"});
                    if (mag < 1.0 - sp.epsilon)
                        diag << "warning: period pair (" << t_deg << ", " << i_deg
                             << ") deg failed the magnitude confirmation\n";
                }
            }
        }
        report["analysis"] = "grid-screen";
        report["rational_spacing_precheck"] = rational;
        report["period_pairs"] = pairs_found;
        if (!rational)
            diag << "note: spacing ratios are not near-rational; exact repetitions "
                    "cannot occur, grid screening is advisory\n";
    }
    csv.close();
    write_json_file(out_dir / "c3_report.json", report);
}

/// perturb: Monte Carlo position-error experiment against the analytic laws.
inline void cmd_perturb(const Config& cfg, const std::filesystem::path& out_dir,
                        std::ostream& diag = std::cerr) {
    const ResolvedTopology topo = resolve_topology(cfg);
    const SweepParams sp = resolve_sweep(cfg, /*with_steer=*/false);
    std::filesystem::create_directories(out_dir);

    const long long trials = cfg.get_int("perturbation", "trials", 500);
    if (trials < 1 || trials > 100000000)
        throw config_error(cfg.origin() + ": [perturbation] trials must lie in [1, 1e8]");
    const long long seed_raw = cfg.get_int("perturbation", "seed", 1);
    const auto seed = static_cast<std::uint64_t>(seed_raw);
    const double theta_s_deg = cfg.get_double("perturbation", "theta_s_deg", 0.0);
    if (!(std::abs(theta_s_deg) <= sp.fov_deg))
        throw config_error(cfg.origin() +
                           ": [perturbation] theta_s_deg must lie within the field of view");

    const bool has_sigma = cfg.has("perturbation", "sigma_wavelengths");
    const bool has_cov = cfg.has("perturbation", "covariance_file");
    if (has_sigma == has_cov)
        throw config_error(cfg.origin() + ": [perturbation] set exactly one of "
                           "sigma_wavelengths or covariance_file");

    std::vector<long long> n_list;
    if (cfg.has("perturbation", "n_list")) {
        if (!topo.dual)
            throw config_error(cfg.origin() + ": [perturbation] n_list requires a dual or "
                               "equilateral topology to rescale");
        if (has_cov)
            throw config_error(cfg.origin() + ": [perturbation] n_list cannot be combined "
                               "with covariance_file");
        n_list = cfg.get_int_list("perturbation", "n_list");
        for (long long n : n_list)
            if (n < 2 || n > 1000000)
                throw config_error(cfg.origin() +
                                   ": [perturbation] n_list entries must lie in [2, 1e6]");
    }

    struct Run {
        std::string suffix;
        ArrayLayout layout;
    };
    std::vector<Run> runs;
    if (n_list.empty()) {
        runs.push_back({"", topo.layout});
    } else {
        for (long long n : n_list) {
            const int n1 = static_cast<int>(n / 2);
            const int n2 = static_cast<int>(n - n / 2);
            runs.push_back({"_n" + std::to_string(n),
                            expand_topology(dual_linear(topo.d, topo.x21, topo.y21, n1, n2))});
        }
    }

    const double theta_s = deg2rad(theta_s_deg);
    nlohmann::json run_reports = nlohmann::json::array();
    for (std::size_t r = 0; r < runs.size(); ++r) {
        const Run& run = runs[r];
        warn_duplicates(run.layout, diag);
        const std::size_t n_elem = run.layout.positions.size();

        PerturbationModel model = PerturbationModel::isotropic(0.0);
        if (has_sigma) {
            const double sigma = cfg.get_double("perturbation", "sigma_wavelengths");
            if (!(sigma >= 0.0))
                throw config_error(cfg.origin() +
                                   ": [perturbation] sigma_wavelengths must be >= 0");
            model = PerturbationModel::isotropic(sigma);
        } else {
            std::filesystem::path file = cfg.get_string("perturbation", "covariance_file");
            if (file.is_relative() && cfg.origin().find('<') != 0) {
                const std::filesystem::path base =
                    std::filesystem::path(cfg.origin()).parent_path();
                if (!base.empty()) file = base / file;
            }
            std::vector<Covariance2> cov = read_covariance_csv(file);
            if (cov.size() != n_elem)
                throw config_error(cfg.origin() + ": covariance_file has " +
                                   std::to_string(cov.size()) + " rows but the layout has " +
                                   std::to_string(n_elem) + " elements");
            model = PerturbationModel::per_element(std::move(cov));
        }

        const WeightVector w = steering_weights(run.layout, theta_s);
        MonteCarloOptions opt;
        opt.trials = static_cast<long>(trials);
        opt.seed = runs.size() == 1 ? seed : derive_stream(seed, r);
        opt.threads = sp.threads;
        const std::vector<FluctuationStats> stats =
            monte_carlo_stats(run.layout, w, model, sp.obs_rad, theta_s, opt);

        CsvWriter csv(out_dir / ("perturb_stats" + run.suffix + ".csv"));
        csv.row({"theta_deg", "analytic_mean_abs", "analytic_var", "mc_mean_abs",
                 "mc_var", "mean_abs_fluct"});
        for (std::size_t j = 0; j < stats.size(); ++j)
            csv.row({fmt_g17(sp.obs_deg[j]), fmt_g17(std::abs(stats[j].analytic_mean)),
                     fmt_g17(stats[j].analytic_variance), fmt_g17(std::abs(stats[j].mc_mean)),
                     fmt_g17(stats[j].mc_variance), fmt_g17(stats[j].mean_abs_fluctuation)});
        csv.close();

        nlohmann::json entry{
            {"file", "perturb_stats" + run.suffix + ".csv"},
            {"elements", n_elem},
            {"trials", trials},
            {"seed", opt.seed},
        };
        for (const FluctuationStats& st : stats)
            if (st.law == AnalyticLaw::steer_exact) {
                entry["at_steer"] = {
                    {"theta_deg", rad2deg(st.theta)},
                    {"analytic_mean", st.analytic_mean.real()},
                    {"mc_mean_abs", std::abs(st.mc_mean)},
                    {"analytic_var", st.analytic_variance},
                    {"mc_var", st.mc_variance},
                    {"mean_abs_fluct", st.mean_abs_fluctuation},
                };
                break;
            }
        run_reports.push_back(entry);
    }

    nlohmann::json manifest{
        {"command", "perturb"},
        {"version", version_string},
        {"config", config_provenance(cfg)},
        {"theta_s_deg", theta_s_deg},
        {"runs", run_reports},
    };
    write_json_file(out_dir / "manifest.json", manifest);
}

/// spectrum: kernel eigenvalue distributions against the limiting laws.
inline void cmd_spectrum(const Config& cfg, const std::filesystem::path& out_dir,
                         std::ostream& diag = std::cerr) {
    const long long n = cfg.get_int("spectrum", "n");
    if (n < 2 || n > 100000)
        throw config_error(cfg.origin() + ": [spectrum] n must lie in [2, 100000]");
    const double side_m = cfg.get_double("spectrum", "side_m");
    const double lambda_m = cfg.get_double("spectrum", "lambda_m");
    if (!(side_m > 0.0))
        throw config_error(cfg.origin() + ": [spectrum] side_m must be > 0");
    if (!(lambda_m > 0.0))
        throw config_error(cfg.origin() + ": [spectrum] lambda_m must be > 0");
    const auto seed = static_cast<std::uint64_t>(cfg.get_int("spectrum", "seed", 1));
    const std::string part = cfg.get_string("spectrum", "part", "both");
    if (part != "sinc" && part != "cosine" && part != "both")
        throw config_error(cfg.origin() +
                           ": [spectrum] part must be sinc, cosine, or both");
    const std::string shift = cfg.get_string("spectrum", "shift", "auto");
    if (shift != "auto" && shift != "none" && shift != "plus1")
        throw config_error(cfg.origin() +
                           ": [spectrum] shift must be auto, none, or plus1");
    const unsigned threads = resolve_threads(cfg.get_int("spectrum", "threads", 1));
    const bool force = cfg.get_bool("spectrum", "force", false);

    constexpr long long guard_n = 4000;
    if (n > guard_n && !force)
        throw resource_guard_error(
            "spectrum with n = " + std::to_string(n) + " exceeds the " +
            std::to_string(guard_n) +
            "-point memory/runtime guard; pass --force to run anyway");

    std::filesystem::create_directories(out_dir);
    CubeEnsemble ens;
    ens.n = static_cast<int>(n);
    ens.side_m = side_m;
    ens.lambda_m = lambda_m;
    ens.seed = seed;
    const RegimeDescriptor reg = regime(ens);
    if (reg.beta >= 1.0 && part != "cosine")
        throw std::domain_error(
            "beta = " + fmt_g17(reg.beta) +
            " is outside the dilute regime (beta < 1) required for the "
            "sinc-part law; reduce n or enlarge side_m");
    diag << "spectrum: n = " << n << ", beta = " << fmt_g17(reg.beta)
         << ", rho*lambda^3 = " << fmt_g17(reg.rho_lambda3) << "\n";

    const std::vector<Position3D> pts = sample_cube(ens);
    const KernelPair kernels = build_kernels(pts, lambda_m, threads);

    const bool single = part != "both";
    std::vector<KernelPart> parts;
    if (part == "sinc" || part == "both") parts.push_back(KernelPart::sinc);
    if (part == "cosine" || part == "both") parts.push_back(KernelPart::cosine);

    nlohmann::json part_reports = nlohmann::json::array();
    for (KernelPart kp : parts) {
        const Eigen::MatrixXd& mat =
            kp == KernelPart::sinc ? kernels.sinc_part : kernels.cosine_part;
        SpectrumResult res;
        res.part = kp;
        res.regime = reg;
        res.eigenvalues = esd(mat);
        if (shift == "auto")
            res.shift_applied = kp == KernelPart::sinc ? 1.0 : 0.0;
        else
            res.shift_applied = shift == "plus1" ? 1.0 : 0.0;

        const LimitingLaw law = kp == KernelPart::sinc
                                    ? LimitingLaw::marchenko_pastur(reg.beta)
                                    : LimitingLaw::semicircle(reg.beta);
        std::vector<double> shifted = res.eigenvalues;
        for (double& e : shifted) e += res.shift_applied;
        const EsdDistance dist = compare_esd(shifted, law);

        const std::string part_name = to_string(kp);
        CsvWriter eig_csv(out_dir / ("eigs_" + part_name + ".csv"));
        eig_csv.row({"eigenvalue"});
        for (double e : res.eigenvalues) eig_csv.row({fmt_g17(e)});
        eig_csv.close();

        const std::string law_file = single ? "law.csv" : "law_" + part_name + ".csv";
        CsvWriter law_csv(out_dir / law_file);
        law_csv.row({"x", "density"});
        const std::vector<double> xs =
            uniform_angle_grid(law.range_lo(), law.range_hi(), 500);
        for (double x : xs) law_csv.row({fmt_g17(x), fmt_g17(law.density(x))});
        law_csv.close();

        part_reports.push_back({
            {"part", part_name},
            {"law", kp == KernelPart::sinc ? "marchenko-pastur" : "semicircle"},
            {"shift_applied", res.shift_applied},
            {"eigenvalues_file", "eigs_" + part_name + ".csv"},
            {"law_file", law_file},
            {"ks", dist.ks},
            {"l1", dist.l1},
            {"min_eigenvalue", res.eigenvalues.front()},
            {"max_eigenvalue", res.eigenvalues.back()},
        });
    }

    nlohmann::json summary{
        {"command", "spectrum"},
        {"version", version_string},
        {"config", config_provenance(cfg)},
        {"n", n},
        {"side_m", side_m},
        {"lambda_m", lambda_m},
        {"seed", seed},
        {"beta", reg.beta},
        {"rho_lambda3", reg.rho_lambda3},
        {"parts", part_reports},
    };
    write_json_file(out_dir / "spectrum_summary.json", summary);
}

}  // namespace experiments
}  // namespace swarmbeam
