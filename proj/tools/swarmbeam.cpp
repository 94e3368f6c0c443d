// Command-line front end: pattern | grating | perturb | spectrum.
//
// Exit codes: 0 success, 2 config error (including CLI misuse and
// out-of-regime requests), 3 degenerate geometry, 4 resource guard refusal,
// 1 anything unexpected.

#include <CLI11.hpp>

#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <swarmbeam/experiments.hpp>
#include <swarmbeam/version.hpp>

namespace {

namespace se = swarmbeam::experiments;

int run_command(const std::string& command, const se::CliOptions& opt) {
    try {
        const swarmbeam::Config cfg = se::resolve_input(command, opt);
        if (command == "pattern")
            se::cmd_pattern(cfg, opt.out_dir);
        else if (command == "grating")
            se::cmd_grating(cfg, opt.out_dir);
        else if (command == "perturb")
            se::cmd_perturb(cfg, opt.out_dir);
        else
            se::cmd_spectrum(cfg, opt.out_dir);
        return swarmbeam::exit_ok;
    } catch (const swarmbeam::config_error& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return swarmbeam::exit_config;
    } catch (const swarmbeam::resource_guard_error& e) {
        std::cerr << "refused: " << e.what() << '\n';
        return swarmbeam::exit_guard;
    } catch (const swarmbeam::degenerate_geometry_error& e) {
        std::cerr << "degenerate geometry: " << e.what() << '\n';
        return swarmbeam::exit_degenerate;
    } catch (const std::domain_error& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return swarmbeam::exit_config;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return swarmbeam::exit_config;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return swarmbeam::exit_failure;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"swarmbeam: beam patterns, grating-lobe analysis, perturbation "
                 "statistics and kernel spectra for swarm antenna arrays"};
    app.set_version_flag("--version", swarmbeam::version_string);
    app.require_subcommand(1);

    se::CliOptions opt;
    const auto add_common = [&opt](CLI::App* sub) {
        sub->add_option("--config", opt.config_path, "INI experiment config file");
        sub->add_option("--preset", opt.preset,
                        "built-in configuration (fig6, fig7, fig8, fig9, fig10, "
                        "fig10-desk); --config keys override it");
        sub->add_option("--out", opt.out_dir, "output directory (default: .)");
        sub->add_option("--seed", opt.seed, "override the RNG seed");
        sub->add_option("--threads", opt.threads, "worker threads (0 = all cores)");
        sub->add_flag("--force", opt.force, "override resource guards");
    };
    add_common(app.add_subcommand("pattern", "steered beam-pattern magnitude map"));
    add_common(app.add_subcommand("grating", "grating-lobe existence analysis"));
    add_common(app.add_subcommand("perturb", "Monte Carlo position-error statistics"));
    add_common(app.add_subcommand("spectrum", "interaction-kernel eigenvalue spectra"));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? swarmbeam::exit_ok : swarmbeam::exit_config;
    }
    return run_command(app.get_subcommands().front()->get_name(), opt);
}
