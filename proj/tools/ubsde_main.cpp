// Command-line front end: scenario runs, verification suites, and preset
// listing. Exit codes: 0 success, 1 internal error or failed verification,
// 2 solver non-convergence, 3 configuration error.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "ubsde/scenario.hpp"
#include "ubsde/verify.hpp"

namespace {

// UBSDE_THREADS wins over --threads, which wins over the config value.
std::size_t resolve_threads(std::size_t fallback) {
    const char* env = std::getenv("UBSDE_THREADS");
    if (!env || *env == '\0') return fallback;
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end == env || *end != '\0') {
        std::cerr << "ignoring malformed UBSDE_THREADS value '" << env
                  << "'\n";
        return fallback;
    }
    return static_cast<std::size_t>(v);
}

ubsde::Scenario resolve_config(const std::string& spec) {
    if (std::filesystem::exists(spec))
        return ubsde::load_scenario_file(spec);
    for (const std::string& name : ubsde::scenario_preset_names())
        if (name == spec) return ubsde::make_scenario_preset(spec);
    throw ubsde::ConfigError("no config file or scenario preset named '" +
                             spec + "'");
}

void print_presets(std::ostream& out) {
    out << "scenario presets:\n";
    for (const std::string& name : ubsde::scenario_preset_names())
        out << "  " << name << "\n";
    const auto join = [](const std::vector<std::string>& names) {
        std::string s;
        for (const std::string& n : names) {
            if (!s.empty()) s += ", ";
            s += n;
        }
        return s;
    };
    out << "driver presets: " << join(ubsde::driver_preset_names()) << "\n";
    out << "terminal presets: " << join(ubsde::terminal_preset_names())
        << "\n";
    out << "verification suites: "
        << join(ubsde::verification_suite_names()) << "\n";
    out << "\nuse `ubsde presets <name>` to print a scenario config\n";
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"simulation library for uncertain backward SDEs"};
    app.require_subcommand(1);

    std::string config_spec;
    std::string out_dir = "out";
    std::uint64_t seed = 0;
    std::size_t threads = 0;
    CLI::App* run = app.add_subcommand(
        "run", "solve a scenario from a config file or preset");
    run->add_option("config", config_spec, "config file path or preset name")
        ->required();
    run->add_option("--out", out_dir,
                    "directory for the manifest and CSV (default: out)");
    run->add_option("--seed", seed, "override ensemble.seed");
    run->add_option("--threads", threads,
                    "worker threads for the level-parallel stages");

    std::string suite;
    bool quick = false;
    CLI::App* verify =
        app.add_subcommand("verify", "run a verification suite");
    verify
        ->add_option("suite", suite,
                     "calculus | representation | contraction | inversion "
                     "| all")
        ->required();
    verify->add_flag("--quick", quick, "smaller ensembles, same checks");

    std::string preset_name;
    CLI::App* presets =
        app.add_subcommand("presets", "list built-in presets");
    presets->add_option("name", preset_name,
                        "print this scenario preset's config text");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 3;
    }

    try {
        if (run->parsed()) {
            ubsde::Scenario scenario = resolve_config(config_spec);
            if (run->count("--seed")) scenario.seed = seed;
            if (run->count("--threads")) scenario.solver.threads = threads;
            scenario.solver.threads =
                resolve_threads(scenario.solver.threads);

            const ubsde::ScenarioResult result =
                ubsde::run_scenario(scenario, out_dir);
            std::cout << result.manifest.dump(2) << "\n";
            if (!result.converged) {
                std::cerr << "solver did not converge within the iteration "
                             "budget (diagnostics written)\n";
                return 2;
            }
            return 0;
        }
        if (verify->parsed())
            return ubsde::run_verification_suite(suite, quick, std::cout)
                       ? 0
                       : 1;
        if (presets->parsed()) {
            if (!preset_name.empty())
                std::cout << ubsde::scenario_preset_text(preset_name);
            else
                print_presets(std::cout);
            return 0;
        }
    } catch (const ubsde::ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 3;
    } catch (const ubsde::NumericalFailure& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
