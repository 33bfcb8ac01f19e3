#pragma once
// Scenario plumbing for the CLI: flat dotted-key configs, built-in presets,
// and the runner that writes the result manifest and the contraction CSV.

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "ubsde/drivers.hpp"
#include "ubsde/solver.hpp"

namespace ubsde {

// A fully resolved experiment. Parsing fills the driver and terminal
// condition from presets or inline expressions; everything here is scalar
// (p = m = d = 1).
struct Scenario {
    std::string name = "scenario";
    EquationForm form = EquationForm::simple;
    Driver driver;
    TerminalCondition terminal;
    double horizon = 1.0;         // grid.T
    std::size_t steps = 16;       // grid.N
    std::size_t levels = 9;       // ensemble.levels
    std::size_t paths = 200;      // ensemble.paths
    std::uint64_t seed = 0;       // ensemble.seed
    SolverConfig solver;          // basis, iteration budget, threads
};

// Parses the `key = value` format: one pair per line, '#' starts a comment,
// blank lines are skipped. Unknown keys raise ConfigError listing every
// offender; invalid values raise ConfigError naming their key. When
// basis.kind is absent it defaults to brownian features for the simple and
// y_driver forms and state features otherwise.
Scenario parse_scenario(const std::string& text);
Scenario load_scenario_file(const std::string& path);

// Built-in scenarios. The text form doubles as a config example and is what
// `ubsde presets` prints.
Scenario make_scenario_preset(const std::string& name);
std::string scenario_preset_text(const std::string& name);
std::vector<std::string> scenario_preset_names();

struct ScenarioResult {
    bool converged = false;
    SolutionPair solution; // empty fields when the solve did not finish
    ContractionReport report;
    nlohmann::ordered_json manifest;
};

// Runs the scenario and, when out_dir is non-empty, writes
// <out_dir>/<name>.manifest.json and <out_dir>/<name>.contraction.csv.
// Solver non-convergence is reported through `converged` rather than thrown
// (the artifacts are still written, with null solution statistics);
// configuration problems throw ConfigError. The manifest fields other than
// runtime_ms are deterministic for a fixed config and seed.
ScenarioResult run_scenario(const Scenario& scenario,
                            const std::string& out_dir);

} // namespace ubsde
