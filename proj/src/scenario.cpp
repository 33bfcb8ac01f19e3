#include "ubsde/scenario.hpp"

#include <cctype>
#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

#include "ubsde/expectation.hpp"

namespace ubsde {

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::map<std::string, std::string> tokenize(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) +
                              " is not of the form key = value: '" + line +
                              "'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw ConfigError("config line " + std::to_string(lineno) +
                              " has an empty key");
        if (value.empty())
            throw ConfigError("config key '" + key + "' has an empty value");
        if (!kv.emplace(key, value).second)
            throw ConfigError("duplicate config key '" + key + "'");
    }
    return kv;
}

// Consume-as-you-go view over the parsed pairs; whatever is left at the end
// is by definition unknown.
class KeySet {
public:
    explicit KeySet(std::map<std::string, std::string> kv)
        : kv_(std::move(kv)) {}

    std::optional<std::string> take(const std::string& key) {
        const auto it = kv_.find(key);
        if (it == kv_.end()) return std::nullopt;
        std::string value = it->second;
        kv_.erase(it);
        return value;
    }

    void finish() const {
        if (kv_.empty()) return;
        std::string list;
        for (const auto& [key, value] : kv_) {
            if (!list.empty()) list += ", ";
            list += key;
        }
        throw ConfigError("unknown configuration key(s): " + list);
    }

private:
    std::map<std::string, std::string> kv_;
};

double to_double(const std::string& key, const std::string& text) {
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(text.c_str(), &end);
    if (text.empty() || end != text.c_str() + text.size() ||
        errno == ERANGE || !std::isfinite(v))
        throw ConfigError("invalid number for " + key + ": '" + text + "'");
    return v;
}

std::uint64_t to_u64(const std::string& key, const std::string& text) {
    if (text.empty() ||
        !std::isdigit(static_cast<unsigned char>(text.front())))
        throw ConfigError("invalid nonnegative integer for " + key + ": '" +
                          text + "'");
    errno = 0;
    char* end = nullptr;
    const unsigned long long v = std::strtoull(text.c_str(), &end, 10);
    if (end != text.c_str() + text.size() || errno == ERANGE)
        throw ConfigError("invalid nonnegative integer for " + key + ": '" +
                          text + "'");
    return v;
}

std::size_t to_size(const std::string& key, const std::string& text) {
    return static_cast<std::size_t>(to_u64(key, text));
}

bool to_bool(const std::string& key, const std::string& text) {
    if (text == "true") return true;
    if (text == "false") return false;
    throw ConfigError("invalid boolean for " + key + ": '" + text +
                      "' (use true or false)");
}

Driver resolve_driver(KeySet& keys, EquationForm form) {
    const auto preset = keys.take("driver.preset");

    std::map<std::string, double> params;
    for (const char* name : {"a", "b", "c", "hx", "k"}) {
        const std::string key = std::string("driver.") + name;
        if (const auto v = keys.take(key)) {
            if (!preset)
                throw ConfigError(key +
                                  " is a preset parameter and needs "
                                  "driver.preset");
            params[name] = to_double(key, *v);
        }
    }

    const auto f_text = keys.take("driver.f");
    const auto g_text = keys.take("driver.g");
    const auto h_text = keys.take("driver.h");
    const auto c_text = keys.take("driver.lipschitz_c");
    const auto alpha_text = keys.take("driver.monotone_alpha");
    const auto additive_text = keys.take("driver.additive");

    if (preset) {
        if (f_text || g_text || h_text || c_text || alpha_text ||
            additive_text)
            throw ConfigError(
                "driver.preset cannot be combined with inline driver keys "
                "(driver.f/g/h/lipschitz_c/monotone_alpha/additive)");
        return make_driver_preset(*preset, params);
    }
    if (!f_text && !g_text && !h_text)
        throw ConfigError("a driver is required: set driver.preset or at "
                          "least one of driver.f, driver.g, driver.h");

    const bool additive =
        additive_text ? to_bool("driver.additive", *additive_text) : true;
    double c = 0.0;
    if (c_text) {
        c = to_double("driver.lipschitz_c", *c_text);
        if (c < 0.0)
            throw ConfigError("driver.lipschitz_c must be nonnegative");
    } else if (form != EquationForm::simple) {
        throw ConfigError("driver.lipschitz_c is required for inline "
                          "drivers outside the simple form");
    }
    double alpha = additive ? 1.0 : 0.0;
    if (alpha_text) {
        alpha = to_double("driver.monotone_alpha", *alpha_text);
    } else if (!additive && form == EquationForm::general) {
        throw ConfigError("driver.monotone_alpha is required for "
                          "non-additive drivers in the general form");
    }
    return make_driver_expr(f_text.value_or("0"), g_text.value_or("0"),
                            h_text.value_or("y"), c, alpha, additive);
}

TerminalCondition resolve_terminal(KeySet& keys) {
    const auto preset = keys.take("terminal.preset");
    const auto value = keys.take("terminal.value");
    const auto expr = keys.take("terminal.expr");
    if (preset && expr)
        throw ConfigError(
            "terminal.preset and terminal.expr are mutually exclusive");
    if (value && (!preset || *preset != "constant"))
        throw ConfigError(
            "terminal.value only applies to terminal.preset = constant");
    if (expr) return make_terminal_expr(*expr);
    if (!preset)
        throw ConfigError("a terminal condition is required: set "
                          "terminal.preset or terminal.expr");
    return make_terminal_preset(
        *preset, value ? to_double("terminal.value", *value) : 0.0);
}

struct PresetEntry {
    const char* name;
    const char* text;
};

constexpr PresetEntry kScenarioPresets[] = {
    {"trivial_constant",
     "# Exogenous sanity run: constant terminal value, zero driver.\n"
     "scenario.name = trivial_constant\n"
     "scenario.form = simple\n"
     "driver.preset = zero\n"
     "terminal.preset = constant\n"
     "terminal.value = 5\n"
     "grid.T = 1\n"
     "grid.N = 16\n"
     "ensemble.levels = 9\n"
     "ensemble.paths = 200\n"
     "ensemble.seed = 42\n"},
    {"sin_y_contraction",
     "# Geometric Picard decay with a sine driver in y.\n"
     "scenario.name = sin_y_contraction\n"
     "scenario.form = y_driver\n"
     "driver.preset = sin_y\n"
     "terminal.preset = brownian_T_squared\n"
     "grid.T = 1\n"
     "grid.N = 32\n"
     "ensemble.levels = 21\n"
     "ensemble.paths = 2000\n"
     "ensemble.seed = 7\n"
     "basis.kind = brownian\n"
     "basis.degree = 2\n"
     "solver.max_iterations = 25\n"},
    {"xy_mixed",
     "# Superlinear decay of the outer x iteration on a mixed driver.\n"
     "scenario.name = xy_mixed\n"
     "scenario.form = xy_driver\n"
     "driver.preset = xy_mixed\n"
     "terminal.preset = brownian_T\n"
     "grid.T = 2\n"
     "grid.N = 40\n"
     "ensemble.levels = 21\n"
     "ensemble.paths = 2000\n"
     "ensemble.seed = 7\n"
     "basis.kind = brownian\n"
     "basis.degree = 2\n"},
    {"scale_h",
     "# Bi-Lipschitz integrand h = 2y recovered by inversion.\n"
     "scenario.name = scale_h\n"
     "scenario.form = general\n"
     "driver.preset = scale_h\n"
     "driver.k = 2\n"
     "terminal.preset = brownian_T\n"
     "grid.T = 1\n"
     "grid.N = 50\n"
     "ensemble.levels = 1\n"
     "ensemble.paths = 10000\n"
     "ensemble.seed = 1\n"
     "basis.kind = brownian\n"
     "basis.degree = 1\n"},
};

// Deterministic coefficient paths for the simple form: the driver functions
// evaluated along x = 0, y = 0, broadcast over the ensemble.
ExogenousProcesses exogenous_from_driver(const Driver& driver,
                                         const PathBundle& bundle) {
    const std::size_t levels = bundle.alpha.size();
    const std::size_t paths = bundle.num_paths;
    const std::size_t nn = bundle.grid.num_nodes();
    const std::size_t p = driver.p, m = driver.m, d = driver.d;

    ExogenousProcesses ex;
    ex.p = p;
    ex.m = m;
    ex.d = d;
    ex.f = UncertainRandomField(FieldShape{levels, paths, nn, p});
    ex.g = UncertainRandomField(FieldShape{levels, paths, nn, p * d});
    ex.h = UncertainRandomField(FieldShape{levels, paths, nn, p * m});

    const std::vector<double> zx(p, 0.0), zy(p * m, 0.0);
    std::vector<double> fv(p), gv(p * d), hv(p * m);
    for (std::size_t k = 0; k < nn; ++k) {
        const double t = bundle.grid.node(k);
        driver.f(t, zx, zy, fv);
        driver.g(t, zx, zy, gv);
        driver.h_exogenous(t, zx, hv);
        for (std::size_t j = 0; j < levels; ++j)
            for (std::size_t i = 0; i < paths; ++i) {
                std::copy(fv.begin(), fv.end(),
                          ex.f.sample(j, i, k).begin());
                std::copy(gv.begin(), gv.end(),
                          ex.g.sample(j, i, k).begin());
                std::copy(hv.begin(), hv.end(),
                          ex.h.sample(j, i, k).begin());
            }
    }
    return ex;
}

} // namespace

Scenario parse_scenario(const std::string& text) {
    KeySet keys(tokenize(text));
    Scenario s;

    if (const auto v = keys.take("scenario.name")) {
        for (char ch : *v)
            if (!(std::isalnum(static_cast<unsigned char>(ch)) ||
                  ch == '_' || ch == '-'))
                throw ConfigError("scenario.name may contain only letters, "
                                  "digits, '_' and '-' (got '" +
                                  *v + "')");
        s.name = *v;
    }
    {
        const auto v = keys.take("scenario.form");
        if (!v)
            throw ConfigError("scenario.form is required (simple, y_driver, "
                              "xy_driver or general)");
        s.form = form_from_name(*v);
    }
    s.driver = resolve_driver(keys, s.form);
    s.terminal = resolve_terminal(keys);

    if (const auto v = keys.take("grid.T")) s.horizon = to_double("grid.T", *v);
    if (!(s.horizon > 0.0)) throw ConfigError("grid.T must be positive");
    if (const auto v = keys.take("grid.N")) s.steps = to_size("grid.N", *v);
    if (s.steps == 0) throw ConfigError("grid.N must be at least 1");

    if (const auto v = keys.take("ensemble.levels"))
        s.levels = to_size("ensemble.levels", *v);
    if (s.levels == 0) throw ConfigError("ensemble.levels must be at least 1");
    if (const auto v = keys.take("ensemble.paths"))
        s.paths = to_size("ensemble.paths", *v);
    if (s.paths == 0) throw ConfigError("ensemble.paths must be at least 1");
    if (const auto v = keys.take("ensemble.seed"))
        s.seed = to_u64("ensemble.seed", *v);

    // Basis default: brownian features where nothing endogenous enters the
    // coefficients, state features once the x iteration is in play.
    if (const auto v = keys.take("basis.kind")) {
        if (*v == "brownian")
            s.solver.basis.kind = RegressionBasis::Kind::brownian;
        else if (*v == "state")
            s.solver.basis.kind = RegressionBasis::Kind::state;
        else
            throw ConfigError("invalid basis.kind '" + *v +
                              "' (use brownian or state)");
    } else {
        s.solver.basis.kind = (s.form == EquationForm::simple ||
                               s.form == EquationForm::y_driver)
                                  ? RegressionBasis::Kind::brownian
                                  : RegressionBasis::Kind::state;
    }
    if (const auto v = keys.take("basis.degree"))
        s.solver.basis.degree = to_size("basis.degree", *v);

    if (const auto v = keys.take("solver.max_iterations"))
        s.solver.max_iterations = to_size("solver.max_iterations", *v);
    if (s.solver.max_iterations == 0)
        throw ConfigError("solver.max_iterations must be at least 1");
    if (const auto v = keys.take("solver.tolerance_rel"))
        s.solver.tolerance_rel = to_double("solver.tolerance_rel", *v);
    if (!(s.solver.tolerance_rel > 0.0))
        throw ConfigError("solver.tolerance_rel must be positive");
    if (const auto v = keys.take("solver.picard_seed"))
        s.solver.picard_seed_value = to_double("solver.picard_seed", *v);
    if (const auto v = keys.take("solver.threads"))
        s.solver.threads = to_size("solver.threads", *v);

    keys.finish();
    return s;
}

Scenario load_scenario_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_scenario(buf.str());
}

Scenario make_scenario_preset(const std::string& name) {
    return parse_scenario(scenario_preset_text(name));
}

std::string scenario_preset_text(const std::string& name) {
    for (const PresetEntry& entry : kScenarioPresets)
        if (name == entry.name) return entry.text;
    std::string known;
    for (const PresetEntry& entry : kScenarioPresets) {
        if (!known.empty()) known += ", ";
        known += entry.name;
    }
    throw ConfigError("unknown scenario preset '" + name + "' (available: " +
                      known + ")");
}

std::vector<std::string> scenario_preset_names() {
    std::vector<std::string> names;
    for (const PresetEntry& entry : kScenarioPresets)
        names.emplace_back(entry.name);
    return names;
}

ScenarioResult run_scenario(const Scenario& scenario,
                            const std::string& out_dir) {
    const auto start = std::chrono::steady_clock::now();
    if (scenario.driver.p != scenario.terminal.p)
        throw ConfigError("driver and terminal condition dimensions "
                          "disagree");

    const TimeGrid grid = TimeGrid::uniform(scenario.horizon, scenario.steps);
    HybridEnsemble ensemble;
    ensemble.alpha = AlphaGrid::uniform_midpoints(scenario.levels);
    ensemble.paths = scenario.paths;
    ensemble.seed = scenario.seed;
    const PathBundle bundle =
        make_path_bundle(grid, ensemble, scenario.driver.m, scenario.driver.d);
    const std::vector<double> xi =
        materialize_terminal(scenario.terminal, bundle);

    ScenarioResult result;
    result.report.form = scenario.form;
    bool have_solution = false;
    try {
        switch (scenario.form) {
        case EquationForm::simple:
            result.solution = solve_simple(
                xi, exogenous_from_driver(scenario.driver, bundle), bundle,
                scenario.solver);
            result.converged = true;
            have_solution = true;
            break;
        case EquationForm::y_driver: {
            auto solved =
                solve_y_driver(xi, scenario.driver, bundle, scenario.solver);
            result.solution = std::move(solved.first);
            result.report = std::move(solved.second);
            result.converged = result.report.converged;
            have_solution = true;
            break;
        }
        case EquationForm::xy_driver: {
            auto solved =
                solve_xy_driver(xi, scenario.driver, bundle, scenario.solver);
            result.solution = std::move(solved.first);
            result.report = std::move(solved.second);
            result.converged = result.report.converged;
            have_solution = true;
            break;
        }
        case EquationForm::general: {
            auto solved =
                solve_general(xi, scenario.driver, bundle, scenario.solver);
            result.solution = std::move(solved.first);
            result.report = std::move(solved.second);
            result.converged = result.report.converged;
            have_solution = true;
            break;
        }
        }
    } catch (const ConvergenceFailure& failure) {
        result.report = failure.report();
        result.converged = false;
    }

    nlohmann::ordered_json manifest;
    manifest["scenario"] = scenario.name;
    if (have_solution) {
        const std::size_t levels = bundle.alpha.size();
        const std::size_t paths = bundle.num_paths;
        const FieldShape ys = result.solution.y.shape();

        manifest["x0_chimera"] =
            chimera_expectation(result.solution.x, 0, 0, bundle.alpha).value;
        std::vector<double> x0_per_alpha(levels, 0.0);
        for (std::size_t j = 0; j < levels; ++j) {
            double mean = 0.0;
            for (std::size_t i = 0; i < paths; ++i)
                mean += result.solution.x.at(j, i, 0, 0);
            x0_per_alpha[j] = mean / static_cast<double>(paths);
        }
        manifest["x0_per_alpha"] = x0_per_alpha;

        double acc = 0.0;
        for (std::size_t j = 0; j < levels; ++j) {
            double level_mean = 0.0;
            for (std::size_t i = 0; i < paths; ++i) {
                double path_acc = 0.0;
                for (std::size_t k = 0; k + 1 < ys.num_nodes; ++k) {
                    double sq = 0.0;
                    for (std::size_t c = 0; c < ys.comps; ++c) {
                        const double v = result.solution.y.at(j, i, k, c);
                        sq += v * v;
                    }
                    path_acc += sq * bundle.grid.dt(k);
                }
                level_mean += path_acc;
            }
            acc += bundle.alpha.weight(j) * level_mean /
                   static_cast<double>(paths);
        }
        manifest["y_rms"] = std::sqrt(acc / grid.horizon());
    } else {
        manifest["x0_chimera"] = nullptr;
        manifest["x0_per_alpha"] = nullptr;
        manifest["y_rms"] = nullptr;
    }
    manifest["iterations"] = result.report.iterations.size();
    manifest["converged"] = result.converged;
    manifest["psi_final"] = result.report.psi_final;
    const auto elapsed = std::chrono::steady_clock::now() - start;
    manifest["runtime_ms"] =
        std::chrono::duration<double, std::milli>(elapsed).count();
    result.manifest = std::move(manifest);

    if (!out_dir.empty()) {
        const std::filesystem::path base(out_dir);
        std::filesystem::create_directories(base);
        const auto manifest_path = base / (scenario.name + ".manifest.json");
        std::ofstream mf(manifest_path);
        if (!mf)
            throw ConfigError("cannot write '" + manifest_path.string() +
                              "'");
        mf << result.manifest.dump(2) << "\n";
        const auto csv_path = base / (scenario.name + ".contraction.csv");
        std::ofstream cf(csv_path);
        if (!cf)
            throw ConfigError("cannot write '" + csv_path.string() + "'");
        write_contraction_csv(cf, result.report);
    }
    return result;
}

} // namespace ubsde
