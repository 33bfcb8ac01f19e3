#include "ubsde/solver.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ostream>

#include "ubsde/parallel.hpp"
#include "ubsde/rng.hpp"

namespace ubsde {

namespace {

// Chimera M2 distance between two fields over the time axis, left-endpoint:
// sum_j w_j mean_i sum_{k<N} |a - b|^2 dt_k. The alpha layer is the plain
// weighted sum: with summed-weight level sets the Choquet integral of any
// finite value family reduces to exactly that.
struct DistanceStat {
    double value = 0.0;
    std::vector<double> per_path; // inner alpha-weighted value per path
};

DistanceStat m2_distance(const UncertainRandomField& a,
                         const UncertainRandomField& b,
                         const PathBundle& bundle) {
    const FieldShape s = a.shape();
    if (!(s == b.shape()))
        throw ContractViolation("m2 distance needs fields of equal shape");
    DistanceStat out;
    out.per_path.assign(s.paths, 0.0);
    for (std::size_t j = 0; j < s.levels; ++j) {
        const double w = bundle.alpha.weight(j);
        for (std::size_t i = 0; i < s.paths; ++i) {
            double acc = 0.0;
            for (std::size_t k = 0; k + 1 < s.num_nodes; ++k) {
                double sq = 0.0;
                const auto sa = a.sample(j, i, k);
                const auto sb = b.sample(j, i, k);
                for (std::size_t c = 0; c < s.comps; ++c) {
                    const double d = sa[c] - sb[c];
                    sq += d * d;
                }
                acc += sq * bundle.grid.dt(k);
            }
            out.per_path[i] += w * acc;
        }
    }
    for (double u : out.per_path) out.value += u;
    out.value /= static_cast<double>(s.paths);
    return out;
}

// 3 sigma of the path-resampled mean. The resample pattern is fixed, so the
// floor is a pure function of the statistic values.
double bootstrap_floor(std::span<const double> per_path) {
    constexpr std::size_t kResamples = 64;
    const std::size_t m = per_path.size();
    if (m < 2) return 0.0;
    const NormalStream stream(0, kBootstrapStream);
    double mean_of_means = 0.0;
    std::array<double, kResamples> means{};
    for (std::size_t r = 0; r < kResamples; ++r) {
        double acc = 0.0;
        for (std::size_t t = 0; t < m; ++t) {
            const double u =
                stream.uniform01(r, static_cast<std::uint32_t>(t), 0);
            const std::size_t idx =
                std::min(m - 1, static_cast<std::size_t>(
                                    u * static_cast<double>(m)));
            acc += per_path[idx];
        }
        means[r] = acc / static_cast<double>(m);
        mean_of_means += means[r];
    }
    mean_of_means /= kResamples;
    double var = 0.0;
    for (double v : means) var += (v - mean_of_means) * (v - mean_of_means);
    var /= (kResamples - 1);
    return 3.0 * std::sqrt(var);
}

void require_finite(const UncertainRandomField& field, const char* what) {
    if (!field.all_finite())
        throw InvalidValueError(std::string(what) +
                                " contains a non-finite value");
}

bool all_zero(std::span<const double> values) {
    for (double v : values)
        if (v != 0.0) return false;
    return true;
}

// Prefix sums of the exogenous part: cum(., k) = sum_{l<k} [f dt + g dC].
UncertainRandomField cumulative_drift(const UncertainRandomField& f,
                                      const UncertainRandomField& g,
                                      const PathBundle& bundle, std::size_t p,
                                      std::size_t d) {
    const FieldShape s = f.shape();
    UncertainRandomField cum(FieldShape{s.levels, s.paths, s.num_nodes, p});
    for (std::size_t j = 0; j < s.levels; ++j)
        for (std::size_t i = 0; i < s.paths; ++i)
            for (std::size_t k = 0; k + 1 < s.num_nodes; ++k) {
                const double dt = bundle.grid.dt(k);
                for (std::size_t r = 0; r < p; ++r) {
                    double step = f.at(j, i, k, r) * dt;
                    for (std::size_t e = 0; e < d; ++e)
                        step += g.at(j, i, k, r * d + e) * bundle.dc(j, k, e);
                    cum.at(j, i, k + 1, r) = cum.at(j, i, k, r) + step;
                }
            }
    return cum;
}

struct Representation {
    UncertainRandomField x;    // comps p
    UncertainRandomField ybar; // comps p * m
};

// Backward conditional-expectation pass: per level and node, X(t_k) is the
// regression of the tail sum xi - sum_{l>=k} [f dt + g dC] on node-k
// features; the terminal node is copied exactly. The Brownian integrand is
// recovered from the compensated martingale X - cum.
Representation representation_core(std::span<const double> xi, std::size_t p,
                                   const UncertainRandomField& f_field,
                                   const UncertainRandomField& g_field,
                                   const PathBundle& bundle,
                                   const SolverConfig& config,
                                   const UncertainRandomField* state,
                                   std::size_t d) {
    const std::size_t levels = bundle.alpha.size();
    const std::size_t paths = bundle.num_paths;
    const std::size_t nn = bundle.grid.num_nodes();

    const UncertainRandomField cum =
        cumulative_drift(f_field, g_field, bundle, p, d);

    Representation rep;
    rep.x = UncertainRandomField(FieldShape{levels, paths, nn, p});
    UncertainRandomField mhat(FieldShape{levels, paths, nn, p});

    run_over_levels(levels, config.threads, [&](std::size_t j) {
        std::vector<double> target(paths * p);
        for (std::size_t k = 0; k + 1 < nn; ++k) {
            for (std::size_t i = 0; i < paths; ++i)
                for (std::size_t r = 0; r < p; ++r)
                    target[i * p + r] =
                        xi[(j * paths + i) * p + r] -
                        (cum.at(j, i, nn - 1, r) - cum.at(j, i, k, r));
            const CondexpEstimate fit = fit_conditional_expectation(
                target, p, k, config.basis, bundle, j, state);
            for (std::size_t i = 0; i < paths; ++i)
                for (std::size_t r = 0; r < p; ++r)
                    rep.x.at(j, i, k, r) = fit.fitted[i * p + r];
        }
        for (std::size_t i = 0; i < paths; ++i)
            for (std::size_t r = 0; r < p; ++r)
                rep.x.at(j, i, nn - 1, r) = xi[(j * paths + i) * p + r];
        for (std::size_t k = 0; k < nn; ++k)
            for (std::size_t i = 0; i < paths; ++i)
                for (std::size_t r = 0; r < p; ++r)
                    mhat.at(j, i, k, r) =
                        rep.x.at(j, i, k, r) - cum.at(j, i, k, r);
    });

    rep.ybar = represent_martingale(mhat, bundle, config.basis, state, nullptr,
                                    config.threads);
    return rep;
}

void validate_bundle_dims(const PathBundle& bundle, std::size_t m,
                          std::size_t d) {
    if (bundle.brownian_dim != m || bundle.canonical_dim != d)
        throw ConfigError("path bundle dimensions (m = " +
                          std::to_string(bundle.brownian_dim) + ", d = " +
                          std::to_string(bundle.canonical_dim) +
                          ") do not match the coefficients");
}

// The y-form decay envelope: min of the pure-geometric curve and the
// iterated linear-geometric curve, both anchored at the measured psi_1.
void fill_psi_bounds(ContractionReport& report, double horizon) {
    if (report.iterations.empty()) return;
    const double psi1 = report.iterations.front().psi0;
    report.c_tilde = psi1;
    const double amp = report.c_tilde *
                       std::exp(report.k_const * horizon);
    report.k_tilde = report.k_const * amp;
    for (IterationRecord& row : report.iterations) {
        const double n = static_cast<double>(row.iteration);
        const double half = std::pow(0.5, n - 1.0);
        row.psi_bound = std::min(half * amp,
                                 half * ((n - 1.0) * report.k_tilde + psi1));
        row.phi_bound = 0.0;
    }
}

// The x-form superlinear envelope (c1 e^{c1 T})^{n-1}/(n-1)! phi_1.
void fill_phi_bounds(ContractionReport& report, double horizon) {
    if (report.iterations.empty()) return;
    const double base = report.c1 * std::exp(report.c1 * horizon);
    double bound = report.iterations.front().phi0;
    for (IterationRecord& row : report.iterations) {
        row.phi_bound = bound;
        row.psi_bound = 0.0;
        bound *= base / static_cast<double>(row.iteration);
    }
}

// Inner Picard iteration in y with an optional frozen state path. Extraction
// of Y from the represented integrand is either subtraction of the
// exogenous h or the pointwise inversion of the full h map.
std::pair<SolutionPair, ContractionReport> picard_in_y(
    std::span<const double> xi, const Driver& driver, const PathBundle& bundle,
    const SolverConfig& config, const UncertainRandomField* frozen_x,
    bool invert_extraction, const UncertainRandomField* warm_start) {
    const std::size_t p = driver.p, m = driver.m, d = driver.d;
    validate_bundle_dims(bundle, m, d);
    const std::size_t levels = bundle.alpha.size();
    const std::size_t paths = bundle.num_paths;
    const std::size_t nn = bundle.grid.num_nodes();
    const double horizon = bundle.grid.horizon();
    if (xi.size() != levels * paths * p)
        throw ConfigError("terminal values have the wrong size");
    if (config.max_iterations == 0)
        throw ConfigError("max_iterations must be at least 1");

    ContractionReport report;
    report.form = EquationForm::y_driver;
    report.lipschitz_c = driver.lipschitz_c;
    report.k_const = 2.0 * driver.lipschitz_c * driver.lipschitz_c;
    report.c1 = driver.lipschitz_c +
                4.0 * driver.lipschitz_c * driver.lipschitz_c;

    UncertainRandomField y_prev(FieldShape{levels, paths, nn, p * m},
                                config.picard_seed_value);
    if (warm_start) y_prev = *warm_start;
    UncertainRandomField x_prev(FieldShape{levels, paths, nn, p});

    UncertainRandomField f_field(FieldShape{levels, paths, nn, p});
    UncertainRandomField g_field(FieldShape{levels, paths, nn, p * d});
    UncertainRandomField h_field(FieldShape{levels, paths, nn, p * m});
    const std::vector<double> zero_x(p, 0.0);

    // h never sees y in this loop, so its exogenous part is constant across
    // iterations. The inverting path reads h through invert_h instead.
    if (!invert_extraction) {
        run_over_levels(levels, config.threads, [&](std::size_t j) {
            for (std::size_t i = 0; i < paths; ++i)
                for (std::size_t k = 0; k < nn; ++k) {
                    const std::span<const double> xs =
                        frozen_x ? frozen_x->sample(j, i, k)
                                 : std::span<const double>(zero_x);
                    driver.h_exogenous(bundle.grid.node(k), xs,
                                       h_field.sample(j, i, k));
                }
        });
        require_finite(h_field, "the exogenous part of h");
    }

    SolutionPair current;
    double psi1 = 0.0;
    for (std::size_t n = 1; n <= config.max_iterations; ++n) {
        run_over_levels(levels, config.threads, [&](std::size_t j) {
            for (std::size_t i = 0; i < paths; ++i)
                for (std::size_t k = 0; k < nn; ++k) {
                    const double t = bundle.grid.node(k);
                    const std::span<const double> xs =
                        frozen_x ? frozen_x->sample(j, i, k)
                                 : std::span<const double>(zero_x);
                    const auto ys = y_prev.sample(j, i, k);
                    driver.f(t, xs, ys, f_field.sample(j, i, k));
                    driver.g(t, xs, ys, g_field.sample(j, i, k));
                }
        });
        require_finite(f_field, "the drift coefficient f");
        require_finite(g_field, "the canonical coefficient g");

        const UncertainRandomField* state =
            frozen_x ? frozen_x : &x_prev;
        Representation rep = representation_core(
            xi, p, f_field, g_field, bundle, config, state, d);

        UncertainRandomField y_new(FieldShape{levels, paths, nn, p * m});
        if (!invert_extraction) {
            const auto src = rep.ybar.flat();
            const auto sub = h_field.flat();
            auto dst = y_new.flat();
            for (std::size_t c = 0; c < dst.size(); ++c)
                dst[c] = src[c] - sub[c];
        } else {
            run_over_levels(levels, config.threads, [&](std::size_t j) {
                for (std::size_t i = 0; i < paths; ++i)
                    for (std::size_t k = 0; k < nn; ++k) {
                        const std::span<const double> xs =
                            frozen_x ? frozen_x->sample(j, i, k)
                                     : std::span<const double>(zero_x);
                        std::vector<double> yv;
                        try {
                            yv = invert_h(driver, bundle.grid.node(k), xs,
                                          rep.ybar.sample(j, i, k));
                        } catch (const NumericalFailure& e) {
                            char msg[256];
                            std::snprintf(
                                msg, sizeof(msg),
                                "%s (level %zu, path %zu, node %zu)",
                                e.what(), j, i, k);
                            throw NumericalFailure(
                                msg, e.best_residual(),
                                NumericalFailure::SampleCoord{j, i, k, true});
                        }
                        auto out = y_new.sample(j, i, k);
                        std::copy(yv.begin(), yv.end(), out.begin());
                    }
            });
        }

        const DistanceStat phi = m2_distance(rep.x, x_prev, bundle);
        const DistanceStat psi = m2_distance(y_new, y_prev, bundle);
        const double floor = bootstrap_floor(psi.per_path);
        report.iterations.push_back(
            {n, phi.value, psi.value, 0.0, 0.0, floor});
        report.noise_floor = floor;
        report.psi_final = psi.value;
        if (n == 1) psi1 = psi.value;
        if (config.tolerance_rel * psi1 <= floor && psi1 > 0.0)
            report.tolerance_warning = true;

        current.x = rep.x;
        current.y = y_new;
        if (config.record_iterates) report.iterates.push_back(current);
        x_prev = std::move(rep.x);
        y_prev = std::move(y_new);

        if (psi.value == 0.0 ||
            (n >= 2 && psi.value <= config.tolerance_rel * psi1)) {
            report.converged = true;
            fill_psi_bounds(report, horizon);
            return {std::move(current), std::move(report)};
        }
    }
    fill_psi_bounds(report, horizon);
    char msg[160];
    std::snprintf(msg, sizeof(msg),
                  "y iteration did not converge in %zu steps "
                  "(psi = %.3e, tolerance = %.3e relative)",
                  config.max_iterations, report.psi_final,
                  config.tolerance_rel);
    throw ConvergenceFailure(msg, std::move(report));
}

// Outer Picard iteration in x around the y solve.
std::pair<SolutionPair, ContractionReport> picard_in_x(
    std::span<const double> xi, const Driver& driver, const PathBundle& bundle,
    const SolverConfig& config, bool invert_extraction, EquationForm form) {
    const std::size_t p = driver.p, m = driver.m;
    validate_bundle_dims(bundle, m, driver.d);
    const std::size_t levels = bundle.alpha.size();
    const std::size_t paths = bundle.num_paths;
    const std::size_t nn = bundle.grid.num_nodes();
    const double horizon = bundle.grid.horizon();
    if (config.max_iterations == 0)
        throw ConfigError("max_iterations must be at least 1");

    ContractionReport report;
    report.form = form;
    report.lipschitz_c = driver.lipschitz_c;
    report.k_const = 2.0 * driver.lipschitz_c * driver.lipschitz_c;
    report.c1 = driver.lipschitz_c +
                4.0 * driver.lipschitz_c * driver.lipschitz_c;

    UncertainRandomField x_prev(FieldShape{levels, paths, nn, p});
    UncertainRandomField y_prev(FieldShape{levels, paths, nn, p * m},
                                config.picard_seed_value);
    const UncertainRandomField* warm = nullptr;

    SolverConfig inner = config;
    inner.record_iterates = false;

    SolutionPair current;
    double phi1 = 0.0;
    for (std::size_t n = 1; n <= config.max_iterations; ++n) {
        std::pair<SolutionPair, ContractionReport> step;
        try {
            step = picard_in_y(xi, driver, bundle, inner, &x_prev,
                               invert_extraction, warm);
        } catch (ConvergenceFailure& e) {
            char msg[224];
            std::snprintf(msg, sizeof(msg),
                          "inner y iteration stalled at outer step %zu: %s",
                          n, e.what());
            throw ConvergenceFailure(msg, std::move(report));
        }

        const DistanceStat phi = m2_distance(step.first.x, x_prev, bundle);
        const DistanceStat psi = m2_distance(step.first.y, y_prev, bundle);
        const double floor = bootstrap_floor(phi.per_path);
        report.iterations.push_back(
            {n, phi.value, psi.value, 0.0, 0.0, floor});
        report.noise_floor = floor;
        report.psi_final = psi.value;
        if (n == 1) phi1 = phi.value;
        if (config.tolerance_rel * phi1 <= floor && phi1 > 0.0)
            report.tolerance_warning = true;

        current = std::move(step.first);
        if (config.record_iterates) report.iterates.push_back(current);
        x_prev = current.x;
        y_prev = current.y;
        warm = &y_prev;

        if (phi.value == 0.0 ||
            (n >= 2 && phi.value <= config.tolerance_rel * phi1)) {
            report.converged = true;
            fill_phi_bounds(report, horizon);
            return {std::move(current), std::move(report)};
        }
    }
    fill_phi_bounds(report, horizon);
    char msg[160];
    std::snprintf(msg, sizeof(msg),
                  "x iteration did not converge in %zu steps "
                  "(phi = %.3e, tolerance = %.3e relative)",
                  config.max_iterations,
                  report.iterations.back().phi0, config.tolerance_rel);
    throw ConvergenceFailure(msg, std::move(report));
}

double slope_of(const std::vector<std::pair<double, double>>& points) {
    double mean_x = 0.0, mean_y = 0.0;
    for (const auto& [x, y] : points) {
        mean_x += x;
        mean_y += y;
    }
    mean_x /= static_cast<double>(points.size());
    mean_y /= static_cast<double>(points.size());
    double num = 0.0, den = 0.0;
    for (const auto& [x, y] : points) {
        num += (x - mean_x) * (y - mean_y);
        den += (x - mean_x) * (x - mean_x);
    }
    return num / den;
}

} // namespace

std::string form_name(EquationForm form) {
    switch (form) {
    case EquationForm::simple: return "simple";
    case EquationForm::y_driver: return "y_driver";
    case EquationForm::xy_driver: return "xy_driver";
    case EquationForm::general: return "general";
    }
    return "unknown";
}

EquationForm form_from_name(const std::string& name) {
    if (name == "simple") return EquationForm::simple;
    if (name == "y_driver") return EquationForm::y_driver;
    if (name == "xy_driver") return EquationForm::xy_driver;
    if (name == "general") return EquationForm::general;
    throw ConfigError("unknown equation form '" + name +
                      "' (expected simple, y_driver, xy_driver or general)");
}

std::vector<double> materialize_terminal(const TerminalCondition& terminal,
                                         const PathBundle& bundle) {
    const std::size_t levels = bundle.alpha.size();
    const std::size_t paths = bundle.num_paths;
    const std::size_t p = terminal.p;
    std::vector<double> xi(levels * paths * p);
    for (std::size_t j = 0; j < levels; ++j)
        for (std::size_t i = 0; i < paths; ++i) {
            const std::span<double> out(xi.data() + (j * paths + i) * p, p);
            terminal.xi(bundle, j, i, out);
            for (double v : out)
                if (!std::isfinite(v))
                    throw InvalidValueError(
                        "terminal condition '" + terminal.name +
                        "' produced a non-finite value at level " +
                        std::to_string(j) + ", path " + std::to_string(i));
        }
    return xi;
}

SolutionPair solve_simple(std::span<const double> xi,
                          const ExogenousProcesses& processes,
                          const PathBundle& bundle, const SolverConfig& config,
                          const UncertainRandomField* state) {
    const std::size_t p = processes.p, m = processes.m, d = processes.d;
    validate_bundle_dims(bundle, m, d);
    const std::size_t levels = bundle.alpha.size();
    const std::size_t paths = bundle.num_paths;
    const std::size_t nn = bundle.grid.num_nodes();
    const FieldShape fs{levels, paths, nn, p};
    const FieldShape gs{levels, paths, nn, p * d};
    const FieldShape hs{levels, paths, nn, p * m};
    if (!(processes.f.shape() == fs) || !(processes.g.shape() == gs) ||
        !(processes.h.shape() == hs))
        throw ConfigError("exogenous process shapes do not match the bundle");
    if (xi.size() != levels * paths * p)
        throw ConfigError("terminal values have the wrong size");
    for (double v : xi)
        if (!std::isfinite(v))
            throw InvalidValueError("terminal values contain a non-finite "
                                    "entry");
    require_finite(processes.f, "the exogenous process f");
    require_finite(processes.g, "the exogenous process g");
    require_finite(processes.h, "the exogenous process h");

    SolutionPair pair;
    if (all_zero(xi) && all_zero(processes.f.flat()) &&
        all_zero(processes.g.flat()) && all_zero(processes.h.flat())) {
        pair.x = UncertainRandomField(fs);
        pair.y = UncertainRandomField(hs);
        return pair;
    }

    Representation rep = representation_core(
        xi, p, processes.f, processes.g, bundle, config, state, d);
    pair.x = std::move(rep.x);
    pair.y = UncertainRandomField(hs);
    const auto src = rep.ybar.flat();
    const auto sub = processes.h.flat();
    auto dst = pair.y.flat();
    for (std::size_t c = 0; c < dst.size(); ++c) dst[c] = src[c] - sub[c];
    return pair;
}

std::pair<SolutionPair, ContractionReport> solve_y_driver(
    std::span<const double> xi, const Driver& driver, const PathBundle& bundle,
    const SolverConfig& config) {
    return picard_in_y(xi, driver, bundle, config, nullptr, false, nullptr);
}

std::pair<SolutionPair, ContractionReport> solve_xy_driver(
    std::span<const double> xi, const Driver& driver, const PathBundle& bundle,
    const SolverConfig& config) {
    return picard_in_x(xi, driver, bundle, config, false,
                       EquationForm::xy_driver);
}

std::pair<SolutionPair, ContractionReport> solve_general(
    std::span<const double> xi, const Driver& driver, const PathBundle& bundle,
    const SolverConfig& config) {
    return picard_in_x(xi, driver, bundle, config, true,
                       EquationForm::general);
}

ContractionVerdict verify_contraction(const ContractionReport& report) {
    ContractionVerdict verdict;
    const bool y_rows = report.form == EquationForm::y_driver;
    if (report.form == EquationForm::simple) {
        verdict.detail = "the simple form has no iteration to verify";
        return verdict;
    }

    std::vector<std::pair<double, double>> points; // (n, log value)
    std::vector<std::pair<double, double>> bounds; // (n, log bound)
    bool envelope_ok = true;
    for (const IterationRecord& row : report.iterations) {
        const double value = y_rows ? row.psi0 : row.phi0;
        const double bound = y_rows ? row.psi_bound : row.phi_bound;
        if (!(value > row.noise_floor) || !(value > 0.0)) continue;
        points.emplace_back(static_cast<double>(row.iteration),
                            std::log(value));
        bounds.emplace_back(static_cast<double>(row.iteration),
                            std::log(bound));
        // 5% slack on the envelope: the bound's anchor is itself measured.
        if (value > bound * 1.05) envelope_ok = false;
    }
    verdict.usable_iterations = points.size();
    if (points.size() < 3) {
        verdict.status = ContractionVerdict::Status::inconclusive;
        verdict.detail = "fewer than 3 iterations above the noise floor";
        return verdict;
    }

    verdict.measured_slope = slope_of(points);
    verdict.bound_slope = y_rows ? -std::log(2.0) : slope_of(bounds);
    verdict.envelope_ok = envelope_ok;

    const bool slope_ok =
        verdict.measured_slope <= verdict.bound_slope + 0.1;
    verdict.status = (slope_ok && envelope_ok)
                         ? ContractionVerdict::Status::pass
                         : ContractionVerdict::Status::fail;
    char detail[224];
    std::snprintf(detail, sizeof(detail),
                  "%s decay: measured log-slope %.3f vs bound %.3f "
                  "(margin 0.1), envelope %s over %zu usable iterations",
                  y_rows ? "geometric" : "factorial", verdict.measured_slope,
                  verdict.bound_slope, envelope_ok ? "holds" : "violated",
                  points.size());
    verdict.detail = detail;
    return verdict;
}

double max_node_distance(const SolutionPair& a, const SolutionPair& b,
                         const PathBundle& bundle) {
    const FieldShape sx = a.x.shape();
    if (!(sx == b.x.shape()) || !(a.y.shape() == b.y.shape()))
        throw ContractViolation(
            "node distance needs solutions of equal shape");
    double worst = 0.0;
    for (std::size_t k = 0; k < sx.num_nodes; ++k) {
        double node_value = 0.0;
        for (std::size_t j = 0; j < sx.levels; ++j) {
            const double w = bundle.alpha.weight(j);
            double mean = 0.0;
            for (std::size_t i = 0; i < sx.paths; ++i) {
                double sq = 0.0;
                for (std::size_t c = 0; c < sx.comps; ++c) {
                    const double dx = a.x.at(j, i, k, c) - b.x.at(j, i, k, c);
                    sq += dx * dx;
                }
                for (std::size_t c = 0; c < a.y.shape().comps; ++c) {
                    const double dy = a.y.at(j, i, k, c) - b.y.at(j, i, k, c);
                    sq += dy * dy;
                }
                mean += sq;
            }
            node_value += w * mean / static_cast<double>(sx.paths);
        }
        worst = std::max(worst, node_value);
    }
    return worst;
}

void write_contraction_csv(std::ostream& out,
                           const ContractionReport& report) {
    out << "iteration,phi0,psi0,phi_bound,psi_bound,noise_floor\n";
    char line[160];
    for (const IterationRecord& row : report.iterations) {
        std::snprintf(line, sizeof(line),
                      "%zu,%.17e,%.17e,%.17e,%.17e,%.17e\n", row.iteration,
                      row.phi0, row.psi0, row.phi_bound, row.psi_bound,
                      row.noise_floor);
        out << line;
    }
}

} // namespace ubsde
