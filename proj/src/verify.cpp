#include "ubsde/verify.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <utility>

#include "ubsde/calculus.hpp"
#include "ubsde/condexp.hpp"
#include "ubsde/drivers.hpp"
#include "ubsde/rng.hpp"
#include "ubsde/solver.hpp"

namespace ubsde {

namespace {

template <class... Args>
std::string fmt(const char* f, Args... args) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), f, args...);
    return buf;
}

struct CheckList {
    std::ostream& out;
    bool all_ok = true;

    void record(const char* name, bool ok, const std::string& detail) {
        out << (ok ? "[PASS] " : "[FAIL] ") << name << ": " << detail
            << "\n";
        all_ok = all_ok && ok;
    }
};

void suite_calculus(CheckList& checks, bool quick) {
    const std::size_t paths = quick ? 120 : 300;
    const std::size_t n_coarse = quick ? 100 : 200;

    SdeCoefficients mixed;
    mixed.u = [](double, std::span<const double>, std::span<double> out) {
        out[0] = 0.0;
    };
    mixed.v = [](double, std::span<const double>, std::span<double> out) {
        out[0] = 1.0;
    };
    mixed.w = [](double, std::span<const double>, std::span<double> out) {
        out[0] = 1.0;
    };
    mixed.x0 = {0.0};

    const SmoothFunction square = builtin_g("x_squared");
    HybridEnsemble ens;
    ens.alpha = AlphaGrid::uniform_midpoints(9);
    ens.paths = paths;
    ens.seed = 5;

    const auto residual_at = [&](std::size_t steps,
                                 const SdeCoefficients& coeffs) {
        const PathBundle bundle =
            make_path_bundle(TimeGrid::uniform(1.0, steps), ens, 1, 1);
        return ito_liu_residual(square, coeffs, bundle);
    };

    const ResidualStats coarse = residual_at(n_coarse, mixed);
    const double budget =
        0.15 * std::sqrt(1.0 / static_cast<double>(n_coarse)) * coarse.scale;
    checks.record("calculus/quadratic_chain_rule", coarse.rms <= budget,
                  fmt("residual rms %.3e within %.3e", coarse.rms, budget));

    const ResidualStats fine = residual_at(2 * n_coarse, mixed);
    const double factor = coarse.rms / fine.rms;
    checks.record("calculus/mesh_refinement", factor >= 1.3,
                  fmt("rms shrank by %.2f (need 1.3) after halving dt",
                      factor));

    SdeCoefficients canonical_only = mixed;
    canonical_only.v = [](double, std::span<const double>,
                          std::span<double> out) { out[0] = 0.0; };
    const ResidualStats canon = residual_at(n_coarse, canonical_only);
    checks.record("calculus/canonical_exactness", canon.max_abs <= 1e-10,
                  fmt("max residual %.3e for a dC-only state", canon.max_abs));

    // Closed form of the first Ito integral: int B dB = (B_T^2 - T) / 2.
    const std::size_t n_int = 64;
    HybridEnsemble median;
    median.alpha = AlphaGrid::single();
    median.paths = quick ? 800 : 2000;
    median.seed = 5;
    const PathBundle bundle =
        make_path_bundle(TimeGrid::uniform(1.0, n_int), median, 1, 1);
    IntegrandPair pair;
    pair.y = UncertainRandomField(FieldShape{1, median.paths, n_int + 1, 1});
    pair.z = UncertainRandomField(FieldShape{1, median.paths, n_int + 1, 1});
    for (std::size_t i = 0; i < median.paths; ++i)
        for (std::size_t k = 0; k <= n_int; ++k)
            pair.y.at(0, i, k, 0) = bundle.b(i, k, 0);
    const IntegralResult integral = ito_liu_integral(pair, bundle, 0, n_int);
    double acc = 0.0;
    for (std::size_t i = 0; i < median.paths; ++i) {
        const double bt = bundle.b(i, n_int, 0);
        const double err = integral.at(0, i, 0) - 0.5 * (bt * bt - 1.0);
        acc += err * err;
    }
    const double rms = std::sqrt(acc / static_cast<double>(median.paths));
    const double bound = 2.0 * std::sqrt(1.0 / static_cast<double>(n_int));
    checks.record("calculus/ito_closed_form", rms <= bound,
                  fmt("rms %.3e within %.3e against (B^2 - T)/2", rms,
                      bound));
}

void suite_representation(CheckList& checks, bool quick) {
    const std::size_t paths = quick ? 2000 : 4000;
    const std::size_t steps = 16;
    HybridEnsemble ens;
    ens.alpha = AlphaGrid::single();
    ens.paths = paths;
    ens.seed = 3;
    const PathBundle bundle =
        make_path_bundle(TimeGrid::uniform(1.0, steps), ens, 1, 1);

    RegressionBasis linear{RegressionBasis::Kind::brownian, 1};
    RegressionBasis quadratic{RegressionBasis::Kind::brownian, 2};

    // E[B_T | B_t] = B_t: the linear feature carries coefficient 1.
    std::vector<double> target(paths);
    for (std::size_t i = 0; i < paths; ++i)
        target[i] = bundle.b(i, steps, 0);
    const std::size_t mid = steps / 2;
    const CondexpEstimate lin = fit_conditional_expectation(
        target, 1, mid, linear, bundle, 0, nullptr);
    checks.record("representation/linear_coefficient",
                  std::abs(lin.coefficient(1, 0) - 1.0) <= 0.05,
                  fmt("slope on B is %.4f (want 1 +- 0.05)",
                      lin.coefficient(1, 0)));

    // E[B_T^2 | B_t] = B_t^2 + (T - t): intercept T - t = 1/2 at t = 1/2.
    for (std::size_t i = 0; i < paths; ++i) target[i] *= target[i];
    const CondexpEstimate quad = fit_conditional_expectation(
        target, 1, mid, quadratic, bundle, 0, nullptr);
    checks.record("representation/quadratic_intercept",
                  std::abs(quad.coefficient(0, 0) - 0.5) <= 0.05,
                  fmt("intercept is %.4f (want 0.5 +- 0.05)",
                      quad.coefficient(0, 0)));

    const FieldShape shape{1, paths, steps + 1, 1};
    const auto integrand_rms =
        [&](const UncertainRandomField& mart, const RegressionBasis& basis,
            auto reference) {
            const UncertainRandomField got =
                represent_martingale(mart, bundle, basis);
            double err = 0.0;
            for (std::size_t i = 0; i < paths; ++i)
                for (std::size_t k = 0; k < steps; ++k) {
                    const double d =
                        got.at(0, i, k, 0) - reference(i, k);
                    err += d * d;
                }
            return std::sqrt(err / static_cast<double>(paths * steps));
        };

    UncertainRandomField mart(shape);
    for (std::size_t i = 0; i < paths; ++i)
        for (std::size_t k = 0; k <= steps; ++k)
            mart.at(0, i, k, 0) = bundle.b(i, k, 0);
    const double rms_b = integrand_rms(
        mart, linear, [](std::size_t, std::size_t) { return 1.0; });
    checks.record("representation/brownian_integrand", rms_b <= 0.1,
                  fmt("rms error %.3e recovering the constant integrand 1",
                      rms_b));

    UncertainRandomField flat(shape, 3.0);
    const double rms_flat = integrand_rms(
        flat, linear, [](std::size_t, std::size_t) { return 0.0; });
    checks.record("representation/constant_martingale", rms_flat <= 1e-12,
                  fmt("rms integrand %.3e for a constant martingale",
                      rms_flat));

    for (std::size_t i = 0; i < paths; ++i)
        for (std::size_t k = 0; k <= steps; ++k) {
            const double b = bundle.b(i, k, 0);
            mart.at(0, i, k, 0) = b * b - bundle.grid.node(k);
        }
    double ref_sq = 0.0;
    for (std::size_t i = 0; i < paths; ++i)
        for (std::size_t k = 0; k < steps; ++k) {
            const double r = 2.0 * bundle.b(i, k, 0);
            ref_sq += r * r;
        }
    const double ref_rms =
        std::sqrt(ref_sq / static_cast<double>(paths * steps));
    const double rms_sq = integrand_rms(
        mart, quadratic, [&](std::size_t i, std::size_t k) {
            return 2.0 * bundle.b(i, k, 0);
        });
    checks.record("representation/quadratic_integrand",
                  rms_sq <= 0.15 * ref_rms,
                  fmt("relative rms %.3f recovering 2B (need <= 0.15)",
                      rms_sq / ref_rms));
}

void suite_contraction(CheckList& checks, bool quick) {
    HybridEnsemble ens;
    ens.alpha = AlphaGrid::uniform_midpoints(9);
    ens.paths = quick ? 400 : 800;
    ens.seed = 7;
    const PathBundle bundle =
        make_path_bundle(TimeGrid::uniform(1.0, 16), ens, 1, 1);
    SolverConfig config;
    config.basis = RegressionBasis{RegressionBasis::Kind::brownian, 2};

    const std::vector<double> xi = materialize_terminal(
        make_terminal_preset("brownian_T_squared"), bundle);

    const auto sine = solve_y_driver(xi, make_driver_preset("sin_y"), bundle,
                                     config);
    const ContractionVerdict on_sine = verify_contraction(sine.second);
    checks.record("contraction/sine_driver",
                  on_sine.status == ContractionVerdict::Status::pass,
                  on_sine.detail);

    const auto instant = solve_y_driver(xi, make_driver_preset("zero"),
                                        bundle, config);
    const ContractionVerdict on_instant = verify_contraction(instant.second);
    checks.record(
        "contraction/instant_convergence",
        on_instant.status == ContractionVerdict::Status::inconclusive,
        on_instant.detail);

    // A driver whose declared constant is 10x too small must be caught:
    // the true dynamics outrun the certified halving until sin saturates,
    // so the envelope anchored at psi_1 is violated early on.
    const Driver hot = make_driver_expr("6*sin(y)", "0", "y", 0.6, 1.0,
                                        true);
    SolverConfig capped = config;
    capped.max_iterations = 8;
    ContractionReport runaway;
    try {
        runaway = solve_y_driver(xi, hot, bundle, capped).second;
    } catch (const ConvergenceFailure& failure) {
        runaway = failure.report();
    }
    const ContractionVerdict on_runaway = verify_contraction(runaway);
    checks.record("contraction/understated_constant",
                  on_runaway.status == ContractionVerdict::Status::fail,
                  on_runaway.detail);
}

void suite_inversion(CheckList& checks, bool quick) {
    const std::size_t trials = quick ? 100 : 500;
    const NormalStream stream(11, kScratchStream);
    for (const std::string& name : driver_preset_names()) {
        const Driver driver = make_driver_preset(name);
        double worst = 0.0;
        for (std::size_t trial = 0; trial < trials; ++trial) {
            const double t = stream.uniform01(trial, 0, 0);
            const double x = stream.normal(trial, 1, 0);
            const double y = 2.0 * stream.normal(trial, 2, 0);
            std::vector<double> ybar(1);
            driver.h(t, std::span<const double>(&x, 1),
                     std::span<const double>(&y, 1), ybar);
            const std::vector<double> back =
                invert_h(driver, t, std::span<const double>(&x, 1), ybar);
            worst = std::max(worst, std::abs(back[0] - y));
        }
        checks.record(("inversion/round_trip_" + name).c_str(),
                      worst <= 1e-8,
                      fmt("max error %.3e over %zu targets", worst, trials));
    }
}

} // namespace

bool run_verification_suite(const std::string& tag, bool quick,
                            std::ostream& out) {
    CheckList checks{out};
    bool matched = false;
    if (tag == "calculus" || tag == "all") {
        suite_calculus(checks, quick);
        matched = true;
    }
    if (tag == "representation" || tag == "all") {
        suite_representation(checks, quick);
        matched = true;
    }
    if (tag == "contraction" || tag == "all") {
        suite_contraction(checks, quick);
        matched = true;
    }
    if (tag == "inversion" || tag == "all") {
        suite_inversion(checks, quick);
        matched = true;
    }
    if (!matched)
        throw ConfigError("unknown verification suite '" + tag +
                          "' (available: calculus, representation, "
                          "contraction, inversion, all)");
    out << (checks.all_ok ? "all checks passed" : "some checks FAILED")
        << "\n";
    return checks.all_ok;
}

std::vector<std::string> verification_suite_names() {
    return {"calculus", "representation", "contraction", "inversion", "all"};
}

} // namespace ubsde
