// Acceptance gate for the solver stack: one line per criterion, nonzero exit
// when any of them fails. Each check pins its tolerance next to the code and
// notes the value measured when the tolerance was frozen, so a regression
// shows up as a numeric drift rather than a silent pass.

#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "ubsde/calculus.hpp"
#include "ubsde/drivers.hpp"
#include "ubsde/expectation.hpp"
#include "ubsde/paths.hpp"
#include "ubsde/scenario.hpp"
#include "ubsde/solver.hpp"

using namespace ubsde;

namespace {

int failures = 0;

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list args;
    va_start(args, f);
    std::vsnprintf(buf, sizeof buf, f, args);
    va_end(args);
    return buf;
}

void criterion(const char* id,
               const std::function<std::pair<bool, std::string>()>& body) {
    bool ok = false;
    std::string detail;
    try {
        std::tie(ok, detail) = body();
    } catch (const std::exception& e) {
        detail = std::string("exception: ") + e.what();
    }
    std::printf("%-6s %s  %s\n", id, ok ? "pass" : "FAIL", detail.c_str());
    if (!ok) ++failures;
}

PathBundle bundle_of(double T, std::size_t N, std::size_t L, std::size_t M,
                     std::uint64_t seed) {
    return make_path_bundle(
        TimeGrid::uniform(T, N),
        HybridEnsemble{L == 1 ? AlphaGrid::single()
                              : AlphaGrid::uniform_midpoints(L),
                       M, seed},
        1, 1);
}

ExogenousProcesses zero_processes(const PathBundle& bundle) {
    const FieldShape shape{bundle.alpha.size(), bundle.num_paths,
                           bundle.grid.num_nodes(), 1};
    return {UncertainRandomField(shape), UncertainRandomField(shape),
            UncertainRandomField(shape), 1, 1, 1};
}

// AC-1: a constant terminal with a zero driver is an exact fixed point of
// every form; the regression shortcut for constant targets makes the error
// literally zero, so 1e-10 is generous.
std::pair<bool, std::string> ac1() {
    const PathBundle bundle = bundle_of(1.0, 16, 9, 200, 42);
    const std::vector<double> xi(9 * 200, 5.0);
    SolverConfig cfg;
    cfg.basis = {RegressionBasis::Kind::brownian, 2};
    SolverConfig state_cfg;
    state_cfg.basis = {RegressionBasis::Kind::state, 2};
    const Driver dr = make_driver_preset("zero");

    double worst = 0.0;
    auto track = [&](const SolutionPair& sol) {
        for (double v : sol.x.flat())
            worst = std::max(worst, std::abs(v - 5.0));
        for (double v : sol.y.flat()) worst = std::max(worst, std::abs(v));
    };
    track(solve_simple(xi, zero_processes(bundle), bundle, cfg));
    track(solve_y_driver(xi, dr, bundle, cfg).first);
    track(solve_xy_driver(xi, dr, bundle, state_cfg).first);
    track(solve_general(xi, dr, bundle, state_cfg).first);
    return {worst <= 1e-10,
            fmt("constant terminal, four forms: max error %.2e (tol 1e-10)",
                worst)};
}

// AC-2: representation of xi = B_T recovers X = B_t and a unit integrand.
// Measured rms 0.013 / 0.037 when frozen.
std::pair<bool, std::string> ac2() {
    const PathBundle bundle = bundle_of(1.0, 50, 1, 10000, 1);
    const std::vector<double> xi =
        materialize_terminal(make_terminal_preset("brownian_T"), bundle);
    SolverConfig cfg;
    cfg.basis = {RegressionBasis::Kind::brownian, 2};
    const SolutionPair sol =
        solve_simple(xi, zero_processes(bundle), bundle, cfg);

    double xe = 0.0, ye = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < 10000; ++i)
        for (std::size_t k = 0; k < 50; ++k) {
            const double bt = bundle.b(i, k, 0);
            const double dx = sol.x.at(0, i, k, 0) - bt;
            const double dy = sol.y.at(0, i, k, 0) - 1.0;
            xe += dx * dx;
            ye += dy * dy;
            ++n;
        }
    const double rms_x = std::sqrt(xe / static_cast<double>(n));
    const double rms_y = std::sqrt(ye / static_cast<double>(n));
    return {rms_x <= 0.05 && rms_y <= 0.05,
            fmt("martingale representation: rms X %.4f, rms Y %.4f "
                "(tol 0.05)",
                rms_x, rms_y)};
}

// AC-3: xi = B_T^2 against the closed form X = B_t^2 + (T - t), Y = 2 B_t.
// Measured 1.4%% / 5.2%% when frozen.
std::pair<bool, std::string> ac3() {
    const PathBundle bundle = bundle_of(1.0, 50, 1, 10000, 2);
    const std::vector<double> xi = materialize_terminal(
        make_terminal_preset("brownian_T_squared"), bundle);
    SolverConfig cfg;
    cfg.basis = {RegressionBasis::Kind::brownian, 2};
    const SolutionPair sol =
        solve_simple(xi, zero_processes(bundle), bundle, cfg);

    double xe = 0.0, xr = 0.0, ye = 0.0, yr = 0.0;
    for (std::size_t i = 0; i < 10000; ++i)
        for (std::size_t k = 0; k < 50; ++k) {
            const double t = bundle.grid.node(k);
            const double bt = bundle.b(i, k, 0);
            const double xs = bt * bt + (1.0 - t);
            const double ys = 2.0 * bt;
            const double dx = sol.x.at(0, i, k, 0) - xs;
            const double dy = sol.y.at(0, i, k, 0) - ys;
            xe += dx * dx;
            xr += xs * xs;
            ye += dy * dy;
            yr += ys * ys;
        }
    const double rel_x = std::sqrt(xe / xr);
    const double rel_y = std::sqrt(ye / yr);
    return {rel_x <= 0.05 && rel_y <= 0.10,
            fmt("quadratic closed form: rel X %.4f (tol 0.05), rel Y %.4f "
                "(tol 0.10)",
                rel_x, rel_y)};
}

// AC-4: with g = 1 and xi = C_T the tail targets are deterministic per
// level, so the fit reproduces the alpha-path exactly.
std::pair<bool, std::string> ac4() {
    const PathBundle bundle = bundle_of(1.0, 25, 21, 200, 4);
    ExogenousProcesses procs = zero_processes(bundle);
    for (double& v : procs.g.flat()) v = 1.0;
    const std::vector<double> xi =
        materialize_terminal(make_terminal_preset("canonical_T"), bundle);
    SolverConfig cfg;
    cfg.basis = {RegressionBasis::Kind::brownian, 1};
    const SolutionPair sol = solve_simple(xi, procs, bundle, cfg);

    double worst = 0.0;
    for (std::size_t j = 0; j < 21; ++j)
        for (std::size_t i = 0; i < 200; ++i)
            for (std::size_t k = 0; k <= 25; ++k) {
                worst = std::max(worst, std::abs(sol.x.at(j, i, k, 0) -
                                                 bundle.c(j, k, 0)));
                worst = std::max(worst, std::abs(sol.y.at(j, i, k, 0)));
            }
    return {worst <= 1e-10,
            fmt("canonical terminal: max |X - C_t| and |Y| %.2e (tol 1e-10)",
                worst)};
}

// AC-5: geometric decay of the y iteration on the sine driver. Measured
// ratios were below 8e-3 with all four distances above their floors.
std::pair<bool, std::string> ac5() {
    const ScenarioResult res =
        run_scenario(make_scenario_preset("sin_y_contraction"), "");
    if (!res.converged) return {false, "sin_y scenario did not converge"};

    std::size_t usable = 0;
    double worst_ratio = 0.0;
    const auto& its = res.report.iterations;
    for (std::size_t n = 0; n < its.size(); ++n) {
        if (its[n].psi0 <= its[n].noise_floor) continue;
        ++usable;
        if (n > 0 && its[n - 1].psi0 > its[n - 1].noise_floor)
            worst_ratio =
                std::max(worst_ratio, its[n].psi0 / its[n - 1].psi0);
    }
    const ContractionVerdict verdict = verify_contraction(res.report);
    const bool ok = usable >= 3 && worst_ratio <= 0.6 &&
                    verdict.status == ContractionVerdict::Status::pass;
    return {ok, fmt("geometric contraction: %zu usable iterations, worst "
                    "ratio %.3e (tol 0.6), verdict %s",
                    usable, worst_ratio,
                    verdict.status == ContractionVerdict::Status::pass
                        ? "pass"
                        : "not pass")};
}

// AC-6: superlinear decay of the outer x iteration on the mixed driver:
// consecutive ratios must keep shrinking and every distance must sit below
// the factorial curve seeded from phi_1.
std::pair<bool, std::string> ac6() {
    const ScenarioResult res =
        run_scenario(make_scenario_preset("xy_mixed"), "");
    if (!res.converged) return {false, "xy_mixed scenario did not converge"};

    const auto& its = res.report.iterations;
    if (its.size() < 3)
        return {false, fmt("only %zu iterations recorded", its.size())};

    bool ratios_shrink = true, below_curve = true;
    double prev_ratio = 0.0;
    for (std::size_t n = 0; n < its.size(); ++n) {
        if (its[n].phi0 > its[n].phi_bound) below_curve = false;
        if (n == 0) continue;
        const double ratio = its[n].phi0 / its[n - 1].phi0;
        if (n >= 2 && ratio >= prev_ratio) ratios_shrink = false;
        prev_ratio = ratio;
    }
    return {ratios_shrink && below_curve,
            fmt("factorial contraction: %zu iterations, ratios %s, "
                "envelope %s",
                its.size(), ratios_shrink ? "strictly shrinking" : "NOT "
                                                                   "shrinking",
                below_curve ? "respected" : "violated")};
}

// AC-7: chain-rule residual for G = x^2 on X = B + C. The dB sums carry an
// O(sqrt(dt)) error, so the rms must shrink by >= 1.3 when dt halves;
// measured 0.43 of the budget and a 1.40 ratio when frozen.
std::pair<bool, std::string> ac7() {
    const SmoothFunction g = builtin_g("x_squared");
    auto zero_fn = [](double, std::span<const double>,
                      std::span<double> out) { out[0] = 0.0; };
    auto one_fn = [](double, std::span<const double>, std::span<double> out) {
        out[0] = 1.0;
    };
    SdeCoefficients coeffs;
    coeffs.p = 1;
    coeffs.u = zero_fn;
    coeffs.v = one_fn;
    coeffs.w = one_fn;
    coeffs.x0 = {0.0};

    const PathBundle coarse = bundle_of(1.0, 200, 9, 2000, 12);
    const ResidualStats r200 = ito_liu_residual(g, coeffs, coarse);
    const PathBundle fine = bundle_of(1.0, 400, 9, 2000, 12);
    const ResidualStats r400 = ito_liu_residual(g, coeffs, fine);

    const double budget = 0.15 * std::sqrt(1.0 / 200.0) * r200.scale;
    const double ratio = r200.rms / r400.rms;

    SdeCoefficients pure_c = coeffs;
    pure_c.v = zero_fn;
    const ResidualStats rc = ito_liu_residual(g, pure_c, coarse);

    const bool ok = r200.rms <= budget && ratio >= 1.3 && rc.max_abs <= 1e-10;
    return {ok, fmt("chain rule: rms %.3e (budget %.3e), halving ratio %.2f "
                    "(>= 1.3), pure-dC residual %.1e (tol 1e-10)",
                    r200.rms, budget, ratio, rc.max_abs)};
}

// AC-8: integrals against dC have zero chimera expectation on a symmetric
// grid (the mirrored alpha-paths cancel exactly); integrals against dB are
// mean-zero to Monte Carlo resolution.
std::pair<bool, std::string> ac8() {
    const std::size_t L = 99, M = 5000, N = 40;
    const PathBundle bundle = bundle_of(1.0, N, L, M, 8);
    const FieldShape shape{L, M, N + 1, 1};

    IntegrandPair liu;
    liu.y = UncertainRandomField(shape);
    liu.z = UncertainRandomField(shape);
    for (std::size_t j = 0; j < L; ++j)
        for (std::size_t i = 0; i < M; ++i)
            for (std::size_t k = 0; k <= N; ++k)
                liu.z.at(j, i, k, 0) = std::sin(bundle.b(i, k, 0));
    const IntegralResult against_c = ito_liu_integral(liu, bundle, 0, N);
    double chimera = 0.0;
    std::vector<double> per_level(L);
    for (std::size_t i = 0; i < M; ++i) {
        for (std::size_t j = 0; j < L; ++j) per_level[j] = against_c.at(j, i, 0);
        chimera += uncertain_expectation(per_level, bundle.alpha);
    }
    chimera /= static_cast<double>(M);

    IntegrandPair brw;
    brw.y = UncertainRandomField(shape);
    brw.z = UncertainRandomField(shape);
    for (std::size_t j = 0; j < L; ++j)
        for (std::size_t i = 0; i < M; ++i)
            for (std::size_t k = 0; k <= N; ++k)
                brw.y.at(j, i, k, 0) = std::cos(bundle.b(i, k, 0));
    const IntegralResult against_b = ito_liu_integral(brw, bundle, 0, N);
    double mean = 0.0;
    for (std::size_t i = 0; i < M; ++i) mean += against_b.at(0, i, 0);
    mean /= static_cast<double>(M);
    double var = 0.0;
    for (std::size_t i = 0; i < M; ++i) {
        const double d = against_b.at(0, i, 0) - mean;
        var += d * d;
    }
    const double se =
        std::sqrt(var / (static_cast<double>(M) * static_cast<double>(M - 1)));

    const bool ok = std::abs(chimera) <= 1e-6 && std::abs(mean) <= 3.0 * se;
    return {ok, fmt("zero expectations: dC chimera %.1e (tol 1e-6), dB mean "
                    "%.2e within %.1f sigma (tol 3)",
                    chimera, mean, se > 0 ? std::abs(mean) / se : 0.0)};
}

// AC-9: two Picard seeds on the sine scenario land on the same solution to
// within ten times the absolute tolerance (measured essentially zero).
std::pair<bool, std::string> ac9() {
    const Scenario sc = make_scenario_preset("sin_y_contraction");
    const PathBundle bundle =
        bundle_of(sc.horizon, sc.steps, sc.levels, sc.paths, sc.seed);
    const std::vector<double> xi = materialize_terminal(sc.terminal, bundle);

    SolverConfig from_zero = sc.solver;
    auto [a, ra] = solve_y_driver(xi, sc.driver, bundle, from_zero);
    SolverConfig from_one = sc.solver;
    from_one.picard_seed_value = 1.0;
    auto [b, rb] = solve_y_driver(xi, sc.driver, bundle, from_one);

    const double tol_abs = sc.solver.tolerance_rel * ra.iterations[0].psi0;
    const double dist = max_node_distance(a, b, bundle);
    return {dist <= 10.0 * tol_abs,
            fmt("uniqueness: seed distance %.2e against budget %.2e", dist,
                10.0 * tol_abs)};
}

// AC-10: inversion round trips on the identity, scaled and trigonometric
// integrands, plus the solve that leans on the inversion end to end
// (measured rms 0.014 when frozen; tolerance 5%% of the true value 1/2).
std::pair<bool, std::string> ac10() {
    double worst = 0.0;
    std::uint64_t state = 88172645463325252ull;
    auto next = [&]() {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        return -10.0 +
               20.0 * static_cast<double>(state >> 11) / 9007199254740992.0;
    };
    for (const char* name : {"zero", "scale_h", "nonlinear_h"}) {
        const Driver dr = make_driver_preset(name);
        std::vector<double> xs{0.0}, target(1), image(1);
        for (int n = 0; n < 10000; ++n) {
            target[0] = next();
            const std::vector<double> y = invert_h(dr, 0.3, xs, target);
            dr.h(0.3, xs, y, image);
            worst = std::max(worst, std::abs(image[0] - target[0]));
        }
    }
    if (worst > 1e-10)
        return {false,
                fmt("inversion round trip drifted to %.2e (tol 1e-10)",
                    worst)};

    const ScenarioResult res =
        run_scenario(make_scenario_preset("scale_h"), "");
    if (!res.converged) return {false, "scale_h scenario did not converge"};
    double ysq = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < 10000; ++i)
        for (std::size_t k = 0; k < 50; ++k) {
            const double d = res.solution.y.at(0, i, k, 0) - 0.5;
            ysq += d * d;
            ++n;
        }
    const double rms = std::sqrt(ysq / static_cast<double>(n));
    return {rms <= 0.025,
            fmt("inversion: round trip %.2e (tol 1e-10), scale_h rms |Y-1/2| "
                "%.4f (tol 0.025)",
                worst, rms)};
}

// AC-11: the deterministic backward ODE through the degenerate-regression
// path; exp(-1/2) to thirty digits starts 0.60653065971263342.
std::pair<bool, std::string> ac11() {
    const PathBundle bundle = bundle_of(1.0, 64, 1, 256, 1);
    const std::vector<double> xi(256, 1.0);
    SolverConfig cfg;
    cfg.basis = {RegressionBasis::Kind::state, 1};
    cfg.max_iterations = 40;
    auto [sol, rep] =
        solve_xy_driver(xi, make_driver_preset("linear_decay"), bundle, cfg);
    if (!rep.converged) return {false, "decay solve did not converge"};
    const double x0 = sol.x.at(0, 0, 0, 0);
    const double want = 0.60653065971263342;
    const double rel = std::abs(x0 - want) / want;
    return {rel <= 0.01,
            fmt("ODE reduction: X(0) = %.8f vs exp(-1/2), relative error "
                "%.4f (tol 0.01)",
                x0, rel)};
}

} // namespace

int main() {
    criterion("AC-1", ac1);
    criterion("AC-2", ac2);
    criterion("AC-3", ac3);
    criterion("AC-4", ac4);
    criterion("AC-5", ac5);
    criterion("AC-6", ac6);
    criterion("AC-7", ac7);
    criterion("AC-8", ac8);
    criterion("AC-9", ac9);
    criterion("AC-10", ac10);
    criterion("AC-11", ac11);

    if (failures == 0) {
        std::printf("all %d criteria passed\n", 11);
        return 0;
    }
    std::printf("%d of 11 criteria FAILED\n", failures);
    return 1;
}
