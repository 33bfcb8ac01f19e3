#include "ubsde/drivers.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <utility>

#include "ubsde/errors.hpp"
#include "ubsde/expr.hpp"
#include "ubsde/rng.hpp"

namespace ubsde {

namespace {

double euclid(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double t = a[i] - b[i];
        s += t * t;
    }
    return std::sqrt(s);
}

double take_param(std::map<std::string, double>& params,
                  const std::string& key, double fallback) {
    auto it = params.find(key);
    if (it == params.end()) return fallback;
    const double v = it->second;
    params.erase(it);
    return v;
}

void reject_leftovers(const std::map<std::string, double>& params,
                      const std::string& preset) {
    if (params.empty()) return;
    std::string keys;
    for (const auto& [key, value] : params) {
        if (!keys.empty()) keys += ", ";
        keys += key;
    }
    throw ConfigError("unknown parameter(s) for driver preset '" + preset +
                      "': " + keys);
}

CoefficientFn zero_fn() {
    return [](double, std::span<const double>, std::span<const double>,
              std::span<double> out) {
        std::fill(out.begin(), out.end(), 0.0);
    };
}

} // namespace

void Driver::h_exogenous(double t, std::span<const double> x,
                         std::span<double> out) const {
    const std::vector<double> zero_y(p * m, 0.0);
    h(t, x, zero_y, out);
}

LipschitzReport probe_lipschitz(const Driver& driver, std::size_t probe_pairs,
                                std::uint64_t seed) {
    const std::size_t p = driver.p, m = driver.m, d = driver.d;
    const NormalStream stream(seed, kProbeStream);

    LipschitzReport report;
    report.probes = probe_pairs;
    report.measured_alpha_h = std::numeric_limits<double>::infinity();

    std::vector<double> x1(p), x2(p), y1(p * m), y2(p * m);
    std::vector<double> out1(std::max({p, p * m, p * d}));
    std::vector<double> out2(out1.size());
    const std::vector<double> zero_y(p * m, 0.0);

    // Evaluates one coefficient at two probe points and folds the difference
    // quotient into a running extreme.
    auto quotient = [&](const CoefficientFn& fn, std::size_t out_size,
                        double t, std::span<const double> xa,
                        std::span<const double> ya,
                        std::span<const double> xb,
                        std::span<const double> yb) -> double {
        const double den = euclid(xa, xb) + euclid(ya, yb);
        if (den < 1e-12) return -1.0;
        fn(t, xa, ya, std::span<double>(out1.data(), out_size));
        fn(t, xb, yb, std::span<double>(out2.data(), out_size));
        return euclid(std::span<const double>(out1.data(), out_size),
                      std::span<const double>(out2.data(), out_size)) /
               den;
    };

    for (std::uint64_t q = 0; q < probe_pairs; ++q) {
        const double t = 2.0 * stream.uniform01(q, 0, 0);
        for (std::size_t c = 0; c < p; ++c) {
            x1[c] = stream.normal(q, 1, static_cast<std::uint32_t>(c));
            x2[c] = stream.normal(q, 2, static_cast<std::uint32_t>(c));
        }
        for (std::size_t c = 0; c < p * m; ++c) {
            y1[c] = stream.normal(q, 3, static_cast<std::uint32_t>(c));
            y2[c] = stream.normal(q, 4, static_cast<std::uint32_t>(c));
        }

        // Three pair kinds per draw: joint, x-only and y-only variation.
        // The x-only and y-only kinds are what make sharp constants
        // reachable (a joint denominator dilutes single-argument maps).
        const std::pair<std::span<const double>, std::span<const double>>
            kinds[3][2] = {
                {{x1, y1}, {x2, y2}},
                {{x1, y1}, {x2, y1}},
                {{x1, y1}, {x1, y2}},
            };
        for (const auto& kind : kinds) {
            const auto& [xa, ya] = kind[0];
            const auto& [xb, yb] = kind[1];
            report.measured_c_f = std::max(
                report.measured_c_f, quotient(driver.f, p, t, xa, ya, xb, yb));
            report.measured_c_g =
                std::max(report.measured_c_g,
                         quotient(driver.g, p * d, t, xa, ya, xb, yb));
            report.measured_c_h =
                std::max(report.measured_c_h,
                         quotient(driver.h, p * m, t, xa, ya, xb, yb));
        }
        report.measured_c_h_exo =
            std::max(report.measured_c_h_exo,
                     quotient(driver.h, p * m, t, x1, zero_y, x2, zero_y));
        const double qy = quotient(driver.h, p * m, t, x1, y1, x1, y2);
        if (qy >= 0.0)
            report.measured_alpha_h = std::min(report.measured_alpha_h, qy);
    }
    if (!std::isfinite(report.measured_alpha_h)) report.measured_alpha_h = 0.0;

    if (driver.lipschitz_c > 0.0) {
        const double checked_h = driver.additive_in_y ? report.measured_c_h_exo
                                                      : report.measured_c_h;
        const double measured = std::max(
            {report.measured_c_f, report.measured_c_g, checked_h});
        report.c_violated = measured > driver.lipschitz_c * (1.0 + 1e-6);
    }
    if (driver.monotone_alpha > 0.0)
        report.alpha_warning =
            report.measured_alpha_h < driver.monotone_alpha * (1.0 - 1e-6);
    return report;
}

std::vector<double> invert_h(const Driver& driver, double t,
                             std::span<const double> x,
                             std::span<const double> ybar,
                             const InversionOptions& options) {
    const std::size_t n = driver.p * driver.m;
    if (x.size() != driver.p || ybar.size() != n)
        throw ContractViolation("invert_h: x or ybar size does not match the "
                                "driver dimensions");

    std::vector<double> y(n);
    if (driver.additive_in_y) {
        std::vector<double> h0(n);
        driver.h_exogenous(t, x, h0);
        for (std::size_t i = 0; i < n; ++i) y[i] = ybar[i] - h0[i];
        return y;
    }

    const double c = driver.lipschitz_c;
    const double alpha = driver.monotone_alpha;
    if (c <= 0.0 || alpha <= 0.0)
        throw ConfigError("invert_h needs positive declared lipschitz_c and "
                          "monotone_alpha on driver '" +
                          driver.name + "'");

    std::vector<double> hy(n);
    auto residual = [&](const std::vector<double>& cand) {
        driver.h(t, x, cand, hy);
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double r = hy[i] - ybar[i];
            s += r * r;
        }
        return std::sqrt(s);
    };

    // Damped fixed point: contraction factor <= sqrt(1 - alpha^2/c^2) in the
    // scalar monotone case.
    const double lambda = alpha / (c * c);
    y.assign(ybar.begin(), ybar.end());
    double best = std::numeric_limits<double>::infinity();
    std::vector<double> best_y = y;
    std::size_t damped_iters = 0;
    for (; damped_iters < options.max_iterations; ++damped_iters) {
        const double res = residual(y);
        if (res < best) {
            best = res;
            best_y = y;
        }
        if (res <= options.tolerance) return y;
        for (std::size_t i = 0; i < n; ++i)
            y[i] += lambda * (ybar[i] - hy[i]);
    }

    // Fallback for the non-monotone cases the damping cannot handle: sweep
    // the entries with a bracketed secant, holding the other entries fixed
    // (assumes separable coupling; genuinely joint maps may still fail).
    y = best_y;
    std::vector<double> hs(n);
    auto phi = [&](std::size_t idx, double s) {
        y[idx] = s;
        driver.h(t, x, y, hs);
        return hs[idx] - ybar[idx];
    };
    const double tol_entry =
        0.5 * options.tolerance / std::sqrt(static_cast<double>(n));

    auto solve_entry = [&](std::size_t idx) {
        const double s0 = y[idx];
        double f0 = phi(idx, s0);
        if (std::abs(f0) <= tol_entry) return true;
        double a = s0, b = s0, fa = f0, fb = f0;
        double step = std::max(1.0, std::abs(f0) / alpha);
        bool bracketed = false;
        for (int k = 0; k < 64 && !bracketed; ++k) {
            const double sp = s0 + step;
            const double fp = phi(idx, sp);
            if (f0 * fp <= 0.0) {
                a = s0; fa = f0; b = sp; fb = fp;
                bracketed = true;
                break;
            }
            const double sm = s0 - step;
            const double fm = phi(idx, sm);
            if (f0 * fm <= 0.0) {
                a = sm; fa = fm; b = s0; fb = f0;
                bracketed = true;
                break;
            }
            step *= 2.0;
        }
        if (!bracketed) {
            phi(idx, s0);
            return false;
        }
        // Illinois-damped regula falsi on the bracket.
        int side = 0;
        for (int it = 0; it < 200; ++it) {
            double s;
            if (std::abs(fb - fa) > 1e-300)
                s = (a * fb - b * fa) / (fb - fa);
            else
                s = 0.5 * (a + b);
            if (!(s > std::min(a, b) && s < std::max(a, b)))
                s = 0.5 * (a + b);
            const double fs = phi(idx, s);
            if (std::abs(fs) <= tol_entry) return true;
            if (fa * fs < 0.0) {
                b = s; fb = fs;
                if (side == -1) fa *= 0.5;
                side = -1;
            } else {
                a = s; fa = fs;
                if (side == 1) fb *= 0.5;
                side = 1;
            }
            if (std::abs(b - a) < 1e-15 * (1.0 + std::abs(a))) break;
        }
        return std::abs(phi(idx, y[idx])) <= tol_entry;
    };

    const std::size_t max_sweeps = 8;
    for (std::size_t sweep = 0; sweep < max_sweeps; ++sweep) {
        for (std::size_t idx = 0; idx < n; ++idx) solve_entry(idx);
        const double res = residual(y);
        if (res < best) {
            best = res;
            best_y = y;
        }
        if (res <= options.tolerance) return y;
    }

    char msg[160];
    std::snprintf(msg, sizeof(msg),
                  "invert_h on driver '%s' stalled at residual %.3e after "
                  "%zu damped iterations and %zu secant sweeps",
                  driver.name.c_str(), best, damped_iters, max_sweeps);
    throw NumericalFailure(msg, best);
}

Driver make_driver_preset(const std::string& name,
                          const std::map<std::string, double>& params) {
    std::map<std::string, double> rest = params;
    Driver dr;
    dr.name = name;

    if (name == "zero") {
        dr.f = zero_fn();
        dr.g = zero_fn();
        dr.h = [](double, std::span<const double>, std::span<const double> y,
                  std::span<double> out) { out[0] = y[0]; };
        dr.lipschitz_c = 0.0;
        dr.monotone_alpha = 1.0;
        dr.additive_in_y = true;
    } else if (name == "linear_decay") {
        const double a = take_param(rest, "a", 0.5);
        dr.f = [a](double, std::span<const double> x, std::span<const double>,
                   std::span<double> out) { out[0] = a * x[0]; };
        dr.g = zero_fn();
        dr.h = [](double, std::span<const double>, std::span<const double> y,
                  std::span<double> out) { out[0] = y[0]; };
        dr.lipschitz_c = std::abs(a);
        dr.monotone_alpha = 1.0;
        dr.additive_in_y = true;
    } else if (name == "sin_y") {
        const double c = take_param(rest, "c", 0.3);
        dr.f = [c](double, std::span<const double>, std::span<const double> y,
                   std::span<double> out) { out[0] = c * std::sin(y[0]); };
        dr.g = [c](double, std::span<const double>, std::span<const double> y,
                   std::span<double> out) { out[0] = c * std::cos(y[0]); };
        dr.h = [](double, std::span<const double>, std::span<const double> y,
                  std::span<double> out) { out[0] = y[0]; };
        dr.lipschitz_c = std::abs(c);
        dr.monotone_alpha = 1.0;
        dr.additive_in_y = true;
    } else if (name == "xy_mixed") {
        const double a = take_param(rest, "a", 0.5);
        const double b = take_param(rest, "b", 0.3);
        const double hx = take_param(rest, "hx", 0.3);
        dr.f = [a, b](double, std::span<const double> x,
                      std::span<const double> y, std::span<double> out) {
            out[0] = a * x[0] + b * std::sin(y[0]);
        };
        dr.g = zero_fn();
        dr.h = [hx](double, std::span<const double> x,
                    std::span<const double> y, std::span<double> out) {
            out[0] = hx * x[0] + y[0];
        };
        dr.lipschitz_c = std::max({std::abs(a), std::abs(b), std::abs(hx)});
        dr.monotone_alpha = 1.0;
        dr.additive_in_y = true;
    } else if (name == "nonlinear_h") {
        dr.f = zero_fn();
        dr.g = zero_fn();
        dr.h = [](double, std::span<const double>, std::span<const double> y,
                  std::span<double> out) {
            out[0] = y[0] + 0.5 * std::sin(y[0]);
        };
        dr.lipschitz_c = 1.5;     // sup |1 + 0.5 cos|
        dr.monotone_alpha = 0.5;  // inf |1 + 0.5 cos|
        dr.additive_in_y = false;
    } else if (name == "scale_h") {
        const double k = take_param(rest, "k", 2.0);
        if (k <= 0.0)
            throw ConfigError("driver preset 'scale_h' needs k > 0");
        dr.f = zero_fn();
        dr.g = zero_fn();
        dr.h = [k](double, std::span<const double>, std::span<const double> y,
                   std::span<double> out) { out[0] = k * y[0]; };
        dr.lipschitz_c = k;
        dr.monotone_alpha = k;
        dr.additive_in_y = false;
    } else if (name == "affine_full") {
        dr.f = [](double, std::span<const double> x, std::span<const double> y,
                  std::span<double> out) {
            out[0] = 0.25 * x[0] + 0.25 * y[0];
        };
        dr.g = [](double, std::span<const double>, std::span<const double> y,
                  std::span<double> out) { out[0] = 0.2 * y[0]; };
        dr.h = [](double, std::span<const double> x, std::span<const double> y,
                  std::span<double> out) {
            out[0] = 0.5 * x[0] + 1.25 * y[0];
        };
        dr.lipschitz_c = 1.25;
        dr.monotone_alpha = 1.25;
        dr.additive_in_y = false;
    } else {
        throw ConfigError("unknown driver preset '" + name + "'");
    }

    reject_leftovers(rest, name);
    return dr;
}

std::vector<std::string> driver_preset_names() {
    return {"zero",        "linear_decay", "sin_y",      "xy_mixed",
            "nonlinear_h", "scale_h",      "affine_full"};
}

Driver make_driver_expr(const std::string& f_text, const std::string& g_text,
                        const std::string& h_text, double lipschitz_c,
                        double monotone_alpha, bool additive_in_y) {
    auto bind = [](const Expr& expr) -> CoefficientFn {
        return [expr](double t, std::span<const double> x,
                      std::span<const double> y, std::span<double> out) {
            out[0] = expr.eval({{"t", t}, {"x", x[0]}, {"y", y[0]}});
        };
    };
    Driver dr;
    dr.name = "expr(f=" + f_text + ", g=" + g_text + ", h=" + h_text + ")";
    dr.f = bind(Expr::parse(f_text));
    dr.g = bind(Expr::parse(g_text));
    dr.h = bind(Expr::parse(h_text));
    dr.lipschitz_c = lipschitz_c;
    dr.monotone_alpha = monotone_alpha;
    dr.additive_in_y = additive_in_y;
    return dr;
}

TerminalCondition make_terminal_preset(const std::string& name, double value) {
    TerminalCondition tc;
    tc.name = name;
    if (name == "constant") {
        tc.xi = [value](const PathBundle&, std::size_t, std::size_t,
                        std::span<double> out) { out[0] = value; };
    } else if (name == "brownian_T") {
        tc.xi = [](const PathBundle& bundle, std::size_t, std::size_t i,
                   std::span<double> out) {
            out[0] = bundle.b(i, bundle.grid.steps(), 0);
        };
    } else if (name == "brownian_T_squared") {
        tc.xi = [](const PathBundle& bundle, std::size_t, std::size_t i,
                   std::span<double> out) {
            const double bt = bundle.b(i, bundle.grid.steps(), 0);
            out[0] = bt * bt;
        };
    } else if (name == "canonical_T") {
        tc.xi = [](const PathBundle& bundle, std::size_t j, std::size_t,
                   std::span<double> out) {
            out[0] = bundle.c(j, bundle.grid.steps(), 0);
        };
    } else {
        throw ConfigError("unknown terminal preset '" + name + "'");
    }
    return tc;
}

std::vector<std::string> terminal_preset_names() {
    return {"constant", "brownian_T", "brownian_T_squared", "canonical_T"};
}

TerminalCondition make_terminal_expr(const std::string& expr_text) {
    const Expr expr = Expr::parse(expr_text);
    TerminalCondition tc;
    tc.name = "expr(" + expr_text + ")";
    tc.xi = [expr](const PathBundle& bundle, std::size_t j, std::size_t i,
                   std::span<double> out) {
        const std::size_t last = bundle.grid.steps();
        out[0] = expr.eval({{"B", bundle.b(i, last, 0)},
                            {"C", bundle.c(j, last, 0)},
                            {"T", bundle.grid.horizon()}});
    };
    return tc;
}

} // namespace ubsde
