#pragma once
// Equation coefficients: the (f, g, h) triple with its declared regularity
// constants, terminal conditions, probe-based constant validation, and the
// numerical inverse of y -> h(t, x, y).

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "ubsde/paths.hpp"

namespace ubsde {

// Coefficient evaluator: writes the value at (t, x, y) into `out`.
// x has p entries; y is p x m row-major; out sizes are p for f,
// p x d for g and p x m for h.
using CoefficientFn = std::function<void(
    double t, std::span<const double> x, std::span<const double> y,
    std::span<double> out)>;

// A driver declares its coefficients together with the constants the
// contraction bounds and the inversion step rely on. The constants are
// trusted inputs, validated only by random probes (exact Lipschitz constants
// are generally uncomputable).
struct Driver {
    std::string name;
    std::size_t p = 1, m = 1, d = 1;

    CoefficientFn f; // drift, p
    CoefficientFn g; // canonical coefficient, p x d
    CoefficientFn h; // Brownian coefficient, p x m, full (t, x, y) map

    // Upper Lipschitz constant of the coefficients the active equation form
    // treats as endogenous.
    double lipschitz_c = 0.0;
    // Lower bi-Lipschitz constant of y -> h; makes the map invertible.
    double monotone_alpha = 0.0;
    // True when h(t, x, y) = h(t, x, 0) + y holds exactly, in which case
    // inversion is plain subtraction.
    bool additive_in_y = false;

    // The exogenous part h(t, x, 0), used by the forms whose Brownian
    // integrand is h0 + Y.
    void h_exogenous(double t, std::span<const double> x,
                     std::span<double> out) const;
};

// Terminal value, evaluated per (alpha level, path) from terminal path data.
struct TerminalCondition {
    std::string name;
    std::size_t p = 1;
    bool square_integrable = true; // declared by the caller
    std::function<void(const PathBundle& bundle, std::size_t level,
                       std::size_t path, std::span<double> out)>
        xi;
};

// Measured difference quotients from random probe pairs. The c flag compares
// the quotients the equation forms actually bound by the declared c: f and g
// everywhere, h0 in x for additive drivers, the full h map otherwise. The
// alpha check is advisory only: probe sets are finite, so a shortfall warns
// instead of failing.
struct LipschitzReport {
    double measured_c_f = 0.0;    // max quotient of f over (x, y) pairs
    double measured_c_g = 0.0;    // max quotient of g over (x, y) pairs
    double measured_c_h = 0.0;    // max quotient of the full h map
    double measured_c_h_exo = 0.0; // max x-quotient of h(t, x, 0)
    double measured_alpha_h = 0.0; // min y-only quotient of h
    bool c_violated = false;
    bool alpha_warning = false;
    std::size_t probes = 0;
};

LipschitzReport probe_lipschitz(const Driver& driver, std::size_t probe_pairs,
                                std::uint64_t seed = 0);

struct InversionOptions {
    double tolerance = 1e-10;      // Frobenius residual target
    std::size_t max_iterations = 200;
};

// Solves h(t, x, y) = ybar for y. Additive drivers subtract exactly; the
// general path runs a damped fixed point with step alpha / c^2 (a contraction
// under the bi-Lipschitz sandwich) and falls back to a per-entry bracketed
// secant sweep when the damping stalls. Throws NumericalFailure carrying the
// best residual reached when the budget runs out.
std::vector<double> invert_h(const Driver& driver, double t,
                             std::span<const double> x,
                             std::span<const double> ybar,
                             const InversionOptions& options = {});

// Named driver presets (all scalar, p = m = d = 1):
//   zero          f = g = 0, h = y
//   linear_decay  f = a x, g = 0, h = y                  (a = 0.5)
//   sin_y         f = c sin(y), g = c cos(y), h = y      (c = 0.3)
//   xy_mixed      f = a x + b sin(y), g = 0, h = hx x + y
//                                       (a = 0.5, b = 0.3, hx = 0.3)
//   nonlinear_h   f = g = 0, h = y + 0.5 sin(y)
//   scale_h       f = g = 0, h = k y                     (k = 2)
//   affine_full   f = 0.25 x + 0.25 y, g = 0.2 y, h = 0.5 x + 1.25 y
// Unknown preset names and unknown parameter keys raise ConfigError.
Driver make_driver_preset(const std::string& name,
                          const std::map<std::string, double>& params = {});
std::vector<std::string> driver_preset_names();

// Inline driver from expressions in the variables t, x, y (scalar dims).
// The declared constants and the additive flag come from the caller.
Driver make_driver_expr(const std::string& f_text, const std::string& g_text,
                        const std::string& h_text, double lipschitz_c,
                        double monotone_alpha, bool additive_in_y);

// Terminal presets: "constant" (uses `value`), "brownian_T",
// "brownian_T_squared", "canonical_T". Unknown names raise ConfigError.
TerminalCondition make_terminal_preset(const std::string& name,
                                       double value = 0.0);
std::vector<std::string> terminal_preset_names();

// Custom scalar terminal from an expression in B (terminal Brownian value),
// C (terminal canonical value) and T (the horizon).
TerminalCondition make_terminal_expr(const std::string& expr_text);

} // namespace ubsde
