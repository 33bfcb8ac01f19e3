#pragma once
// Mixed stochastic calculus: left-endpoint integrals against dB and dC, the
// differential multiplication table, and a numerical checker for the mixed
// chain rule along simulated paths.

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "ubsde/field.hpp"
#include "ubsde/paths.hpp"

namespace ubsde {

// Adapted integrand pair: Y (p x m per sample/node) against dB and
// Z (p x d per sample/node) against dC. Callers that constructed the
// integrands with lookahead must say so; the integral refuses them.
struct IntegrandPair {
    UncertainRandomField y; // comps = p * m, row-major (r, a)
    UncertainRandomField z; // comps = p * d, row-major (r, e)
    std::size_t p = 1, m = 1, d = 1;
    bool lookahead_flagged = false;
};

// Per-sample p-vector result of an integral over the hybrid ensemble.
struct IntegralResult {
    std::size_t levels = 0, paths = 0, p = 0;
    std::vector<double> values; // ((j * paths) + i) * p + r

    double at(std::size_t j, std::size_t i, std::size_t r) const {
        return values[(j * paths + i) * p + r];
    }
};

// Left-endpoint sum of Y dB + Z dC over nodes [a, b).
IntegralResult ito_liu_integral(const IntegrandPair& pair,
                                const PathBundle& bundle, std::size_t a,
                                std::size_t b);

// A scalar differential written as u dt + sum_a v_a dB^a + sum_e w_e dC^e.
struct Differential {
    double u = 0.0;
    std::vector<double> v; // size m
    std::vector<double> w; // size d
};

// The product table: dB^k dB^l = delta_kl dt, every dC and cross term 0.
struct MultiplicationTable {
    double kronecker(std::size_t k, std::size_t l) const {
        return k == l ? 1.0 : 0.0;
    }
    // dt-coefficient of dx1 * dx2.
    double dt_coefficient(const Differential& dx1,
                          const Differential& dx2) const;
};

double apply_product_rule(const Differential& dx1, const Differential& dx2,
                          const MultiplicationTable& table = {});

// Smooth scalar function G(t, x_1..x_p) with analytic derivative evaluators.
struct SmoothFunction {
    std::string name;
    std::size_t arity = 1; // p
    std::function<double(double, std::span<const double>)> value;
    std::function<double(double, std::span<const double>)> time_derivative;
    // gradient: p entries; hessian: p*p entries, row-major.
    std::function<void(double, std::span<const double>, std::span<double>)>
        gradient;
    std::function<void(double, std::span<const double>, std::span<double>)>
        hessian;
};

// Built-in G library: "x", "x_squared", "x1_x2", "exp_x", "t_x".
SmoothFunction builtin_g(const std::string& name);
std::vector<std::string> builtin_g_names();

// Coefficient processes of dX = u dt + v dB + w dC evaluated at (t, x),
// plus the initial state. v is p x m row-major, w is p x d row-major.
struct SdeCoefficients {
    std::size_t p = 1, m = 1, d = 1;
    std::function<void(double, std::span<const double>, std::span<double>)> u;
    std::function<void(double, std::span<const double>, std::span<double>)> v;
    std::function<void(double, std::span<const double>, std::span<double>)> w;
    std::vector<double> x0; // size p
};

struct ResidualStats {
    double rms = 0.0;
    double max_abs = 0.0;
    // max over samples of |G(end) - G(start)|; the natural size of the
    // telescoped left side, used to scale tolerances.
    double scale = 0.0;
    std::size_t samples = 0;
};

// Simulates X forward along the bundle, then compares the increment of G
// against the chain-rule right side: time and dC terms by trapezoid (exact
// for smooth G along the piecewise-linear alpha paths), dB terms by
// left-endpoint sums (where the O(sqrt(dt)) error genuinely lives), and the
// second-order term contracted through the multiplication table.
ResidualStats ito_liu_residual(const SmoothFunction& g,
                               const SdeCoefficients& coeffs,
                               const PathBundle& bundle);

} // namespace ubsde
