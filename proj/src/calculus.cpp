#include "ubsde/calculus.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ubsde/errors.hpp"

namespace ubsde {

IntegralResult ito_liu_integral(const IntegrandPair& pair,
                                const PathBundle& bundle, std::size_t a,
                                std::size_t b) {
    if (pair.lookahead_flagged)
        throw ContractViolation(
            "integrand flagged as non-adapted (lookahead); refusing to integrate");
    // Node indices: the sum runs over subintervals [t_k, t_{k+1}) for
    // k in [a, b), so b may be at most the terminal node N.
    const std::size_t nn = bundle.grid.num_nodes();
    if (!(a < b) || b > nn - 1)
        throw ConfigError("integral bounds must satisfy a < b <= N");
    const std::size_t L = bundle.alpha.size();
    const std::size_t M = bundle.num_paths;
    const std::size_t p = pair.p;
    if (pair.y.shape().comps != p * pair.m || pair.z.shape().comps != p * pair.d)
        throw ContractViolation("integrand component counts do not match (p, m, d)");
    if (pair.m != bundle.brownian_dim || pair.d != bundle.canonical_dim)
        throw ContractViolation("integrand dimensions do not match the bundle");

    IntegralResult out;
    out.levels = L;
    out.paths = M;
    out.p = p;
    out.values.assign(L * M * p, 0.0);
    for (std::size_t j = 0; j < L; ++j)
        for (std::size_t i = 0; i < M; ++i) {
            double* acc = out.values.data() + (j * M + i) * p;
            for (std::size_t k = a; k < b; ++k) {
                std::span<const double> yk = pair.y.sample(j, i, k);
                std::span<const double> zk = pair.z.sample(j, i, k);
                for (std::size_t r = 0; r < p; ++r) {
                    double s = 0.0;
                    for (std::size_t q = 0; q < pair.m; ++q)
                        s += yk[r * pair.m + q] * bundle.db(i, k, q);
                    for (std::size_t e = 0; e < pair.d; ++e)
                        s += zk[r * pair.d + e] * bundle.dc(j, k, e);
                    acc[r] += s;
                }
            }
        }
    return out;
}

double MultiplicationTable::dt_coefficient(const Differential& dx1,
                                           const Differential& dx2) const {
    if (dx1.v.size() != dx2.v.size() || dx1.w.size() != dx2.w.size())
        throw ContractViolation("differential dimensions do not match");
    // Only dB^k dB^l = delta_kl dt survives; dt, dC and cross terms vanish.
    double s = 0.0;
    for (std::size_t k = 0; k < dx1.v.size(); ++k)
        for (std::size_t l = 0; l < dx2.v.size(); ++l)
            s += dx1.v[k] * dx2.v[l] * kronecker(k, l);
    return s;
}

double apply_product_rule(const Differential& dx1, const Differential& dx2,
                          const MultiplicationTable& table) {
    return table.dt_coefficient(dx1, dx2);
}

std::vector<std::string> builtin_g_names() {
    return {"x", "x_squared", "x1_x2", "exp_x", "t_x"};
}

SmoothFunction builtin_g(const std::string& name) {
    SmoothFunction g;
    g.name = name;
    if (name == "x") {
        g.arity = 1;
        g.value = [](double, std::span<const double> x) { return x[0]; };
        g.time_derivative = [](double, std::span<const double>) { return 0.0; };
        g.gradient = [](double, std::span<const double>, std::span<double> d) {
            d[0] = 1.0;
        };
        g.hessian = [](double, std::span<const double>, std::span<double> h) {
            h[0] = 0.0;
        };
    } else if (name == "x_squared") {
        g.arity = 1;
        g.value = [](double, std::span<const double> x) { return x[0] * x[0]; };
        g.time_derivative = [](double, std::span<const double>) { return 0.0; };
        g.gradient = [](double, std::span<const double> x, std::span<double> d) {
            d[0] = 2.0 * x[0];
        };
        g.hessian = [](double, std::span<const double>, std::span<double> h) {
            h[0] = 2.0;
        };
    } else if (name == "x1_x2") {
        g.arity = 2;
        g.value = [](double, std::span<const double> x) { return x[0] * x[1]; };
        g.time_derivative = [](double, std::span<const double>) { return 0.0; };
        g.gradient = [](double, std::span<const double> x, std::span<double> d) {
            d[0] = x[1];
            d[1] = x[0];
        };
        g.hessian = [](double, std::span<const double>, std::span<double> h) {
            h[0] = 0.0;
            h[1] = 1.0;
            h[2] = 1.0;
            h[3] = 0.0;
        };
    } else if (name == "exp_x") {
        g.arity = 1;
        g.value = [](double, std::span<const double> x) {
            return std::exp(x[0]);
        };
        g.time_derivative = [](double, std::span<const double>) { return 0.0; };
        g.gradient = [](double, std::span<const double> x, std::span<double> d) {
            d[0] = std::exp(x[0]);
        };
        g.hessian = [](double, std::span<const double> x, std::span<double> h) {
            h[0] = std::exp(x[0]);
        };
    } else if (name == "t_x") {
        g.arity = 1;
        g.value = [](double t, std::span<const double> x) { return t * x[0]; };
        g.time_derivative = [](double, std::span<const double> x) {
            return x[0];
        };
        g.gradient = [](double t, std::span<const double>, std::span<double> d) {
            d[0] = t;
        };
        g.hessian = [](double, std::span<const double>, std::span<double> h) {
            h[0] = 0.0;
        };
    } else {
        throw ConfigError("unknown built-in function '" + name + "'");
    }
    return g;
}

ResidualStats ito_liu_residual(const SmoothFunction& g,
                               const SdeCoefficients& coeffs,
                               const PathBundle& bundle) {
    const std::size_t p = coeffs.p;
    const std::size_t m = coeffs.m;
    const std::size_t d = coeffs.d;
    if (g.arity != p)
        throw ContractViolation("function arity does not match the state dimension");
    if (m != bundle.brownian_dim || d != bundle.canonical_dim)
        throw ContractViolation("coefficient dimensions do not match the bundle");
    if (coeffs.x0.size() != p)
        throw ConfigError("initial state must have p entries");

    const std::size_t L = bundle.alpha.size();
    const std::size_t M = bundle.num_paths;
    const std::size_t N = bundle.grid.steps();

    auto check_finite = [](double val) {
        if (!std::isfinite(val))
            throw InvalidValueError("non-finite derivative evaluation");
        return val;
    };

    std::vector<double> x(p), xn(p), u(p), v(p * m), w(p * d);
    std::vector<double> grad(p), grad_next(p), hess(p * p);

    ResidualStats stats;
    stats.samples = L * M;
    double sumsq = 0.0;
    for (std::size_t j = 0; j < L; ++j)
        for (std::size_t i = 0; i < M; ++i) {
            x = coeffs.x0;
            double t = bundle.grid.node(0);
            const double g_start = check_finite(g.value(t, x));
            double rhs = 0.0;
            g.gradient(t, x, grad);
            for (double& gv : grad) check_finite(gv);

            for (std::size_t k = 0; k < N; ++k) {
                t = bundle.grid.node(k);
                const double dt = bundle.grid.dt(k);
                coeffs.u(t, x, u);
                coeffs.v(t, x, v);
                coeffs.w(t, x, w);

                // Advance the state with the same increments the right side
                // integrates against.
                for (std::size_t r = 0; r < p; ++r) {
                    double dx = u[r] * dt;
                    for (std::size_t a = 0; a < m; ++a)
                        dx += v[r * m + a] * bundle.db(i, k, a);
                    for (std::size_t e = 0; e < d; ++e)
                        dx += w[r * d + e] * bundle.dc(j, k, e);
                    xn[r] = x[r] + dx;
                }
                const double tn = bundle.grid.node(k + 1);
                g.gradient(tn, xn, grad_next);
                for (double& gv : grad_next) check_finite(gv);
                g.hessian(t, x, hess);
                for (double& hv : hess) check_finite(hv);

                // dB part: left endpoint.
                for (std::size_t r = 0; r < p; ++r)
                    for (std::size_t a = 0; a < m; ++a)
                        rhs += grad[r] * v[r * m + a] * bundle.db(i, k, a);
                // dt and dC parts: trapezoid between the node endpoints.
                const double dt_g =
                    0.5 * (check_finite(g.time_derivative(t, x)) +
                           check_finite(g.time_derivative(tn, xn)));
                rhs += dt_g * dt;
                for (std::size_t r = 0; r < p; ++r) {
                    double drift = 0.5 * (grad[r] + grad_next[r]) * u[r] * dt;
                    for (std::size_t e = 0; e < d; ++e)
                        drift += 0.5 * (grad[r] + grad_next[r]) *
                                 w[r * d + e] * bundle.dc(j, k, e);
                    rhs += drift;
                }
                // Second-order term through the multiplication table:
                // (1/2) sum_{r,s} G_{rs} sum_a v_{ra} v_{sa} dt.
                for (std::size_t r = 0; r < p; ++r)
                    for (std::size_t s = 0; s < p; ++s) {
                        double vv = 0.0;
                        for (std::size_t a = 0; a < m; ++a)
                            vv += v[r * m + a] * v[s * m + a];
                        rhs += 0.5 * hess[r * p + s] * vv * dt;
                    }

                x.swap(xn);
                grad.swap(grad_next);
            }
            const double g_end =
                check_finite(g.value(bundle.grid.node(N), x));
            const double lhs = g_end - g_start;
            const double res = lhs - rhs;
            sumsq += res * res;
            stats.max_abs = std::max(stats.max_abs, std::abs(res));
            stats.scale = std::max(stats.scale, std::abs(lhs));
        }
    stats.rms = std::sqrt(sumsq / static_cast<double>(stats.samples));
    return stats;
}

} // namespace ubsde
