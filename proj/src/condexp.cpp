#include "ubsde/condexp.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>

#include "ubsde/errors.hpp"
#include "ubsde/parallel.hpp"

namespace ubsde {

namespace {

// Exponent tuples of total degree <= degree over `vars` variables, ordered
// by total degree then lexicographically (first variable most significant).
void emit_exponents(std::size_t vars, std::size_t var, std::size_t remaining,
                    std::vector<unsigned>& current,
                    std::vector<std::vector<unsigned>>& out) {
    if (var + 1 == vars) {
        current[var] = static_cast<unsigned>(remaining);
        out.push_back(current);
        return;
    }
    for (std::size_t e = remaining + 1; e-- > 0;) {
        current[var] = static_cast<unsigned>(e);
        emit_exponents(vars, var + 1, remaining - e, current, out);
    }
}

std::vector<std::vector<unsigned>> monomials(std::size_t vars,
                                             std::size_t degree) {
    std::vector<std::vector<unsigned>> out;
    std::vector<unsigned> current(vars, 0);
    for (std::size_t total = 0; total <= degree; ++total)
        emit_exponents(vars, 0, total, current, out);
    return out;
}

double monomial_value(std::span<const double> values,
                      const std::vector<unsigned>& exponents) {
    double v = 1.0;
    for (std::size_t a = 0; a < exponents.size(); ++a)
        for (unsigned e = 0; e < exponents[a]; ++e) v *= values[a];
    return v;
}

} // namespace

std::size_t RegressionBasis::feature_count(std::size_t vars,
                                           std::size_t degree) {
    // C(vars + degree, degree), exact in integer arithmetic.
    std::size_t count = 1;
    for (std::size_t i = 1; i <= degree; ++i)
        count = count * (vars + i) / i;
    return count;
}

std::size_t RegressionBasis::variables(std::size_t p, std::size_t m) const {
    return kind == Kind::state ? p + m : m;
}

CondexpEstimate fit_conditional_expectation(
    std::span<const double> target, std::size_t p, std::size_t node_k,
    const RegressionBasis& basis, const PathBundle& bundle,
    std::size_t level_j, const UncertainRandomField* state) {
    const std::size_t paths = bundle.num_paths;
    const std::size_t m = bundle.brownian_dim;
    if (target.size() != paths * p)
        throw ConfigError("conditional expectation target has " +
                          std::to_string(target.size()) +
                          " entries, expected paths * p = " +
                          std::to_string(paths * p));
    if (node_k >= bundle.grid.num_nodes())
        throw ConfigError("conditional expectation node index out of range");
    if (basis.kind == RegressionBasis::Kind::state && state == nullptr)
        throw ConfigError("state basis requires a state field");

    for (double v : target)
        if (!std::isfinite(v))
            throw InvalidValueError(
                "conditional expectation target contains a non-finite value");

    // Regressor variables come from the node's information set: the state
    // field's components (if any) plus the Brownian components. The target
    // width p is independent of either.
    const std::size_t state_comps =
        basis.kind == RegressionBasis::Kind::state ? state->shape().comps : 0;
    const std::size_t vars = state_comps + m;
    const std::size_t features = RegressionBasis::feature_count(vars,
                                                                basis.degree);
    if (paths < 10 * features)
        throw ConfigError(
            "conditional expectation needs paths >= 10 * features: have " +
            std::to_string(paths) + " paths for " + std::to_string(features) +
            " features");

    CondexpEstimate estimate;
    estimate.features = features;
    estimate.coefficients.assign(features * p, 0.0);
    estimate.fitted.assign(paths * p, 0.0);

    // Per-component constant targets are exact through the intercept; only
    // the remaining components need a regression.
    std::vector<std::size_t> active;
    for (std::size_t r = 0; r < p; ++r) {
        double lo = target[r], hi = target[r];
        for (std::size_t i = 1; i < paths; ++i) {
            lo = std::min(lo, target[i * p + r]);
            hi = std::max(hi, target[i * p + r]);
        }
        if (lo == hi) {
            estimate.coefficients[r * features + 0] = lo;
            for (std::size_t i = 0; i < paths; ++i)
                estimate.fitted[i * p + r] = lo;
        } else {
            active.push_back(r);
        }
    }

    if (!active.empty()) {
        const auto exponents = monomials(vars, basis.degree);
        std::vector<double> values(vars);
        Eigen::MatrixXd design(paths, features);
        for (std::size_t i = 0; i < paths; ++i) {
            std::size_t a = 0;
            for (std::size_t r = 0; r < state_comps; ++r)
                values[a++] = state->at(level_j, i, node_k, r);
            for (std::size_t b = 0; b < m; ++b)
                values[a++] = bundle.b(i, node_k, b);
            for (std::size_t c = 0; c < features; ++c)
                design(static_cast<Eigen::Index>(i),
                       static_cast<Eigen::Index>(c)) =
                    monomial_value(values, exponents[c]);
        }

        // Columns constant across the ensemble carry no information at this
        // node; drop them (the intercept stays) so the factorization sees
        // only genuine regressors.
        std::vector<std::size_t> kept;
        kept.push_back(0);
        for (std::size_t c = 1; c < features; ++c) {
            const double first = design(0, static_cast<Eigen::Index>(c));
            bool constant = true;
            for (std::size_t i = 1; i < paths && constant; ++i)
                constant = design(static_cast<Eigen::Index>(i),
                                  static_cast<Eigen::Index>(c)) == first;
            if (!constant) kept.push_back(c);
        }

        Eigen::MatrixXd a(paths, static_cast<Eigen::Index>(kept.size()));
        for (std::size_t c = 0; c < kept.size(); ++c)
            a.col(static_cast<Eigen::Index>(c)) =
                design.col(static_cast<Eigen::Index>(kept[c]));
        Eigen::MatrixXd rhs(paths, static_cast<Eigen::Index>(active.size()));
        for (std::size_t c = 0; c < active.size(); ++c)
            for (std::size_t i = 0; i < paths; ++i)
                rhs(static_cast<Eigen::Index>(i),
                    static_cast<Eigen::Index>(c)) = target[i * p + active[c]];

        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
        Eigen::MatrixXd coef;
        if (qr.rank() < static_cast<Eigen::Index>(kept.size())) {
            estimate.degraded = true;
            Eigen::MatrixXd gram = a.transpose() * a;
            gram.diagonal().array() += 1e-10;
            coef = gram.ldlt().solve(a.transpose() * rhs);
        } else {
            coef = qr.solve(rhs);
        }
        const Eigen::MatrixXd fitted = a * coef;
        for (std::size_t c = 0; c < active.size(); ++c) {
            const std::size_t r = active[c];
            for (std::size_t f = 0; f < kept.size(); ++f)
                estimate.coefficients[r * features + kept[f]] =
                    coef(static_cast<Eigen::Index>(f),
                         static_cast<Eigen::Index>(c));
            for (std::size_t i = 0; i < paths; ++i)
                estimate.fitted[i * p + r] =
                    fitted(static_cast<Eigen::Index>(i),
                           static_cast<Eigen::Index>(c));
        }
    }

    double sq = 0.0;
    for (std::size_t i = 0; i < target.size(); ++i) {
        const double r = target[i] - estimate.fitted[i];
        sq += r * r;
    }
    estimate.residual_norm = std::sqrt(sq / static_cast<double>(paths * p));
    return estimate;
}

UncertainRandomField represent_martingale(
    const UncertainRandomField& martingale, const PathBundle& bundle,
    const RegressionBasis& basis, const UncertainRandomField* state,
    std::size_t* degraded_cells, std::size_t threads) {
    const FieldShape ms = martingale.shape();
    const std::size_t levels = bundle.alpha.size();
    const std::size_t paths = bundle.num_paths;
    const std::size_t nn = bundle.grid.num_nodes();
    const std::size_t m = bundle.brownian_dim;
    const std::size_t p = ms.comps;
    if (ms.levels != levels || ms.paths != paths || ms.num_nodes != nn)
        throw ConfigError(
            "martingale field shape does not match the path bundle");

    UncertainRandomField y(FieldShape{levels, paths, nn, p * m});
    std::vector<std::size_t> degraded_per_level(levels, 0);
    run_over_levels(levels, threads, [&](std::size_t j) {
        std::vector<double> increment(paths * p * m);
        for (std::size_t k = 0; k + 1 < nn; ++k) {
            const double dt = bundle.grid.dt(k);
            for (std::size_t i = 0; i < paths; ++i)
                for (std::size_t r = 0; r < p; ++r) {
                    const double dm = martingale.at(j, i, k + 1, r) -
                                      martingale.at(j, i, k, r);
                    for (std::size_t b = 0; b < m; ++b)
                        increment[(i * p + r) * m + b] =
                            dm * (bundle.b(i, k + 1, b) - bundle.b(i, k, b)) /
                            dt;
                }
            const CondexpEstimate fit = fit_conditional_expectation(
                increment, p * m, k, basis, bundle, j, state);
            if (fit.degraded) ++degraded_per_level[j];
            for (std::size_t i = 0; i < paths; ++i) {
                auto out = y.sample(j, i, k);
                for (std::size_t c = 0; c < p * m; ++c)
                    out[c] = fit.fitted[i * p * m + c];
            }
        }
        for (std::size_t i = 0; i < paths; ++i) {
            auto last = y.sample(j, i, nn - 1);
            auto prev = y.sample(j, i, nn >= 2 ? nn - 2 : 0);
            std::copy(prev.begin(), prev.end(), last.begin());
        }
    });
    if (degraded_cells) {
        *degraded_cells = 0;
        for (std::size_t n : degraded_per_level) *degraded_cells += n;
    }
    return y;
}

} // namespace ubsde
