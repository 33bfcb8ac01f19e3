#pragma once
// Regression-based conditional expectation on the hybrid ensemble and the
// numerical martingale representation built on top of it. Conditioning is
// always per alpha level: estimates never mix samples across levels.

#include <cstddef>
#include <span>
#include <vector>

#include "ubsde/field.hpp"
#include "ubsde/paths.hpp"

namespace ubsde {

// Polynomial feature family evaluated at one time node. The brownian kind
// uses monomials in the node's Brownian values; the state kind uses joint
// monomials in (state, Brownian) so that a constant previous iterate still
// leaves informative regressors. Monomials are enumerated by total degree,
// then lexicographically with state components first.
struct RegressionBasis {
    enum class Kind { brownian, state };
    Kind kind = Kind::brownian;
    std::size_t degree = 2;

    // Monomials of total degree <= degree in `vars` variables.
    static std::size_t feature_count(std::size_t vars, std::size_t degree);
    std::size_t variables(std::size_t p, std::size_t m) const;
};

// One least-squares fit for a single (alpha level, node) cell.
struct CondexpEstimate {
    std::size_t features = 0;         // nominal feature count F
    std::vector<double> coefficients; // F x p column-major per component
    std::vector<double> fitted;       // M x p row-major
    double residual_norm = 0.0;       // RMS of target - fitted
    // True when the kept regressors were still rank deficient and the fit
    // fell back to a small ridge.
    bool degraded = false;

    double coefficient(std::size_t feature, std::size_t comp) const {
        return coefficients[comp * features + feature];
    }
};

// Least-squares projection of a per-path target (M x p row-major) onto the
// basis features at node k of alpha level j. Constant targets are fitted
// exactly through the intercept; feature columns that are constant across
// paths (Brownian monomials at node 0, a frozen first iterate) are excluded
// from the normal equations and reported with zero coefficients.
//
// `state` supplies the per-sample state values and is required by the state
// basis kind; its component count is independent of the target width p.
CondexpEstimate fit_conditional_expectation(
    std::span<const double> target, std::size_t p, std::size_t node_k,
    const RegressionBasis& basis, const PathBundle& bundle,
    std::size_t level_j, const UncertainRandomField* state = nullptr);

// Integrand recovery: fits DeltaM_k (DeltaB_k)^T / dt_k on node-k features
// for every (level, node k < N) cell and returns the p x m integrand field.
// The terminal node carries the last fitted value so the field stays a
// left-continuous step process; integrals never read it.
// `degraded_cells` (optional) receives the number of ridge fallbacks;
// `threads` shares the per-level work without changing any result bit.
UncertainRandomField represent_martingale(
    const UncertainRandomField& martingale, const PathBundle& bundle,
    const RegressionBasis& basis, const UncertainRandomField* state = nullptr,
    std::size_t* degraded_cells = nullptr, std::size_t threads = 1);

} // namespace ubsde
