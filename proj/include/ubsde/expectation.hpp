#pragma once
// Two-layer expectation operators: the inner uncertain expectation over the
// alpha grid and the outer Monte-Carlo average over paths.

#include <cstddef>
#include <span>

#include "ubsde/alpha_grid.hpp"
#include "ubsde/field.hpp"

namespace ubsde {

struct ExpectationStats {
    double value = 0.0;
    double std_error = 0.0; // Monte-Carlo standard error of the path average
    std::size_t samples = 0;
};

// Inner uncertain expectation of one value per alpha level. Monotone inputs
// (either direction, ties allowed) use the weighted quantile sum, accumulated
// in mirrored pairs so antisymmetric inputs cancel exactly; everything else
// goes through the dual Choquet integral. The two routes agree because the
// level-set measure is the summed weight of the set.
double uncertain_expectation(std::span<const double> values_per_alpha,
                             const AlphaGrid& grid);

// Dual Choquet integral evaluated directly from the threshold decomposition:
// integral over r > 0 of M{v >= r} minus integral over r < 0 of M{v <= r}.
// Exposed as the cross-check route for the quantile representation.
double choquet_expectation(std::span<const double> values_per_alpha,
                           const AlphaGrid& grid);

// Chimera expectation E_P[E_M[.]] of one component of a field at one node,
// with the Monte-Carlo standard error of the outer average.
ExpectationStats chimera_expectation(const UncertainRandomField& field,
                                     std::size_t node, std::size_t comp,
                                     const AlphaGrid& grid);

} // namespace ubsde
