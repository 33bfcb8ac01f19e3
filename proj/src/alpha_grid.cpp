#include "ubsde/alpha_grid.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "ubsde/errors.hpp"

namespace ubsde {

double liu_normal_inverse(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw ConfigError("alpha level must lie in the open interval (0,1)");
    return (std::numbers::sqrt3 / std::numbers::pi) *
           std::log(alpha / (1.0 - alpha));
}

AlphaGrid::AlphaGrid(std::vector<double> levels, std::vector<double> weights)
    : levels_(std::move(levels)), weights_(std::move(weights)) {
    const std::size_t L = levels_.size();
    if (L == 0) throw ConfigError("alpha grid needs at least one level");
    if (weights_.size() != L)
        throw ConfigError("alpha grid weights must match the level count");

    double wsum = 0.0;
    for (std::size_t j = 0; j < L; ++j) {
        if (!(levels_[j] > 0.0 && levels_[j] < 1.0))
            throw ConfigError("alpha levels must lie strictly inside (0,1)");
        if (j + 1 < L && !(levels_[j] < levels_[j + 1]))
            throw ConfigError("alpha levels must be strictly increasing");
        if (!(weights_[j] >= 0.0))
            throw ConfigError("alpha weights must be nonnegative");
        wsum += weights_[j];
    }
    if (std::abs(wsum - 1.0) > 1e-12)
        throw ConfigError("alpha weights must sum to 1");
    for (std::size_t j = 0; j < L; ++j) {
        const std::size_t jm = L - 1 - j;
        if (std::abs(levels_[j] + levels_[jm] - 1.0) > 1e-12 ||
            std::abs(weights_[j] - weights_[jm]) > 1e-15)
            throw ConfigError("alpha grid must be symmetric about 1/2");
    }

    // Quantiles: evaluate the lower half, mirror-negate the upper half so the
    // antisymmetry C_t(alpha) = -C_t(1-alpha) is exact in floating point.
    // The evaluation clips the level to [0.005, 0.995] first: the inverse
    // distribution is unbounded at the ends, and the clip keeps the alpha-path
    // Lipschitz constants finite on dense grids.
    quantiles_.assign(L, 0.0);
    for (std::size_t j = 0; j < L / 2; ++j) {
        quantiles_[j] = liu_normal_inverse(std::clamp(levels_[j], 0.005, 0.995));
        quantiles_[L - 1 - j] = -quantiles_[j];
    }
    if (L % 2 == 1) {
        const std::size_t mid = L / 2;
        quantiles_[mid] = (levels_[mid] == 0.5)
                              ? 0.0
                              : liu_normal_inverse(
                                    std::clamp(levels_[mid], 0.005, 0.995));
    }
}

AlphaGrid AlphaGrid::uniform_midpoints(std::size_t levels) {
    if (levels == 0) throw ConfigError("ensemble.levels must be positive");
    std::vector<double> a(levels), w(levels, 1.0 / static_cast<double>(levels));
    for (std::size_t j = 0; j < levels; ++j)
        a[j] = static_cast<double>(j + 1) / static_cast<double>(levels + 1);
    // Re-impose exact symmetry (the midpoint formula can round
    // asymmetrically); tail clipping happens at quantile evaluation.
    for (std::size_t j = 0; j < levels / 2; ++j)
        a[levels - 1 - j] = 1.0 - a[j];
    if (levels % 2 == 1) a[levels / 2] = 0.5;
    return AlphaGrid(std::move(a), std::move(w));
}

AlphaGrid AlphaGrid::single() {
    return AlphaGrid({0.5}, {1.0});
}

AlphaGrid AlphaGrid::custom(std::vector<double> levels,
                            std::vector<double> weights) {
    return AlphaGrid(std::move(levels), std::move(weights));
}

} // namespace ubsde
