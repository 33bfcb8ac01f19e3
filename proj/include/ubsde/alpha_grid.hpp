#pragma once
// Quantile-level discretization of the uncertainty coordinate. Levels are
// symmetric about 1/2 and the stored quantiles are mirror-negated, so
// antisymmetric functionals cancel exactly in floating point.

#include <cstddef>
#include <vector>

namespace ubsde {

// Inverse of the standard Liu-normal uncertainty distribution at horizon 1:
// (sqrt(3)/pi) * ln(alpha / (1 - alpha)).
double liu_normal_inverse(double alpha);

class AlphaGrid {
public:
    // L uniform midpoints j/(L+1), clipped to [0.005, 0.995], equal weights.
    static AlphaGrid uniform_midpoints(std::size_t levels = 99);
    // Single median level alpha = 1/2 (collapses the uncertainty coordinate).
    static AlphaGrid single();
    // Explicit levels/weights; must satisfy the symmetry invariants.
    static AlphaGrid custom(std::vector<double> levels,
                            std::vector<double> weights);

    std::size_t size() const { return levels_.size(); } // L
    double level(std::size_t j) const { return levels_[j]; }
    double weight(std::size_t j) const { return weights_[j]; }
    // Mirror-negated quantile of level j: quantile(L-1-j) == -quantile(j).
    double quantile(std::size_t j) const { return quantiles_[j]; }
    const std::vector<double>& levels() const { return levels_; }
    const std::vector<double>& weights() const { return weights_; }

private:
    AlphaGrid(std::vector<double> levels, std::vector<double> weights);

    std::vector<double> levels_;
    std::vector<double> weights_;
    std::vector<double> quantiles_;
};

} // namespace ubsde
