#include "ubsde/expectation.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "ubsde/errors.hpp"

namespace ubsde {

namespace {

void require_finite(std::span<const double> values) {
    for (double v : values)
        if (!std::isfinite(v))
            throw InvalidValueError(
                "uncertain expectation received a non-finite value");
}

bool is_monotone(std::span<const double> v) {
    bool up = true, down = true;
    for (std::size_t j = 0; j + 1 < v.size(); ++j) {
        if (v[j + 1] < v[j]) up = false;
        if (v[j + 1] > v[j]) down = false;
    }
    return up || down;
}

// Weighted quantile sum accumulated in mirrored (j, L-1-j) pairs: on a
// symmetric grid an antisymmetric input cancels termwise, giving exact zero.
double mirrored_pair_sum(std::span<const double> v, const AlphaGrid& g) {
    const std::size_t L = v.size();
    double acc = 0.0;
    for (std::size_t j = 0; j < L / 2; ++j)
        acc += g.weight(j) * v[j] + g.weight(L - 1 - j) * v[L - 1 - j];
    if (L % 2 == 1) acc += g.weight(L / 2) * v[L / 2];
    return acc;
}

} // namespace

double choquet_expectation(std::span<const double> values_per_alpha,
                           const AlphaGrid& grid) {
    require_finite(values_per_alpha);
    const std::size_t L = values_per_alpha.size();
    if (L != grid.size())
        throw ConfigError("uncertain expectation needs one value per level");

    // Sort (value, weight) pairs once; both threshold integrals walk them.
    std::vector<std::pair<double, double>> vw(L);
    for (std::size_t j = 0; j < L; ++j)
        vw[j] = {values_per_alpha[j], grid.weight(j)};
    std::sort(vw.begin(), vw.end());

    // Upper part: integral over r in (0, max v] of the weight of {v >= r}.
    // Between consecutive distinct positive values the level set is constant.
    double upper = 0.0;
    {
        double tail = 0.0; // weight of {v >= current threshold}
        double prev = 0.0; // previous positive threshold (starts at 0)
        // Walk values descending; accumulate tail weight, emit intervals.
        std::vector<std::pair<double, double>> desc(vw.rbegin(), vw.rend());
        std::size_t idx = 0;
        std::vector<std::pair<double, double>> thresholds; // (value, tailw)
        while (idx < desc.size() && desc[idx].first > 0.0) {
            const double r = desc[idx].first;
            while (idx < desc.size() && desc[idx].first == r)
                tail += desc[idx++].second;
            thresholds.emplace_back(r, tail);
        }
        // Ascending in r: interval (r_{i-1}, r_i] carries the tail weight of
        // the smallest threshold >= that interval, i.e. of r_i itself.
        prev = 0.0;
        for (auto it = thresholds.rbegin(); it != thresholds.rend(); ++it) {
            upper += (it->first - prev) * it->second;
            prev = it->first;
        }
    }

    // Lower part: integral over r in [min v, 0) of the weight of {v <= r}.
    double lower = 0.0;
    {
        double cum = 0.0;
        std::size_t idx = 0;
        std::vector<std::pair<double, double>> thresholds;
        while (idx < vw.size() && vw[idx].first < 0.0) {
            const double r = vw[idx].first;
            while (idx < vw.size() && vw[idx].first == r)
                cum += vw[idx++].second;
            thresholds.emplace_back(r, cum);
        }
        // Interval [r_i, r_{i+1}) carries the cumulative weight at r_i.
        for (std::size_t t = 0; t < thresholds.size(); ++t) {
            const double next =
                (t + 1 < thresholds.size()) ? thresholds[t + 1].first : 0.0;
            lower += (next - thresholds[t].first) * thresholds[t].second;
        }
    }

    return upper - lower;
}

double uncertain_expectation(std::span<const double> values_per_alpha,
                             const AlphaGrid& grid) {
    require_finite(values_per_alpha);
    if (values_per_alpha.size() != grid.size())
        throw ConfigError("uncertain expectation needs one value per level");
    if (is_monotone(values_per_alpha))
        return mirrored_pair_sum(values_per_alpha, grid);
    return choquet_expectation(values_per_alpha, grid);
}

ExpectationStats chimera_expectation(const UncertainRandomField& field,
                                     std::size_t node, std::size_t comp,
                                     const AlphaGrid& grid) {
    const FieldShape& s = field.shape();
    if (s.levels != grid.size())
        throw ConfigError("field level count does not match the alpha grid");
    if (s.paths == 0) throw ConfigError("chimera expectation of an empty ensemble");
    if (node >= s.num_nodes || comp >= s.comps)
        throw ConfigError("chimera expectation index out of range");

    std::vector<double> per_alpha(s.levels);
    double sum = 0.0, sumsq = 0.0;
    for (std::size_t i = 0; i < s.paths; ++i) {
        for (std::size_t j = 0; j < s.levels; ++j)
            per_alpha[j] = field.at(j, i, node, comp);
        const double inner = uncertain_expectation(per_alpha, grid);
        sum += inner;
        sumsq += inner * inner;
    }
    const double m = static_cast<double>(s.paths);
    ExpectationStats stats;
    stats.value = sum / m;
    stats.samples = s.paths;
    if (s.paths > 1) {
        const double var =
            std::max(0.0, (sumsq - sum * sum / m) / (m - 1.0));
        stats.std_error = std::sqrt(var / m);
    }
    return stats;
}

} // namespace ubsde
