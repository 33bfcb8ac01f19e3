#include "ubsde/time_grid.hpp"

#include <cmath>
#include <string>

#include "ubsde/errors.hpp"

namespace ubsde {

TimeGrid::TimeGrid(std::vector<double> nodes) : nodes_(std::move(nodes)) {
    if (nodes_.size() < 2)
        throw ConfigError("time grid needs at least one step (N >= 1)");
    if (nodes_.front() != 0.0)
        throw ConfigError("time grid must start at t_0 = 0");
    for (std::size_t k = 0; k + 1 < nodes_.size(); ++k) {
        if (!(nodes_[k] < nodes_[k + 1]))
            throw ConfigError("time grid nodes must be strictly increasing");
    }
    if (!std::isfinite(nodes_.back()))
        throw ConfigError("time grid horizon must be finite");
}

TimeGrid TimeGrid::uniform(double horizon, std::size_t steps) {
    if (!(horizon > 0.0))
        throw ConfigError("grid.T must be positive");
    if (steps == 0)
        throw ConfigError("grid.N must be a positive step count");
    std::vector<double> nodes(steps + 1);
    for (std::size_t k = 0; k <= steps; ++k)
        nodes[k] = horizon * static_cast<double>(k) / static_cast<double>(steps);
    nodes.back() = horizon;
    return TimeGrid(std::move(nodes));
}

TimeGrid TimeGrid::custom(std::vector<double> nodes) {
    return TimeGrid(std::move(nodes));
}

} // namespace ubsde
