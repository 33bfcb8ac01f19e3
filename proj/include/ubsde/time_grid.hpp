#pragma once
// Discrete time axis 0 = t_0 < t_1 < ... < t_N = T.

#include <cstddef>
#include <vector>

namespace ubsde {

class TimeGrid {
public:
    static TimeGrid uniform(double horizon, std::size_t steps);
    // Custom node list; must be strictly increasing and start at 0.
    static TimeGrid custom(std::vector<double> nodes);

    double horizon() const { return nodes_.back(); }
    std::size_t steps() const { return nodes_.size() - 1; } // N
    std::size_t num_nodes() const { return nodes_.size(); } // N + 1
    double node(std::size_t k) const { return nodes_[k]; }
    double dt(std::size_t k) const { return nodes_[k + 1] - nodes_[k]; }
    const std::vector<double>& nodes() const { return nodes_; }

private:
    explicit TimeGrid(std::vector<double> nodes);

    std::vector<double> nodes_;
};

} // namespace ubsde
