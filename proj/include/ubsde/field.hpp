#pragma once
// The hybrid sample space (alpha levels x Monte-Carlo paths) and dense
// fields over it. A field stores one real block per
// (alpha level j, path i, time node k, vector component c).

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "ubsde/alpha_grid.hpp"

namespace ubsde {

struct HybridEnsemble {
    AlphaGrid alpha = AlphaGrid::single();
    std::size_t paths = 1;   // M
    std::uint64_t seed = 0;  // drives all randomness

    std::size_t total_samples() const { return alpha.size() * paths; }
};

struct FieldShape {
    std::size_t levels = 0;    // L
    std::size_t paths = 0;     // M
    std::size_t num_nodes = 0; // N + 1
    std::size_t comps = 0;     // vector components per sample/node

    std::size_t total() const { return levels * paths * num_nodes * comps; }
    bool operator==(const FieldShape&) const = default;
};

class UncertainRandomField {
public:
    // Allocation guard: a single field may not exceed this many bytes.
    static constexpr std::size_t kMaxBytes = std::size_t{1} << 30;

    UncertainRandomField() = default;
    explicit UncertainRandomField(FieldShape shape, double fill = 0.0);

    const FieldShape& shape() const { return shape_; }
    bool empty() const { return data_.empty(); }

    double& at(std::size_t j, std::size_t i, std::size_t k, std::size_t c) {
        return data_[index(j, i, k, c)];
    }
    double at(std::size_t j, std::size_t i, std::size_t k,
              std::size_t c) const {
        return data_[index(j, i, k, c)];
    }

    // All components at one (level, path, node).
    std::span<double> sample(std::size_t j, std::size_t i, std::size_t k) {
        return {data_.data() + index(j, i, k, 0), shape_.comps};
    }
    std::span<const double> sample(std::size_t j, std::size_t i,
                                   std::size_t k) const {
        return {data_.data() + index(j, i, k, 0), shape_.comps};
    }

    std::span<double> flat() { return data_; }
    std::span<const double> flat() const { return data_; }

    // True if every entry is finite.
    bool all_finite() const;

private:
    std::size_t index(std::size_t j, std::size_t i, std::size_t k,
                      std::size_t c) const {
        return ((j * shape_.paths + i) * shape_.num_nodes + k) * shape_.comps +
               c;
    }

    FieldShape shape_{};
    std::vector<double> data_;
};

} // namespace ubsde
