#include "ubsde/field.hpp"

#include <cmath>
#include <string>

#include "ubsde/errors.hpp"

namespace ubsde {

UncertainRandomField::UncertainRandomField(FieldShape shape, double fill)
    : shape_(shape) {
    if (shape.levels == 0 || shape.paths == 0 || shape.num_nodes == 0 ||
        shape.comps == 0)
        throw ConfigError("field shape must have positive extents");
    const std::size_t bytes = shape.total() * sizeof(double);
    if (shape.total() / shape.levels / shape.paths / shape.num_nodes !=
            shape.comps ||
        bytes > kMaxBytes)
        throw ConfigError(
            "field of shape (" + std::to_string(shape.levels) + ", " +
            std::to_string(shape.paths) + ", " +
            std::to_string(shape.num_nodes) + ", " +
            std::to_string(shape.comps) + ") exceeds the 1 GiB allocation guard");
    data_.assign(shape.total(), fill);
}

bool UncertainRandomField::all_finite() const {
    for (double v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

} // namespace ubsde
