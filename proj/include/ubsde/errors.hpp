#pragma once
// Error taxonomy shared by every module. All exceptions derive from Error so
// callers can catch the library as a whole, and from the specific class when
// the failure mode matters (the CLI maps ConfigError to its own exit code).

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ubsde {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad sizes, unknown keys, inconsistent dimensions, out-of-range parameters.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Non-finite values where finite data is required.
class InvalidValueError : public Error {
public:
    using Error::Error;
};

// The caller broke an API precondition (non-adapted integrand, dimension
// mismatch between differentials, ...).
class ContractViolation : public Error {
public:
    using Error::Error;
};

// An iterative numerical routine exhausted its budget. Carries the best
// residual reached and, when meaningful, the sample coordinates that failed.
class NumericalFailure : public Error {
public:
    struct SampleCoord {
        std::size_t alpha_level = 0;
        std::size_t path = 0;
        std::size_t node = 0;
        bool valid = false;
    };

    NumericalFailure(const std::string& what, double best_residual)
        : Error(what), best_residual_(best_residual) {}
    NumericalFailure(const std::string& what, double best_residual,
                     SampleCoord coord)
        : Error(what), best_residual_(best_residual), coord_(coord) {}

    double best_residual() const { return best_residual_; }
    const SampleCoord& where() const { return coord_; }

private:
    double best_residual_;
    SampleCoord coord_{};
};

} // namespace ubsde
