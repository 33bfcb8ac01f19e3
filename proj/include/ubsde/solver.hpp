#pragma once
// Picard-iteration solver cascade for the four backward-equation forms, with
// per-iteration contraction diagnostics against the theoretical decay curves.

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ubsde/condexp.hpp"
#include "ubsde/drivers.hpp"
#include "ubsde/errors.hpp"
#include "ubsde/field.hpp"
#include "ubsde/paths.hpp"

namespace ubsde {

// Which pieces of the coefficient triple the solver treats as endogenous:
//   simple     f, g, h exogenous; Brownian integrand h + Y
//   y_driver   f(t, y), g(t, y); integrand h + Y
//   xy_driver  f(t, x, y), g(t, x, y), integrand h(t, x) + Y
//   general    full h(t, x, y) as the integrand, inverted for Y
enum class EquationForm { simple, y_driver, xy_driver, general };

std::string form_name(EquationForm form);
EquationForm form_from_name(const std::string& name);

struct SolutionPair {
    UncertainRandomField x; // comps = p
    UncertainRandomField y; // comps = p * m
};

// One Picard step: distances between consecutive iterates and the
// theoretical decay values at this index. Unused bound columns hold 0.
struct IterationRecord {
    std::size_t iteration = 0; // n = 1, 2, ...
    double phi0 = 0.0;      // integral of E|X_n - X_{n-1}|^2 over [0, T]
    double psi0 = 0.0;      // E integral of |Y_n - Y_{n-1}|^2 over [0, T]
    double phi_bound = 0.0; // (c1 e^{c1 T})^{n-1}/(n-1)! phi_1   (x iterations)
    double psi_bound = 0.0; // min of the two geometric curves    (y iterations)
    double noise_floor = 0.0; // 3 bootstrap sigma of the primary distance
};

struct ContractionReport {
    EquationForm form = EquationForm::simple;
    std::vector<IterationRecord> iterations;

    // Theoretical constants derived from the driver's declared c and the
    // first measured distance: K = 2c^2, c_tilde = psi_1(0),
    // K_tilde = c_tilde K e^{KT}, c1 = c + 4c^2.
    double lipschitz_c = 0.0;
    double k_const = 0.0;
    double c_tilde = 0.0;
    double k_tilde = 0.0;
    double c1 = 0.0;

    bool converged = false;
    double psi_final = 0.0;
    double noise_floor = 0.0; // floor at the last recorded iteration
    // Set when the requested tolerance sits at or below the noise floor.
    bool tolerance_warning = false;

    // Per-iteration solution snapshots, kept only when the config asks.
    std::vector<SolutionPair> iterates;
};

struct SolverConfig {
    RegressionBasis basis{};
    std::size_t max_iterations = 25;
    // Convergence: psi_n <= tolerance_rel * psi_1 (n >= 2), or an exact
    // fixed point psi_n == 0.
    double tolerance_rel = 1e-6;
    double picard_seed_value = 0.0; // Y_0 is identically this
    std::size_t threads = 1;
    bool record_iterates = false;
};

// Thrown when the Picard loop exhausts max_iterations; carries the report
// recorded so far so callers can still export the diagnostics.
class ConvergenceFailure : public NumericalFailure {
public:
    ConvergenceFailure(const std::string& what, ContractionReport report)
        : NumericalFailure(what, report.psi_final),
          report_(std::move(report)) {}

    const ContractionReport& report() const { return report_; }

private:
    ContractionReport report_;
};

// Exogenous coefficient processes for the simple form, materialized on the
// ensemble: f has comps p, g comps p x d, h comps p x m.
struct ExogenousProcesses {
    UncertainRandomField f;
    UncertainRandomField g;
    UncertainRandomField h;
    std::size_t p = 1, m = 1, d = 1;
};

// Evaluates the terminal condition on the ensemble; layout (level j, path i,
// component r), size L * M * p. Throws InvalidValueError on non-finite
// values.
std::vector<double> materialize_terminal(const TerminalCondition& terminal,
                                         const PathBundle& bundle);

// Backward solve with exogenous coefficients: per level, X(t_k) is the
// fitted conditional expectation of the tail sum, Ybar the recovered
// martingale integrand, and Y = Ybar - h. X(t_N) equals xi exactly.
// `state` feeds the state-basis regressors when the basis asks for them.
SolutionPair solve_simple(std::span<const double> xi,
                          const ExogenousProcesses& processes,
                          const PathBundle& bundle, const SolverConfig& config,
                          const UncertainRandomField* state = nullptr);

// Picard iteration freezing Y in f and g; h stays exogenous (evaluated at
// y = 0 with a zero state). Throws ConvergenceFailure when max_iterations
// runs out.
std::pair<SolutionPair, ContractionReport> solve_y_driver(
    std::span<const double> xi, const Driver& driver, const PathBundle& bundle,
    const SolverConfig& config);

// Outer Picard over X with the y-driver solve inside; Brownian integrand
// h(t, X_{n-1}) + Y.
std::pair<SolutionPair, ContractionReport> solve_xy_driver(
    std::span<const double> xi, const Driver& driver, const PathBundle& bundle,
    const SolverConfig& config);

// Full form: the Brownian integrand is h(t, X, Y) itself; Y is recovered by
// inverting h pointwise on the represented integrand. For drivers additive
// in y this reproduces solve_xy_driver exactly.
std::pair<SolutionPair, ContractionReport> solve_general(
    std::span<const double> xi, const Driver& driver, const PathBundle& bundle,
    const SolverConfig& config);

// Contraction verdict: fits the measured log-distances per iteration and
// compares against the theoretical decay (geometric for y iterations,
// factorial for x iterations), with a 0.1 log-slope margin, and checks every
// usable iteration against the bound envelope. Iterations at or below the
// noise floor are excluded; fewer than 3 usable ones is inconclusive.
struct ContractionVerdict {
    enum class Status { pass, fail, inconclusive };
    Status status = Status::inconclusive;
    std::size_t usable_iterations = 0;
    double measured_slope = 0.0;
    double bound_slope = 0.0;
    bool envelope_ok = true;
    std::string detail;
};

ContractionVerdict verify_contraction(const ContractionReport& report);

// Max over nodes of the chimera expectation of |DeltaX|^2 + |DeltaY|^2
// between two solutions on the same ensemble (uniqueness diagnostics).
double max_node_distance(const SolutionPair& a, const SolutionPair& b,
                         const PathBundle& bundle);

// CSV export, header exactly
// iteration,phi0,psi0,phi_bound,psi_bound,noise_floor
void write_contraction_csv(std::ostream& out, const ContractionReport& report);

} // namespace ubsde
