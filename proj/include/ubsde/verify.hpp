#pragma once
// Desk-scale verification suites behind `ubsde verify`: quick empirical
// checks of the calculus rules, the martingale representation, the Picard
// contraction diagnostics, and the h-inversion round trip.

#include <iosfwd>
#include <string>
#include <vector>

namespace ubsde {

// Runs the tagged suite ("calculus", "representation", "contraction",
// "inversion", or "all"), printing one pass/fail line per check to `out`.
// Returns true iff every check passed; unknown tags raise ConfigError.
// `quick` shrinks the ensembles for a faster smoke run.
bool run_verification_suite(const std::string& tag, bool quick,
                            std::ostream& out);

std::vector<std::string> verification_suite_names();

} // namespace ubsde
