#pragma once

#include <string>
#include <vector>

#include "kubolab/ensemble.hpp"

namespace kubolab::checks {

struct CheckResult {
    std::string name;
    bool pass = false;
    std::string detail;
};

/// Per-realization structural identities on a configured ensemble:
/// hermiticity, bond-count mass, marginal symmetry, positivity, exact
/// evenness, two-route mass agreement, offset invariance, counting-measure
/// normalization, zero-frequency domination.
std::vector<CheckResult> identity_suite(const ensemble::RunConfig& cfg);

/// Clean-system pipeline against the closed-form reference.
std::vector<CheckResult> free_suite();

} // namespace kubolab::checks

namespace kubolab::cli {

/// Exit codes: 0 success, 1 configuration error, 2 numerical failure,
/// 3 check-suite failure.
int run(int argc, const char* const* argv);

} // namespace kubolab::cli
