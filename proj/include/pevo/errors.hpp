#pragma once

#include <stdexcept>
#include <string>

namespace pevo {

/// A coefficient failed a Theorem-hypothesis style bound on the sample lattice.
struct AssumptionViolation : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Neumann series probe norms grew instead of shrinking; h is too small.
struct NeumannDivergence : std::runtime_error {
    double growth_ratio;
    NeumannDivergence(const std::string& msg, double ratio)
        : std::runtime_error(msg), growth_ratio(ratio) {}
};

struct QuadratureFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace pevo
