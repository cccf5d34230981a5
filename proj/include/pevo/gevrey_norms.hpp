#pragma once

#include "pevo/grid.hpp"

namespace pevo {

/// Weight specification for the norm || <D>_h^m e^{rho <D>_h^{1/theta}} u ||_{L2}.
/// h = 1 recovers the plain bracket.
struct GevreyNormSpec {
    double m = 0.0;
    double rho = 0.0;       // may be negative (inverse weight)
    double theta = 2.0;     // > 1
    double h = 1.0;

    /// Largest exponent the weight can reach on this grid; must stay < 690
    /// so e^{...} fits in double range.
    double max_exponent(const Grid& grid) const;
    void check_guard(const Grid& grid) const;
};

/// Applies (<D>_h^m e^{rho <D>_h^{1/theta}})^{direction}, direction = +1 or -1.
StateVector gs_weight_apply(const StateVector& u, const GevreyNormSpec& spec, int direction);

/// || <D>_h^m e^{rho <D>_h^{1/theta}} u ||_{L2}, one multiplier pass + Parseval.
double gs_norm(const StateVector& u, const GevreyNormSpec& spec);

}  // namespace pevo
