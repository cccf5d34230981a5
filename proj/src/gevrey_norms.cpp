#include "pevo/gevrey_norms.hpp"

#include <cmath>
#include <stdexcept>

namespace pevo {

double GevreyNormSpec::max_exponent(const Grid& grid) const {
    const double b = bracket_h(grid.xi_max(), h);
    return std::abs(m) * std::log(b) + std::abs(rho) * std::pow(b, 1.0 / theta);
}

void GevreyNormSpec::check_guard(const Grid& grid) const {
    if (!(theta > 1.0)) throw std::invalid_argument("GevreyNormSpec: theta must be > 1");
    if (!(h >= 1.0)) throw std::invalid_argument("GevreyNormSpec: h must be >= 1");
    if (max_exponent(grid) >= 690.0)
        throw std::invalid_argument(
            "GevreyNormSpec: weight overflows double range at Nyquist "
            "(rho * <xi_max>_h^{1/theta} too large)");
}

StateVector gs_weight_apply(const StateVector& u, const GevreyNormSpec& spec, int direction) {
    if (direction != 1 && direction != -1)
        throw std::invalid_argument("gs_weight_apply: direction must be +1 or -1");
    spec.check_guard(u.grid());
    const auto& xi = u.grid().xi_nodes();
    std::vector<cplx> spec_out = u.spectrum();
    for (size_t j = 0; j < spec_out.size(); ++j) {
        const double b = bracket_h(xi[j], spec.h);
        const double logw = spec.m * std::log(b) + spec.rho * std::pow(b, 1.0 / spec.theta);
        spec_out[j] *= std::exp(direction * logw);
    }
    return StateVector::from_spectrum(u.grid(), std::move(spec_out));
}

double gs_norm(const StateVector& u, const GevreyNormSpec& spec) {
    spec.check_guard(u.grid());
    // Parseval: dx * sum |u_i|^2 == (1/2L) sum |uhat_j|^2, so weight the
    // spectrum directly instead of going back to value space.
    const auto& xi = u.grid().xi_nodes();
    const auto& sp = u.spectrum();
    double acc = 0.0;
    for (size_t j = 0; j < sp.size(); ++j) {
        const double b = bracket_h(xi[j], spec.h);
        const double logw = spec.m * std::log(b) + spec.rho * std::pow(b, 1.0 / spec.theta);
        const double w = std::exp(logw);
        acc += w * w * std::norm(sp[j]);
    }
    return std::sqrt(acc / (2.0 * u.grid().L()));
}

}  // namespace pevo
