#pragma once

#include <complex>
#include <memory>
#include <span>
#include <vector>

namespace pevo {

using cplx = std::complex<double>;

/// Japanese bracket with low-frequency parameter h: sqrt(h^2 + xi^2).
double bracket_h(double xi, double h);

/// Plain bracket <x> = sqrt(1 + x^2).
inline double bracket(double x) { return bracket_h(x, 1.0); }

/// Periodic spectral grid on [-L, L) with N uniform nodes and the centered
/// frequency lattice xi_j = (pi/L) (j - N/2).
///
/// Value type; the node tables and FFT plans live in a shared immutable
/// body, so copies are cheap and safe to share across threads.
class Grid {
public:
    static Grid make(double L, int N, double h);

    double L() const;
    int N() const;
    double h() const;

    const std::vector<double>& x_nodes() const;
    const std::vector<double>& xi_nodes() const;

    double dx() const;             // 2L/N
    double dxi() const;            // pi/L
    double xi_max() const;         // (pi/L)(N/2), attained at j = 0

    /// Forward transform: uhat_j = dx * sum_i e^{-i xi_j x_i} u_i.
    /// Discrete counterpart of the continuum Fourier transform with
    /// dslash-xi = d xi / (2 pi) on the inverse side.
    std::vector<cplx> forward(std::span<const cplx> values) const;

    /// Inverse transform: u_i = (1/2L) * sum_j e^{+i xi_j x_i} uhat_j.
    std::vector<cplx> inverse(std::span<const cplx> spectrum) const;

    bool same_as(const Grid& other) const;

private:
    struct Body;
    explicit Grid(std::shared_ptr<const Body> body);
    std::shared_ptr<const Body> body_;
};

/// Complex state on a Grid. Holds both the nodal values and the spectrum;
/// both are computed at construction, after which the object is immutable
/// (so it is freely shareable -- no cache invalidation races by design of
/// the representation, not by locking).
class StateVector {
public:
    static StateVector from_values(Grid grid, std::vector<cplx> values);
    static StateVector from_spectrum(Grid grid, std::vector<cplx> spectrum);
    static StateVector zero(Grid grid);

    const Grid& grid() const { return grid_; }
    const std::vector<cplx>& values() const { return values_; }
    const std::vector<cplx>& spectrum() const { return spectrum_; }

    /// Discrete L2 norm, sqrt(dx * sum |u_i|^2).
    double norm_l2() const;

private:
    StateVector(Grid grid, std::vector<cplx> values, std::vector<cplx> spectrum);
    Grid grid_;
    std::vector<cplx> values_;
    std::vector<cplx> spectrum_;
};

/// D_x^order u via the Fourier multiplier xi^order (D = -i d/dx).
StateVector spectral_derivative(const StateVector& u, int order);

/// Gaussian wavepacket exp(-(x-x0)^2/(2 w^2)) exp(i xi_c x); the standard
/// localized probe used throughout (Gaussian spectrum, negligible mass at
/// the periodic seam when |x0| stays in the interior).
StateVector gaussian_packet(const Grid& grid, double x0, double xi_c, double w);

/// Deterministic probe ensemble: n packets with seeded centers/frequencies,
/// kept inside |x0| <= 0.45 L and |xi_c| <= xi_max/4 so that both the
/// periodic seam and the Nyquist fringe stay below round-off in every probe.
std::vector<StateVector> probe_packets(const Grid& grid, int n, unsigned long long seed);

}  // namespace pevo
