#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pevo/errors.hpp"
#include "pevo/grid.hpp"

namespace pevo {

/// Every constant of the construction in one record:
/// evolution order p, coefficient decay exponent sigma, Gevrey indices
/// theta0 <= theta, cutoff index mu, horizon T, weight radii rho' < rho,
/// bracket parameter h, time-weight amplitude K, corrector amplitudes
/// M_{p-1}..M_1 and the cutoff transition radius R_ap.
struct GevreyConfig {
    int p = 3;
    double sigma = 0.9;
    double theta0 = 1.5;
    double theta = 2.0;
    double mu = 1.125;
    double T = 0.1;
    double rho = 0.5;
    double rho_prime = 0.25;
    double h = 4.0;
    double K = 0.0;
    std::vector<double> M = {0.5, 0.5};  // M_{p-1}, ..., M_1
    double R_ap = 2.0;

    /// Decay exponent (p-j) sigma / (p-1) attached to the level-j coefficient.
    double decay_exponent(int j) const { return (p - j) * sigma / (p - 1); }

    /// Right endpoint 1/((p-1)(1-sigma)) of the admissible theta interval.
    double theta_sup() const { return 1.0 / ((p - 1) * (1.0 - sigma)); }

    /// Full hypothesis check: sigma in ((p-2)/(p-1),1), theta0 <= theta <
    /// theta_sup, mu > 1, 0 < rho' < rho, positive M entries, h >= 1.
    void validate() const;

    /// Structural checks only (sizes, positivity of T, h >= 1). Used by the
    /// sweep and by degenerate unit configurations that intentionally sit
    /// outside the theorem's hypotheses.
    void validate_relaxed() const;
};

// ---------------------------------------------------------------------------
// Cutoffs.  Both are built from the classic exp(-1/s) transition
//   step(s) = f(s) / (f(s) + f(1-s)),  f(s) = exp(-1/s),
// the ratio form of the bump exp(-1/(1-t^2)); Gevrey-type derivative growth
// is asserted numerically by the estimate fitters, not assumed.
// ---------------------------------------------------------------------------

/// C-infinity monotone step: 0 for s <= 0, 1 for s >= 1.
double smoothstep01(double s);

/// psi: 1 on |y| <= 1/2, 0 on |y| >= 1, smooth monotone in between.
double psi_cut(double y);

/// omega: 0 for |xi| <= 1, -sign_ap for |xi| > R_ap (odd in xi when p is
/// even, so that the corrector term a_p * omega * xi^{p-1} keeps one sign on
/// both half-lines).
double omega_cut(double xi, const GevreyConfig& cfg, int sign_ap);

/// Closed-form first derivatives of the cutoffs.
double psi_cut_dx(double y);
double omega_cut_dx(double xi, const GevreyConfig& cfg, int sign_ap);

// ---------------------------------------------------------------------------
// Corrector symbols lambda_{p-k} and their sums.
// ---------------------------------------------------------------------------

/// lambda_{p-k}(x,xi) = M_{p-k} omega(xi/h) <xi>_h^{1-k}
///                      int_0^x <y>^{-(p-k)sigma/(p-1)} psi(<y>/<xi>_h^{p-1}) dy,
/// with the integral done by adaptive Simpson (abs tol 1e-11).
double lambda_pk(int k, double x, double xi, const GevreyConfig& cfg, int sign_ap);

/// Same value at many x per fixed xi; xs must be ascending. One cumulative
/// sweep over the positive axis serves the whole column (the integrand is
/// even, so lambda is odd in x). L_per > 0 produces the periodized form
/// lambda - lambda(L_per, xi) S(x) used by the operator layer.
std::vector<double> lambda_pk_column(int k, double xi, std::span<const double> xs,
                                     const GevreyConfig& cfg, int sign_ap,
                                     double L_per = 0.0);

/// Sum over k = 1..p-1.
double Lambda_total(double x, double xi, const GevreyConfig& cfg, int sign_ap);

/// Exact d/dx of lambda_{p-k} (fundamental theorem of calculus).
double lambda_pk_dx(int k, double x, double xi, const GevreyConfig& cfg, int sign_ap);

/// d^2/(dxi dx) of lambda_{p-k}; closed form in x, product rule in xi with
/// high-order finite differences only inside the 1-D mollifier factors.
double lambda_pk_dxi_dx(int k, double x, double xi, const GevreyConfig& cfg, int sign_ap);

/// Time weight K(T-t)<xi>_h^{(p-1)(1-sigma)} + rho' <xi>_h^{1/theta}.
double Lambda_time(double t, double xi, const GevreyConfig& cfg);

// ---------------------------------------------------------------------------
// Periodized corrector for the operator layer. lambda is odd and saturating
// in x, so on the torus its value would jump at the wrap; the quantized
// weight then couples the two domain ends with amplification ~ e^{2 lambda(L)}
// and the Neumann inversion diverges. The operator layer therefore uses
///   lambda~(x,xi) = lambda(x,xi) - lambda(L,xi) S(x),
// with S a smooth odd return profile: 0 on |x| <= 0.55 L, +-1 for
// |x| >= 0.9 L. lambda~ agrees with lambda on the physics core and vanishes
// at the wrap. The first-order term the return band adds to the conjugated
// generator carries the sign of a_p omega lambda(L,.) < 0: it is dissipative
// on both half-lines and cannot spoil the energy bound. Symbol-level
// estimate checks and positivity scans stay on the plain lambda.
// ---------------------------------------------------------------------------

double return_profile(double x, double L);     // S(x)
double return_profile_dx(double x, double L);  // S'(x) >= 0, even

double lambda_pk_per(int k, double x, double xi, const GevreyConfig& cfg, int sign_ap,
                     double L_per);
double Lambda_total_per(double x, double xi, const GevreyConfig& cfg, int sign_ap,
                        double L_per);
double lambda_pk_per_dx(int k, double x, double xi, const GevreyConfig& cfg, int sign_ap,
                        double L_per);
double lambda_pk_per_dxi_dx(int k, double x, double xi, const GevreyConfig& cfg, int sign_ap,
                            double L_per);

// ---------------------------------------------------------------------------
// Scalar symbols with a derivative interface.
// ---------------------------------------------------------------------------

/// A symbol of (x, xi) carrying declared orders and a mixed-derivative
/// evaluator. When no custom derivative is installed, derivatives fall back
/// to nested high-order central differences.
struct ScalarSymbol {
    std::function<cplx(double x, double xi)> eval;
    /// Optional override: return true and set `out` when (a,b) is handled.
    std::function<bool(int a, int b, double x, double xi, cplx& out)> custom_deriv;
    double xi_order = 0.0;
    double x_order = 0.0;
    double fd_step_xi = 0.0;  // 0 = automatic (scale-aware)
    double fd_step_x = 0.0;

    cplx operator()(double x, double xi) const { return eval(x, xi); }
    /// d_xi^a d_x^b at (x, xi); a + b <= 6.
    cplx deriv(int a, int b, double x, double xi) const;
};

/// Free-function form used by the rest of the toolkit.
cplx symbol_derivative(const ScalarSymbol& s, int a, int b, double x, double xi);

/// Lambda as a ScalarSymbol: analytic x-derivative path, FD in xi.
/// L_per > 0 selects the periodized form.
ScalarSymbol make_Lambda_symbol(const GevreyConfig& cfg, int sign_ap, double L_per = 0.0);

// ---------------------------------------------------------------------------
// Tabulated symbols.
// ---------------------------------------------------------------------------

/// Dense table p(x_i, xi_j); row index = x node, column index = xi node.
struct SymbolGrid {
    Eigen::MatrixXcd table;
    Grid grid;
    double xi_order = 0.0;
    double x_order = 0.0;
    std::string label;
};

SymbolGrid tabulate(const std::function<cplx(double, double)>& f, const Grid& grid,
                    double xi_order, double x_order, std::string label);

/// Writes "i,j,x,xi,re,im" rows.
void symbol_grid_to_csv(const SymbolGrid& sg, const std::filesystem::path& file);

/// Set of derivative tables d_xi^a d_x^b s on the full grid, a <= a_max,
/// b <= b_max. The backbone of the composition/conjugation machinery.
struct DerivTableSet {
    Grid grid;
    int a_max = 0;
    int b_max = 0;
    std::vector<Eigen::MatrixXcd> tables;
    const Eigen::MatrixXcd& at(int a, int b) const;
    Eigen::MatrixXcd& at(int a, int b);
};

/// Tables for Lambda: column-cumulative quadrature for (0,0), shared
/// 9-point xi-stencils for (a,0), closed x-forms for b >= 1.
/// L_per > 0 builds tables of the periodized corrector instead.
DerivTableSet build_Lambda_tables(const GevreyConfig& cfg, int sign_ap, const Grid& grid,
                                  int a_max, int b_max, double L_per = 0.0);

/// Tables for an arbitrary symbol via its deriv() interface (use for
/// coefficient symbols with closed-form derivatives).
DerivTableSet build_tables_from_symbol(const ScalarSymbol& s, const Grid& grid,
                                       int a_max, int b_max);

// ---------------------------------------------------------------------------
// Estimate verification.
// ---------------------------------------------------------------------------

/// Sample lattice for estimate fitting; refined() inserts midpoints so the
/// coarse samples are a subset of the fine ones.
struct SampleLattice {
    std::vector<double> xs;
    std::vector<double> xis;
    static SampleLattice make(double x_extent, double xi_extent, int nx, int nxi);
    SampleLattice refined() const;
};

/// Fitted constants for the five estimate shapes of the corrector bounds:
///   (i)   |lambda| <= C <xi>_h^{(p-k)(1-sigma)}                (C analytic)
///   (ii)  |d_xi^a lambda| <= C^{a+1} a!^mu <xi>_h^{(p-k)(1-sigma)-a}, a>=1
///   (iii) |d_xi^a lambda| <= C^{a+1} a!^mu <xi>_h^{1-k-a} <x>^{1-(p-k)sigma/(p-1)}
///   (iv)  |d_xi^a lambda| <= C^{a+1} a!^mu <xi>_h^{-a} <x>^{(p-k)(1-sigma)/(p-1)}
///   (v)   |d_xi^a d_x^b lambda| <= C^{a+b+1}(a! b!)^mu <xi>_h^{1-k-a} <x>^{-(p-k)sigma/(p-1)-(b-1)}, b>=1
/// Each fitted C is the max over samples of the (a+b+1)-th root of the
/// normalized ratio, maximized over the index range a+b <= max_total_order.
struct EstimateReport {
    int k = 0;
    double C_i = 0, C_ii = 0, C_iii = 0, C_iv = 0, C_v = 0;
    double analytic_bound_i = 0;  // M_{p-k} / (1 - (p-k) sigma/(p-1))
    bool pass_i = false;          // C_i <= analytic_bound_i, no tolerance
    bool all_finite = false;
    /// sup |d_x lambda| / (<xi>_h^{1-k} <x>^{-s}); compare against M_{p-k}.
    double raw_ratio_dx = 0;
    std::map<std::string, double> fitted;  // per (shape, a, b) detail
};

EstimateReport verify_lambda_estimates(int k, const GevreyConfig& cfg, int sign_ap,
                                       const SampleLattice& lat, int max_total_order = 4);

/// Smallest C with |d_x^beta a(t,x)| <= C^{beta+1} beta!^{theta0}
/// <x>^{-(p-j)sigma/(p-1)-beta} over the (t,x) samples. Throws
/// AssumptionViolation when the ratio keeps growing toward the lattice edge
/// (decay too weak).
using CoeffDerivFn = std::function<cplx(int beta, double t, double x)>;
double gevrey_constant_estimate(const CoeffDerivFn& a, int j, const GevreyConfig& cfg,
                                int beta_max, double x_extent, int nx, int nt);

/// Log-log least squares decay fit in the region |xi| in [4h, Nyquist/2],
/// |x| in [1, L/2]; pass iff slope <= expected + 0.15 in each variable.
struct DecayFitReport {
    double xi_slope = 0, x_slope = 0;
    double expected_xi = 0, expected_x = 0;
    bool pass = false;
    bool inconclusive = false;
};

DecayFitReport verify_decay_orders(const SymbolGrid& sg, double expected_xi_order,
                                   double expected_x_order);

}  // namespace pevo
