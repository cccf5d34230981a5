#pragma once

#include <vector>

#include "pevo/quantize.hpp"
#include "pevo/symbols.hpp"

namespace pevo {

/// Stratified partial sums of an asymptotic expansion. `base` is the
/// unexpanded symbol, `strata[s-1]` collects |alpha+beta| = s. The
/// residual is always measured against the exact dense matrix product on
/// the probe set: matrices are ground truth, expansions are diagnostics.
struct ExpansionResult {
    SymbolGrid base;
    std::vector<SymbolGrid> strata;
    int n_terms = 0;
    double residual_estimate = 0.0;
    bool ok = false;

    /// base + strata[0..upto-1] as one table (upto = n_terms by default).
    Eigen::MatrixXcd sum_table(int upto = -1) const;
};

/// Composition s ~ sum_alpha (1/alpha!) d_xi^alpha p D_x^alpha q, strata by
/// alpha; residual = max_u ||(op(p) op(q) - op(s_N)) u|| / ||u||.
ExpansionResult compose_asymptotic(const DerivTableSet& p, const DerivTableSet& q,
                                   int n_terms, const std::vector<StateVector>& probes,
                                   double tol = 1e-8);

/// Conjugation expansion of e^Lambda p(x,D) ^R(e^-Lambda):
///   p + sum_{1<=|a+b|<N} (1/a!b!) d_xi^a { d_xi^b e^L  D_x^b p  D_x^a e^-L },
/// built nodewise from derivative-table jets. Residual measured against
/// op_left(e^L) op(p) op_reverse(e^-L) on the probes; ok=false means the
/// bracket parameter h is too small for this expansion depth.
ExpansionResult conjugation_expansion(const DerivTableSet& p, const DerivTableSet& lambda,
                                      int n_terms, const std::vector<StateVector>& probes,
                                      double tol = 1e-3);

/// Neumann-series inverse of E = op_left(e^Lambda).
struct InversionResult {
    OperatorMatrix inverse;
    int neumann_terms_used = 0;
    double residual = 0.0;        // max of the two sides below
    double residual_right = 0.0;  // ||E E^-1 - I|| on probes
    double residual_left = 0.0;   // ||E^-1 E - I|| on probes
    double r_spectral_proxy = 0.0;  // probe norm of r = E_L E_R - I
    bool ok = false;
};

/// r is assembled exactly at matrix level as op_left(e^L) op_reverse(e^-L) - I
/// and summed as sum_j (-r)^j until the term norm drops below tol. Throws
/// NeumannDivergence when term norms grow (h too small).
InversionResult invert_eLambda(const SymbolGrid& Lambda_table,
                               const std::vector<StateVector>& probes, double tol = 1e-8,
                               int j_max = 30);

/// Fast tabulation of Lambda on the grid (column-cumulative quadrature).
/// periodized = true selects the operator-layer corrector (vanishes at the
/// wrap); required before quantizing e^{+-Lambda}.
SymbolGrid tabulate_Lambda(const GevreyConfig& cfg, int sign_ap, const Grid& grid,
                           bool periodized = false);

/// Leading symbol of r: -d_xi D_x Lambda = i d_xi d_x Lambda, from the
/// (1,1) derivative table. Used as the first-order check against the
/// matrix-level r.
SymbolGrid r_symbol_leading(const DerivTableSet& lambda_tables);

/// Q(t) = multiplier(e^{Lambda_time(t,.)}) o op_left(e^Lambda).
OperatorMatrix build_Q(double t, const GevreyConfig& cfg, const OperatorMatrix& E_left);

/// Q(t)^-1 = (e^Lambda)^-1 o multiplier(e^{-Lambda_time(t,.)}).
OperatorMatrix build_Q_inverse(double t, const GevreyConfig& cfg,
                               const InversionResult& inv);

/// Guard for the time-weight multiplier (exponent at Nyquist must stay
/// well inside double range).
void check_time_weight_guard(const GevreyConfig& cfg, const Grid& grid);

}  // namespace pevo
