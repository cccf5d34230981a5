#include "pevo/calculus.hpp"

#include <cmath>

namespace pevo {

namespace {

double factorial(int n) {
    double f = 1.0;
    for (int i = 2; i <= n; ++i) f *= i;
    return f;
}

double binom(int n, int k) { return factorial(n) / (factorial(k) * factorial(n - k)); }

// Mixed-partial jet of one scalar function at one node: J(a,b) = d_xi^a d_x^b f.
struct Jet {
    int A, B;
    std::vector<cplx> v;
    Jet(int a_max, int b_max) : A(a_max), B(b_max), v((a_max + 1) * (b_max + 1), cplx(0, 0)) {}
    cplx& at(int a, int b) { return v[a * (B + 1) + b]; }
    cplx at(int a, int b) const { return v[a * (B + 1) + b]; }
};

// Jet of e^{s f} from the jet of f (s = +-1), via the Leibniz recurrence
// on d(e^{sf}) = s (df) e^{sf}.
Jet jet_exp(const Jet& f, double s) {
    Jet e(f.A, f.B);
    e.at(0, 0) = std::exp(s * f.at(0, 0));
    for (int total = 1; total <= f.A + f.B; ++total) {
        for (int a = 0; a <= f.A; ++a) {
            const int b = total - a;
            if (b < 0 || b > f.B) continue;
            cplx acc(0.0, 0.0);
            if (a >= 1) {
                for (int c = 0; c <= a - 1; ++c)
                    for (int d = 0; d <= b; ++d)
                        acc += binom(a - 1, c) * binom(b, d) * s * f.at(c + 1, d) *
                               e.at(a - 1 - c, b - d);
            } else {
                for (int d = 0; d <= b - 1; ++d)
                    acc += binom(b - 1, d) * s * f.at(0, d + 1) * e.at(0, b - 1 - d);
            }
            e.at(a, b) = acc;
        }
    }
    return e;
}

Jet jet_from_tables(const DerivTableSet& t, int i, int j, int a_max, int b_max) {
    Jet f(a_max, b_max);
    for (int a = 0; a <= a_max; ++a)
        for (int b = 0; b <= b_max; ++b) f.at(a, b) = t.at(a, b)(i, j);
    return f;
}

double max_probe_rel_residual(const Eigen::MatrixXcd& exact, const Eigen::MatrixXcd& approx,
                              const std::vector<StateVector>& probes) {
    double worst = 0.0;
    for (const auto& u : probes) {
        Eigen::Map<const Eigen::VectorXcd> v(u.values().data(), u.values().size());
        const double nv = v.norm();
        if (nv == 0.0) continue;
        worst = std::max(worst, (exact * v - approx * v).norm() / nv);
    }
    return worst;
}

}  // namespace

Eigen::MatrixXcd ExpansionResult::sum_table(int upto) const {
    if (upto < 0) upto = n_terms;
    Eigen::MatrixXcd acc = base.table;
    for (int s = 0; s < upto && s < static_cast<int>(strata.size()); ++s)
        acc += strata[s].table;
    return acc;
}

ExpansionResult compose_asymptotic(const DerivTableSet& p, const DerivTableSet& q,
                                   int n_terms, const std::vector<StateVector>& probes,
                                   double tol) {
    if (n_terms < 1 || n_terms > 4)
        throw std::invalid_argument("compose_asymptotic: n_terms must be in 1..4");
    if (p.a_max < n_terms - 1 || q.b_max < n_terms - 1)
        throw std::invalid_argument("compose_asymptotic: derivative tables too shallow");
    const Grid& g = p.grid;

    ExpansionResult res{
        SymbolGrid{p.at(0, 0).cwiseProduct(q.at(0, 0)), g, 0.0, 0.0, "compose:base"},
        {}, n_terms, 0.0, false};
    for (int s = 1; s < n_terms; ++s) {
        const cplx dfac = std::pow(cplx(0.0, -1.0), s);  // D_x^s = (-i)^s d_x^s
        Eigen::MatrixXcd term =
            (dfac / factorial(s)) * p.at(s, 0).cwiseProduct(q.at(0, s));
        res.strata.push_back(SymbolGrid{std::move(term), g, 0.0, 0.0,
                                        "compose:stratum" + std::to_string(s)});
    }

    SymbolGrid psg{p.at(0, 0), g, 0.0, 0.0, "p"};
    SymbolGrid qsg{q.at(0, 0), g, 0.0, 0.0, "q"};
    const Eigen::MatrixXcd exact =
        operator_matrix(psg, QuantSide::Left).A * operator_matrix(qsg, QuantSide::Left).A;
    SymbolGrid ssg{res.sum_table(), g, 0.0, 0.0, "s_N"};
    const Eigen::MatrixXcd approx = operator_matrix(ssg, QuantSide::Left).A;
    res.residual_estimate = max_probe_rel_residual(exact, approx, probes);
    res.ok = res.residual_estimate < tol;
    return res;
}

ExpansionResult conjugation_expansion(const DerivTableSet& p, const DerivTableSet& lambda,
                                      int n_terms, const std::vector<StateVector>& probes,
                                      double tol) {
    if (n_terms < 1 || n_terms > 4)
        throw std::invalid_argument("conjugation_expansion: n_terms must be in 1..4");
    if (lambda.a_max < n_terms || lambda.b_max < n_terms || p.a_max < n_terms ||
        p.b_max < n_terms)
        throw std::invalid_argument("conjugation_expansion: derivative tables too shallow");
    const Grid& g = p.grid;
    const int N = g.N();

    ExpansionResult res{SymbolGrid{p.at(0, 0), g, 0.0, 0.0, "conj:base"},
                        {}, n_terms, 0.0, false};
    for (int s = 1; s <= n_terms; ++s)
        res.strata.push_back(SymbolGrid{Eigen::MatrixXcd::Zero(N, N), g, 0.0, 0.0,
                                        "conj:stratum" + std::to_string(s)});

    const cplx mi(0.0, -1.0);  // the -i in D_x
    for (int i = 0; i < N; ++i) {
        for (int j = 0; j < N; ++j) {
            Jet lam = jet_from_tables(lambda, i, j, n_terms, n_terms);
            Jet ep = jet_exp(lam, +1.0);
            Jet em = jet_exp(lam, -1.0);
            Jet pj = jet_from_tables(p, i, j, n_terms, n_terms);
            for (int s = 1; s <= n_terms; ++s) {
                cplx stratum(0.0, 0.0);
                for (int alpha = 0; alpha <= s; ++alpha) {
                    const int beta = s - alpha;
                    // (1/alpha!beta!) d_xi^alpha { d_xi^beta e^L . D_x^beta p . D_x^alpha e^-L }
                    cplx term(0.0, 0.0);
                    for (int a1 = 0; a1 <= alpha; ++a1)
                        for (int a2 = 0; a2 + a1 <= alpha; ++a2) {
                            const int a3 = alpha - a1 - a2;
                            const double mult =
                                factorial(alpha) /
                                (factorial(a1) * factorial(a2) * factorial(a3));
                            term += mult * ep.at(a1 + beta, 0) *
                                    (std::pow(mi, beta) * pj.at(a2, beta)) *
                                    (std::pow(mi, alpha) * em.at(a3, alpha));
                        }
                    stratum += term / (factorial(alpha) * factorial(beta));
                }
                res.strata[s - 1].table(i, j) = stratum;
            }
        }
    }

    SymbolGrid eL{lambda.at(0, 0).array().exp().matrix(), g, 0.0, 0.0, "e^Lambda"};
    SymbolGrid emL{(-lambda.at(0, 0).array()).exp().matrix(), g, 0.0, 0.0, "e^-Lambda"};
    SymbolGrid psg{p.at(0, 0), g, 0.0, 0.0, "p"};
    const Eigen::MatrixXcd exact = operator_matrix(eL, QuantSide::Left).A *
                                   operator_matrix(psg, QuantSide::Left).A *
                                   operator_matrix(emL, QuantSide::Reverse).A;
    SymbolGrid ssg{res.sum_table(), g, 0.0, 0.0, "conj_sum"};
    const Eigen::MatrixXcd approx = operator_matrix(ssg, QuantSide::Left).A;
    res.residual_estimate = max_probe_rel_residual(exact, approx, probes);
    res.ok = res.residual_estimate < tol;
    return res;
}

SymbolGrid tabulate_Lambda(const GevreyConfig& cfg, int sign_ap, const Grid& grid,
                           bool periodized) {
    const int N = grid.N();
    SymbolGrid sg{Eigen::MatrixXcd::Zero(N, N), grid, (cfg.p - 1) * (1.0 - cfg.sigma),
                  1.0 - cfg.sigma, periodized ? "Lambda~" : "Lambda"};
    const double L_per = periodized ? grid.L() : 0.0;
    const auto& xs = grid.x_nodes();
    const auto& xis = grid.xi_nodes();
    for (int j = 0; j < N; ++j) {
        std::vector<double> col(N, 0.0);
        for (int k = 1; k <= cfg.p - 1; ++k) {
            auto part = lambda_pk_column(k, xis[j], xs, cfg, sign_ap, L_per);
            for (int i = 0; i < N; ++i) col[i] += part[i];
        }
        for (int i = 0; i < N; ++i) sg.table(i, j) = cplx(col[i], 0.0);
    }
    return sg;
}

InversionResult invert_eLambda(const SymbolGrid& Lambda_table,
                               const std::vector<StateVector>& probes, double tol,
                               int j_max) {
    const Grid& g = Lambda_table.grid;
    const int N = g.N();
    SymbolGrid eL{Lambda_table.table.array().exp().matrix(), g, 0.0, 0.0, "e^Lambda"};
    SymbolGrid emL{(-Lambda_table.table.array()).exp().matrix(), g, 0.0, 0.0, "e^-Lambda"};

    const Eigen::MatrixXcd EL = operator_matrix(eL, QuantSide::Left).A;
    const Eigen::MatrixXcd ER = operator_matrix(emL, QuantSide::Reverse).A;
    const Eigen::MatrixXcd I = Eigen::MatrixXcd::Identity(N, N);
    const Eigen::MatrixXcd r = EL * ER - I;

    InversionResult res{OperatorMatrix{Eigen::MatrixXcd(), g, "(e^Lambda)^-1"},
                        0, 0.0, 0.0, 0.0, 0.0, false};
    res.r_spectral_proxy = probe_operator_norm(r, probes);

    Eigen::MatrixXcd series = I;
    Eigen::MatrixXcd term = I;
    double prev_norm = 1.0;
    int grew = 0;
    int used = 0;
    for (int j = 1; res.r_spectral_proxy >= tol && j <= j_max; ++j) {
        term = -(r * term);
        const double tn = probe_operator_norm(term, probes);
        if (tn >= prev_norm * 1.02 && tn > tol) {
            if (++grew >= 2)
                throw NeumannDivergence(
                    "invert_eLambda: Neumann term norms are growing (h too small); "
                    "growth ratio " +
                        std::to_string(tn / prev_norm),
                    tn / prev_norm);
        } else {
            grew = 0;
        }
        series += term;
        used = j;
        prev_norm = tn;
        if (tn < tol) break;
    }
    res.neumann_terms_used = used;
    res.inverse.A = ER * series;
    res.residual_right = probe_operator_norm(EL * res.inverse.A - I, probes);
    res.residual_left = probe_operator_norm(res.inverse.A * EL - I, probes);
    res.residual = std::max(res.residual_left, res.residual_right);
    res.ok = res.residual < std::max(tol * 10.0, 1e-12);
    return res;
}

SymbolGrid r_symbol_leading(const DerivTableSet& lambda_tables) {
    const Grid& g = lambda_tables.grid;
    return SymbolGrid{cplx(0.0, 1.0) * lambda_tables.at(1, 1), g, -1.0, -1.0, "r_leading"};
}

void check_time_weight_guard(const GevreyConfig& cfg, const Grid& grid) {
    const double top = Lambda_time(0.0, grid.xi_max(), cfg);
    if (!(top < 690.0))
        throw std::invalid_argument(
            "time weight overflows double range at Nyquist; reduce rho'/K or refine");
}

OperatorMatrix build_Q(double t, const GevreyConfig& cfg, const OperatorMatrix& E_left) {
    check_time_weight_guard(cfg, E_left.grid);
    auto W = multiplier_matrix(
        [&](double xi) { return cplx(std::exp(Lambda_time(t, xi, cfg)), 0.0); }, E_left.grid,
        "e^{Lambda_time}");
    return OperatorMatrix{W.A * E_left.A, E_left.grid, "Q(t)"};
}

OperatorMatrix build_Q_inverse(double t, const GevreyConfig& cfg,
                               const InversionResult& inv) {
    const Grid& g = inv.inverse.grid;
    check_time_weight_guard(cfg, g);
    auto Winv = multiplier_matrix(
        [&](double xi) { return cplx(std::exp(-Lambda_time(t, xi, cfg)), 0.0); }, g,
        "e^{-Lambda_time}");
    return OperatorMatrix{inv.inverse.A * Winv.A, g, "Q(t)^-1"};
}

}  // namespace pevo
