#include "pevo/symbols.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

namespace pevo {

// ---------------------------------------------------------------------------
// Config validation.
// ---------------------------------------------------------------------------

void GevreyConfig::validate_relaxed() const {
    if (p < 2) throw std::invalid_argument("GevreyConfig: p must be >= 2");
    if (!(T > 0.0)) throw std::invalid_argument("GevreyConfig: T must be positive");
    if (!(h >= 1.0)) throw std::invalid_argument("GevreyConfig: h must be >= 1");
    if (static_cast<int>(M.size()) != p - 1)
        throw std::invalid_argument("GevreyConfig: M must have p-1 entries");
    if (!(R_ap > 1.0)) throw std::invalid_argument("GevreyConfig: R_ap must be > 1");
    if (K < 0.0) throw std::invalid_argument("GevreyConfig: K must be >= 0");
    if (!(mu > 1.0)) throw std::invalid_argument("GevreyConfig: mu must be > 1");
}

void GevreyConfig::validate() const {
    validate_relaxed();
    const double sigma_low = static_cast<double>(p - 2) / (p - 1);
    if (!(sigma > sigma_low && sigma < 1.0))
        throw std::invalid_argument("GevreyConfig: sigma must lie in ((p-2)/(p-1), 1)");
    if (!(theta0 > 1.0)) throw std::invalid_argument("GevreyConfig: theta0 must be > 1");
    if (!(theta >= theta0 && theta < theta_sup()))
        throw std::invalid_argument(
            "GevreyConfig: theta must lie in [theta0, 1/((p-1)(1-sigma)))");
    if (!(rho > 0.0) || !(rho_prime > 0.0) || !(rho_prime < rho))
        throw std::invalid_argument("GevreyConfig: need 0 < rho' < rho");
    for (double m : M)
        if (!(m > 0.0)) throw std::invalid_argument("GevreyConfig: M entries must be positive");
}

// ---------------------------------------------------------------------------
// Cutoffs.
// ---------------------------------------------------------------------------

double smoothstep01(double s) {
    if (s <= 0.0) return 0.0;
    if (s >= 1.0) return 1.0;
    const double f = std::exp(-1.0 / s);
    const double g = std::exp(-1.0 / (1.0 - s));
    return f / (f + g);
}

namespace {

double smoothstep01_dx(double s) {
    if (s <= 0.0 || s >= 1.0) return 0.0;
    const double f = std::exp(-1.0 / s);
    const double g = std::exp(-1.0 / (1.0 - s));
    const double fp = f / (s * s);
    const double gp = -g / ((1.0 - s) * (1.0 - s));
    const double sum = f + g;
    return (fp * g - f * gp) / (sum * sum);
}

constexpr double kReturnCore = 0.55;  // S == 0 inside this fraction of L
constexpr double kReturnFull = 0.90;  // |S| == 1 beyond this fraction of L

}  // namespace

double return_profile(double x, double L) {
    const double t = (std::abs(x) - kReturnCore * L) / ((kReturnFull - kReturnCore) * L);
    const double v = smoothstep01(t);
    return x >= 0 ? v : -v;
}

double return_profile_dx(double x, double L) {
    const double w = (kReturnFull - kReturnCore) * L;
    const double t = (std::abs(x) - kReturnCore * L) / w;
    return smoothstep01_dx(t) / w;
}

double psi_cut(double y) {
    const double a = std::abs(y);
    if (a <= 0.5) return 1.0;
    if (a >= 1.0) return 0.0;
    return 1.0 - smoothstep01(2.0 * a - 1.0);
}

double omega_cut(double xi, const GevreyConfig& cfg, int sign_ap) {
    const double a = std::abs(xi);
    if (a <= 1.0) return 0.0;
    const double ramp = smoothstep01((a - 1.0) / (cfg.R_ap - 1.0));
    double w = -static_cast<double>(sign_ap) * ramp;
    // For even p the corrector must flip with xi so that
    // a_p * omega * xi^{p-1} keeps one sign on both half-lines.
    if (cfg.p % 2 == 0 && xi < 0.0) w = -w;
    return w;
}

double psi_cut_dx(double y) {
    const double a = std::abs(y);
    if (a <= 0.5 || a >= 1.0) return 0.0;
    const double sgn = y >= 0 ? 1.0 : -1.0;
    return -2.0 * sgn * smoothstep01_dx(2.0 * a - 1.0);
}

double omega_cut_dx(double xi, const GevreyConfig& cfg, int sign_ap) {
    const double a = std::abs(xi);
    if (a <= 1.0 || a >= cfg.R_ap) return 0.0;
    const double d = smoothstep01_dx((a - 1.0) / (cfg.R_ap - 1.0)) / (cfg.R_ap - 1.0);
    double w = -static_cast<double>(sign_ap) * d;
    if (cfg.p % 2 != 0 && xi < 0.0) w = -w;  // odd p: omega even, derivative odd
    return w;
}

// ---------------------------------------------------------------------------
// Quadrature (adaptive Simpson).
// ---------------------------------------------------------------------------

namespace {

double simpson(double a, double b,
               double fa, double fm, double fb) {
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double adaptive_simpson_rec(const std::function<double(double)>& f, double a, double b,
                            double fa, double fm, double fb, double whole, double tol,
                            int depth) {
    if (depth > 40) throw QuadratureFailure("adaptive Simpson: depth limit reached");
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = simpson(a, m, fa, flm, fm);
    const double right = simpson(m, b, fm, frm, fb);
    const double delta = left + right - whole;
    if (std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
    return adaptive_simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth + 1) +
           adaptive_simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth + 1);
}

double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double tol) {
    if (a == b) return 0.0;
    const double m = 0.5 * (a + b);
    const double fa = f(a), fm = f(m), fb = f(b);
    const double whole = simpson(a, b, fa, fm, fb);
    return adaptive_simpson_rec(f, a, b, fa, fm, fb, whole, tol, 0);
}

// lambda building blocks ----------------------------------------------------

struct LambdaParts {
    double s_k;      // decay exponent (p-k) sigma / (p-1)
    double factor;   // M_{p-k} * omega(xi/h) * <xi>_h^{1-k}
    double B;        // <xi>_h^{p-1}, the psi window scale
    double y_max;    // support radius of the integrand
};

LambdaParts lambda_parts(int k, double xi, const GevreyConfig& cfg, int sign_ap) {
    if (k < 1 || k > cfg.p - 1) throw std::invalid_argument("lambda_pk: k out of range");
    LambdaParts parts{};
    parts.s_k = cfg.decay_exponent(k);
    const double w = omega_cut(xi / cfg.h, cfg, sign_ap);
    const double bh = bracket_h(xi, cfg.h);
    parts.factor = cfg.M[k - 1] * w * std::pow(bh, 1.0 - k);
    parts.B = std::pow(bh, cfg.p - 1);
    parts.y_max = std::sqrt(std::max(parts.B * parts.B - 1.0, 0.0));
    return parts;
}

double lambda_integrand(double y, double s_k, double B) {
    return std::pow(bracket(y), -s_k) * psi_cut(bracket(y) / B);
}

constexpr double kLambdaQuadTol = 1e-12;

}  // namespace

double lambda_pk(int k, double x, double xi, const GevreyConfig& cfg, int sign_ap) {
    const LambdaParts parts = lambda_parts(k, xi, cfg, sign_ap);
    if (parts.factor == 0.0 || x == 0.0) return 0.0;
    const double upper = std::min(std::abs(x), parts.y_max);
    if (upper <= 0.0) return 0.0;
    const double integral = adaptive_simpson(
        [&](double y) { return lambda_integrand(y, parts.s_k, parts.B); }, 0.0, upper,
        kLambdaQuadTol);
    return parts.factor * (x > 0 ? integral : -integral);
}

std::vector<double> lambda_pk_column(int k, double xi, std::span<const double> xs,
                                     const GevreyConfig& cfg, int sign_ap, double L_per) {
    const LambdaParts parts = lambda_parts(k, xi, cfg, sign_ap);
    std::vector<double> out(xs.size(), 0.0);
    if (parts.factor == 0.0) return out;

    // Cumulative integral through the sorted |x| checkpoints.
    std::vector<std::pair<double, size_t>> order(xs.size());
    for (size_t i = 0; i < xs.size(); ++i)
        order[i] = {std::min(std::abs(xs[i]), parts.y_max), i};
    std::sort(order.begin(), order.end());

    auto f = [&](double y) { return lambda_integrand(y, parts.s_k, parts.B); };
    double prev = 0.0, acc = 0.0;
    for (const auto& [a, idx] : order) {
        if (a > prev) {
            acc += adaptive_simpson(f, prev, a, kLambdaQuadTol * 0.1);
            prev = a;
        }
        out[idx] = parts.factor * (xs[idx] >= 0 ? acc : -acc);
    }
    if (L_per > 0.0) {
        const double top = std::min(L_per, parts.y_max);
        if (top > prev) acc += adaptive_simpson(f, prev, top, kLambdaQuadTol * 0.1);
        const double sat = parts.factor * acc;
        for (size_t i = 0; i < xs.size(); ++i) out[i] -= sat * return_profile(xs[i], L_per);
    }
    return out;
}

double Lambda_total(double x, double xi, const GevreyConfig& cfg, int sign_ap) {
    double acc = 0.0;
    for (int k = 1; k <= cfg.p - 1; ++k) acc += lambda_pk(k, x, xi, cfg, sign_ap);
    return acc;
}

double lambda_pk_dx(int k, double x, double xi, const GevreyConfig& cfg, int sign_ap) {
    const LambdaParts parts = lambda_parts(k, xi, cfg, sign_ap);
    if (parts.factor == 0.0) return 0.0;
    return parts.factor * lambda_integrand(x, parts.s_k, parts.B);
}

double lambda_pk_per(int k, double x, double xi, const GevreyConfig& cfg, int sign_ap,
                     double L_per) {
    return lambda_pk(k, x, xi, cfg, sign_ap) -
           lambda_pk(k, L_per, xi, cfg, sign_ap) * return_profile(x, L_per);
}

double Lambda_total_per(double x, double xi, const GevreyConfig& cfg, int sign_ap,
                        double L_per) {
    double acc = 0.0;
    for (int k = 1; k <= cfg.p - 1; ++k) acc += lambda_pk_per(k, x, xi, cfg, sign_ap, L_per);
    return acc;
}

double lambda_pk_per_dx(int k, double x, double xi, const GevreyConfig& cfg, int sign_ap,
                        double L_per) {
    return lambda_pk_dx(k, x, xi, cfg, sign_ap) -
           lambda_pk(k, L_per, xi, cfg, sign_ap) * return_profile_dx(x, L_per);
}

// ---------------------------------------------------------------------------
// Central finite differences: 9-point stencils, orders 1..4.
// ---------------------------------------------------------------------------

namespace fd {

const double kC1[9] = {1.0 / 280, -4.0 / 105, 1.0 / 5, -4.0 / 5, 0.0,
                       4.0 / 5,   -1.0 / 5,   4.0 / 105, -1.0 / 280};
const double kC2[9] = {-1.0 / 560, 8.0 / 315, -1.0 / 5, 8.0 / 5, -205.0 / 72,
                       8.0 / 5,    -1.0 / 5,  8.0 / 315, -1.0 / 560};
const double kC3[9] = {-7.0 / 240,  3.0 / 10, -169.0 / 120, 61.0 / 30, 0.0,
                       -61.0 / 30,  169.0 / 120, -3.0 / 10, 7.0 / 240};
const double kC4[9] = {7.0 / 240,  -2.0 / 5, 169.0 / 60, -122.0 / 15, 91.0 / 8,
                       -122.0 / 15, 169.0 / 60, -2.0 / 5, 7.0 / 240};

const double* stencil(int order) {
    switch (order) {
        case 1: return kC1;
        case 2: return kC2;
        case 3: return kC3;
        case 4: return kC4;
        default: throw std::invalid_argument("fd: stencil order must be 1..4");
    }
}

cplx dn(const std::function<cplx(double)>& f, double t0, int order, double step) {
    if (order == 0) return f(t0);
    if (!(step > 0.0)) throw std::invalid_argument("fd: step underflow");
    const double* c = stencil(order);
    cplx acc(0.0, 0.0);
    for (int m = -4; m <= 4; ++m)
        if (c[m + 4] != 0.0) acc += c[m + 4] * f(t0 + m * step);
    return acc / std::pow(step, order);
}

double dn_real(const std::function<double(double)>& f, double t0, int order, double step) {
    return dn([&](double t) { return cplx(f(t), 0.0); }, t0, order, step).real();
}

}  // namespace fd

double lambda_pk_dxi_dx(int k, double x, double xi, const GevreyConfig& cfg, int sign_ap) {
    // d/dxi of  M omega(xi/h) <xi>_h^{1-k} <x>^{-s} psi(<x>/<xi>_h^{p-1}),
    // product rule over the three xi factors; the cutoff first derivatives
    // come from tight 1-D stencils on the mollifier itself.
    const double bh = bracket_h(xi, cfg.h);
    const double M = cfg.M[k - 1];
    const double s_k = cfg.decay_exponent(k);
    const double bx = bracket(x);
    const double decay = std::pow(bx, -s_k);
    const double B = std::pow(bh, cfg.p - 1.0);
    const double psi_arg = bx / B;
    const double psi_v = psi_cut(psi_arg);
    const double w = omega_cut(xi / cfg.h, cfg, sign_ap);

    const double w_prime =
        fd::dn_real([&](double z) { return omega_cut(z, cfg, sign_ap); }, xi / cfg.h, 1, 5e-3);
    const double psi_prime = fd::dn_real([](double z) { return psi_cut(z); }, psi_arg, 1, 5e-3);

    const double pow1k = std::pow(bh, 1.0 - k);
    double acc = 0.0;
    acc += (w_prime / cfg.h) * pow1k * psi_v;
    acc += w * (1.0 - k) * xi * std::pow(bh, -1.0 - k) * psi_v;
    acc += w * pow1k * psi_prime * bx * (-(cfg.p - 1.0) * xi * std::pow(bh, -cfg.p - 1.0));
    return M * decay * acc;
}

double lambda_pk_per_dxi_dx(int k, double x, double xi, const GevreyConfig& cfg, int sign_ap,
                            double L_per) {
    const double dsat =
        fd::dn_real([&](double z) { return lambda_pk(k, L_per, z, cfg, sign_ap); }, xi, 1,
                    0.04 * cfg.h);
    return lambda_pk_dxi_dx(k, x, xi, cfg, sign_ap) - dsat * return_profile_dx(x, L_per);
}

double Lambda_time(double t, double xi, const GevreyConfig& cfg) {
    if (t < -1e-12 || t > cfg.T + 1e-12)
        throw std::invalid_argument("Lambda_time: t outside [0, T]");
    const double bh = bracket_h(xi, cfg.h);
    const double order = (cfg.p - 1) * (1.0 - cfg.sigma);
    return cfg.K * (cfg.T - t) * std::pow(bh, order) +
           cfg.rho_prime * std::pow(bh, 1.0 / cfg.theta);
}

// ---------------------------------------------------------------------------
// ScalarSymbol.
// ---------------------------------------------------------------------------

namespace {

double auto_step_x(double x, double hint) {
    return hint > 0.0 ? hint : 0.02 * (1.0 + 0.25 * std::abs(x));
}
double auto_step_xi(double xi, double hint) {
    return hint > 0.0 ? hint : 0.02 * (1.0 + 0.25 * std::abs(xi));
}

}  // namespace

cplx ScalarSymbol::deriv(int a, int b, double x, double xi) const {
    if (a < 0 || b < 0) throw std::invalid_argument("ScalarSymbol::deriv: negative order");
    if (a + b > 6) throw std::invalid_argument("ScalarSymbol::deriv: a+b must be <= 6");
    if (custom_deriv) {
        cplx out;
        if (custom_deriv(a, b, x, xi, out)) return out;
    }
    if (a == 0 && b == 0) return eval(x, xi);
    if (b > 0) {
        const int use = std::min(b, 4);
        const double step = auto_step_x(x, fd_step_x) * (1.0 + 0.35 * use);
        return fd::dn([&](double t) { return deriv(a, b - use, t, xi); }, x, use, step);
    }
    const int use = std::min(a, 4);
    const double step = auto_step_xi(xi, fd_step_xi) * (1.0 + 0.35 * use);
    return fd::dn([&](double t) { return deriv(a - use, 0, x, t); }, xi, use, step);
}

cplx symbol_derivative(const ScalarSymbol& s, int a, int b, double x, double xi) {
    return s.deriv(a, b, x, xi);
}

namespace {

// Shared derivative logic for lambda_{p-k}: exact x-path (fundamental
// theorem of calculus + stencils on the closed integrand), xi-stencils on
// the quadrature only when no x-derivative is present. L_per > 0 switches
// to the periodized corrector; the saturation value lambda(L,xi) is cached
// per xi since stencil columns revisit the same offsets.
struct SingleLambda {
    GevreyConfig cfg;
    int k;
    int sign_ap;
    double L_per = 0.0;
    std::shared_ptr<std::map<double, double>> sat_cache =
        std::make_shared<std::map<double, double>>();

    double sat(double xi) const {
        auto it = sat_cache->find(xi);
        if (it != sat_cache->end()) return it->second;
        const double v = lambda_pk(k, L_per, xi, cfg, sign_ap);
        (*sat_cache)[xi] = v;
        return v;
    }

    double value(double x, double xi) const {
        double v = lambda_pk(k, x, xi, cfg, sign_ap);
        if (L_per > 0.0) v -= sat(xi) * return_profile(x, L_per);
        return v;
    }

    double dx_form(double x, double xi) const {
        double v = lambda_pk_dx(k, x, xi, cfg, sign_ap);
        if (L_per > 0.0) v -= sat(xi) * return_profile_dx(x, L_per);
        return v;
    }

    double step_xi(double xi) const {
        (void)xi;
        return 0.05 * cfg.h;
    }
    double step_x(double x) const { return 0.02 * (1.0 + 0.2 * std::abs(x)); }

    cplx deriv(int a, int b, double x, double xi) const {
        if (a + b > 6) throw std::invalid_argument("lambda deriv: a+b must be <= 6");
        if (b == 0) {
            if (a == 0) return value(x, xi);
            const int use = std::min(a, 4);
            const double st = step_xi(xi) * (1.0 + 0.3 * use);
            cplx v = fd::dn([&](double t) { return deriv(a - use, 0, x, t); }, xi, use, st);
            return v;
        }
        // b >= 1: reduce to d_xi^a d_x^{b-1} of the closed-form d_x lambda.
        std::function<cplx(double, double)> g = [&](double xx, double zz) -> cplx {
            return cplx(dx_form(xx, zz), 0.0);
        };
        // x derivatives first (cheap closed form), then xi stencil.
        auto dxb = [&](double zz) -> cplx {
            if (b == 1) return g(x, zz);
            const int use = std::min(b - 1, 4);
            const double st = step_x(x) * (1.0 + 0.3 * use);
            return fd::dn([&](double t) { return g(t, zz); }, x, use, st);
        };
        if (a == 0) return dxb(xi);
        // closed form here, no quadrature noise: a tighter step is safe
        const int use = std::min(a, 4);
        const double st = 0.4 * step_xi(xi) * (1.0 + 0.3 * use);
        return fd::dn(dxb, xi, use, st);
    }
};

}  // namespace

ScalarSymbol make_Lambda_symbol(const GevreyConfig& cfg, int sign_ap, double L_per) {
    auto lambdas = std::make_shared<std::vector<SingleLambda>>();
    for (int k = 1; k <= cfg.p - 1; ++k)
        lambdas->push_back(SingleLambda{cfg, k, sign_ap, L_per});
    ScalarSymbol s;
    s.xi_order = (cfg.p - 1) * (1.0 - cfg.sigma);
    s.x_order = 1.0 - cfg.sigma;
    s.fd_step_xi = 0.05 * cfg.h;
    s.eval = [lambdas](double x, double xi) -> cplx {
        double acc = 0.0;
        for (const auto& l : *lambdas) acc += l.value(x, xi);
        return cplx(acc, 0.0);
    };
    s.custom_deriv = [lambdas](int a, int b, double x, double xi, cplx& out) -> bool {
        cplx acc(0.0, 0.0);
        for (const auto& l : *lambdas) acc += l.deriv(a, b, x, xi);
        out = acc;
        return true;
    };
    return s;
}

// ---------------------------------------------------------------------------
// Tabulation.
// ---------------------------------------------------------------------------

SymbolGrid tabulate(const std::function<cplx(double, double)>& f, const Grid& grid,
                    double xi_order, double x_order, std::string label) {
    const int N = grid.N();
    SymbolGrid sg{Eigen::MatrixXcd(N, N), grid, xi_order, x_order, std::move(label)};
    const auto& xs = grid.x_nodes();
    const auto& xis = grid.xi_nodes();
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) {
            const cplx v = f(xs[i], xis[j]);
            if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
                throw std::runtime_error("tabulate: non-finite symbol value in '" + sg.label +
                                         "'");
            sg.table(i, j) = v;
        }
    return sg;
}

void symbol_grid_to_csv(const SymbolGrid& sg, const std::filesystem::path& file) {
    std::ofstream out(file);
    if (!out) throw std::runtime_error("symbol_grid_to_csv: cannot open " + file.string());
    out << "i,j,x,xi,re,im\n";
    out.precision(17);
    const auto& xs = sg.grid.x_nodes();
    const auto& xis = sg.grid.xi_nodes();
    for (int i = 0; i < sg.table.rows(); ++i)
        for (int j = 0; j < sg.table.cols(); ++j)
            out << i << ',' << j << ',' << xs[i] << ',' << xis[j] << ','
                << sg.table(i, j).real() << ',' << sg.table(i, j).imag() << '\n';
}

const Eigen::MatrixXcd& DerivTableSet::at(int a, int b) const {
    if (a < 0 || a > a_max || b < 0 || b > b_max)
        throw std::invalid_argument("DerivTableSet::at: index out of range");
    return tables[a * (b_max + 1) + b];
}

Eigen::MatrixXcd& DerivTableSet::at(int a, int b) {
    if (a < 0 || a > a_max || b < 0 || b > b_max)
        throw std::invalid_argument("DerivTableSet::at: index out of range");
    return tables[a * (b_max + 1) + b];
}

DerivTableSet build_Lambda_tables(const GevreyConfig& cfg, int sign_ap, const Grid& grid,
                                  int a_max, int b_max, double L_per) {
    if (a_max > 4) throw std::invalid_argument("build_Lambda_tables: a_max <= 4");
    const int N = grid.N();
    DerivTableSet set{grid, a_max, b_max, {}};
    set.tables.assign((a_max + 1) * (b_max + 1), Eigen::MatrixXcd::Zero(N, N));

    const auto& xs = grid.x_nodes();
    const auto& xis = grid.xi_nodes();
    const double delta = 0.08 * cfg.h;

    // b = 0 block: one 9-point xi stencil per lattice column serves every a.
    std::vector<std::vector<double>> cols(9);
    for (int j = 0; j < N; ++j) {
        for (int m = -4; m <= 4; ++m) {
            const double xi = xis[j] + m * delta;
            std::vector<double> col(N, 0.0);
            for (int k = 1; k <= cfg.p - 1; ++k) {
                auto part = lambda_pk_column(k, xi, xs, cfg, sign_ap, L_per);
                for (int i = 0; i < N; ++i) col[i] += part[i];
            }
            cols[m + 4] = std::move(col);
        }
        for (int i = 0; i < N; ++i) set.at(0, 0)(i, j) = cols[4][i];
        for (int a = 1; a <= a_max; ++a) {
            const double* c = fd::stencil(a);
            const double scale = 1.0 / std::pow(delta, a);
            for (int i = 0; i < N; ++i) {
                double acc = 0.0;
                for (int m = 0; m < 9; ++m)
                    if (c[m] != 0.0) acc += c[m] * cols[m][i];
                set.at(a, 0)(i, j) = acc * scale;
            }
        }
    }

    // b >= 1 block: pointwise closed x-forms, xi stencils on top.
    std::vector<SingleLambda> lambdas;
    for (int k = 1; k <= cfg.p - 1; ++k)
        lambdas.push_back(SingleLambda{cfg, k, sign_ap, L_per});
    for (int b = 1; b <= b_max; ++b)
        for (int a = 0; a <= a_max; ++a)
            for (int i = 0; i < N; ++i)
                for (int j = 0; j < N; ++j) {
                    cplx acc(0.0, 0.0);
                    for (const auto& l : lambdas) acc += l.deriv(a, b, xs[i], xis[j]);
                    set.at(a, b)(i, j) = acc;
                }
    return set;
}

DerivTableSet build_tables_from_symbol(const ScalarSymbol& s, const Grid& grid, int a_max,
                                       int b_max) {
    const int N = grid.N();
    DerivTableSet set{grid, a_max, b_max, {}};
    set.tables.assign((a_max + 1) * (b_max + 1), Eigen::MatrixXcd::Zero(N, N));
    const auto& xs = grid.x_nodes();
    const auto& xis = grid.xi_nodes();
    for (int a = 0; a <= a_max; ++a)
        for (int b = 0; b <= b_max; ++b)
            for (int i = 0; i < N; ++i)
                for (int j = 0; j < N; ++j) set.at(a, b)(i, j) = s.deriv(a, b, xs[i], xis[j]);
    return set;
}

// ---------------------------------------------------------------------------
// Estimate verification.
// ---------------------------------------------------------------------------

SampleLattice SampleLattice::make(double x_extent, double xi_extent, int nx, int nxi) {
    SampleLattice lat;
    lat.xs.resize(nx);
    lat.xis.resize(nxi);
    for (int i = 0; i < nx; ++i) lat.xs[i] = -x_extent + 2.0 * x_extent * i / (nx - 1);
    for (int j = 0; j < nxi; ++j) lat.xis[j] = -xi_extent + 2.0 * xi_extent * j / (nxi - 1);
    return lat;
}

SampleLattice SampleLattice::refined() const {
    auto refine = [](const std::vector<double>& v) {
        std::vector<double> out;
        out.reserve(2 * v.size() - 1);
        for (size_t i = 0; i + 1 < v.size(); ++i) {
            out.push_back(v[i]);
            out.push_back(0.5 * (v[i] + v[i + 1]));
        }
        out.push_back(v.back());
        return out;
    };
    return SampleLattice{refine(xs), refine(xis)};
}

namespace {

double factorial(int n) {
    double f = 1.0;
    for (int i = 2; i <= n; ++i) f *= i;
    return f;
}

}  // namespace

EstimateReport verify_lambda_estimates(int k, const GevreyConfig& cfg, int sign_ap,
                                       const SampleLattice& lat, int max_total_order) {
    EstimateReport rep;
    rep.k = k;
    const double s_k = cfg.decay_exponent(k);
    const double ord = (cfg.p - k) * (1.0 - cfg.sigma);
    rep.analytic_bound_i = cfg.M[k - 1] / (1.0 - s_k);

    SingleLambda lam{cfg, k, sign_ap};
    const double mu = cfg.mu;

    auto track = [&](double& slot, const std::string& key, double value) {
        slot = std::max(slot, value);
        auto it = rep.fitted.find(key);
        if (it == rep.fitted.end())
            rep.fitted[key] = value;
        else
            it->second = std::max(it->second, value);
    };

    rep.all_finite = true;
    for (double x : lat.xs) {
        for (double xi : lat.xis) {
            const double bh = bracket_h(xi, cfg.h);
            const double bx = bracket(x);
            // (i), exact values, no derivatives.
            const double v0 = std::abs(lam.value(x, xi));
            track(rep.C_i, "i", v0 / std::pow(bh, ord));
            // d_x lambda raw ratio for the beta=1 check.
            const double dxv = std::abs(lam.dx_form(x, xi));
            rep.raw_ratio_dx = std::max(
                rep.raw_ratio_dx, dxv / (std::pow(bh, 1.0 - k) * std::pow(bx, -s_k)));
            for (int a = 0; a <= max_total_order; ++a) {
                for (int b = 0; a + b <= max_total_order; ++b) {
                    if (a == 0 && b == 0) continue;
                    const double mag = std::abs(lam.deriv(a, b, x, xi));
                    if (!std::isfinite(mag)) {
                        rep.all_finite = false;
                        continue;
                    }
                    const double fac = std::pow(factorial(a) * factorial(b), mu);
                    const double root = 1.0 / (a + b + 1.0);
                    if (b == 0 && a >= 1) {
                        track(rep.C_ii, "ii:a=" + std::to_string(a),
                              std::pow(mag / (fac * std::pow(bh, ord - a)), root));
                    }
                    if (b == 0) {
                        track(rep.C_iii, "iii:a=" + std::to_string(a),
                              std::pow(mag / (fac * std::pow(bh, 1.0 - k - a) *
                                              std::pow(bx, 1.0 - s_k)),
                                       root));
                        track(rep.C_iv, "iv:a=" + std::to_string(a),
                              std::pow(mag / (fac * std::pow(bh, -static_cast<double>(a)) *
                                              std::pow(bx, (cfg.p - k) * (1.0 - cfg.sigma) /
                                                               (cfg.p - 1))),
                                       root));
                    }
                    if (b >= 1) {
                        track(rep.C_v,
                              "v:a=" + std::to_string(a) + ",b=" + std::to_string(b),
                              std::pow(mag / (fac * std::pow(bh, 1.0 - k - a) *
                                              std::pow(bx, -s_k - (b - 1))),
                                       root));
                    }
                }
            }
        }
    }
    rep.pass_i = rep.C_i <= rep.analytic_bound_i;
    rep.all_finite = rep.all_finite && std::isfinite(rep.C_ii) && std::isfinite(rep.C_iii) &&
                     std::isfinite(rep.C_iv) && std::isfinite(rep.C_v);
    return rep;
}

double gevrey_constant_estimate(const CoeffDerivFn& a, int j, const GevreyConfig& cfg,
                                int beta_max, double x_extent, int nx, int nt) {
    const double req = cfg.decay_exponent(j);
    double C = 0.0;
    for (int beta = 0; beta <= beta_max; ++beta) {
        double sup_inner = 0.0, sup_full = 0.0;
        const double fac = std::pow(factorial(beta), cfg.theta0);
        for (int it = 0; it < nt; ++it) {
            const double t = cfg.T * it / std::max(nt - 1, 1);
            for (int ix = 0; ix < nx; ++ix) {
                const double x = -x_extent + 2.0 * x_extent * ix / (nx - 1);
                const double mag = std::abs(a(beta, t, x));
                const double ratio = mag / (fac * std::pow(bracket(x), -req - beta));
                sup_full = std::max(sup_full, ratio);
                if (std::abs(x) <= 0.5 * x_extent) sup_inner = std::max(sup_inner, ratio);
            }
        }
        if (sup_full == 0.0) continue;
        const double C_full = std::pow(sup_full, 1.0 / (beta + 1));
        const double C_inner = std::pow(sup_inner, 1.0 / (beta + 1));
        if (C_inner > 0.0 && C_full > 1.2 * C_inner + 1e-12)
            throw AssumptionViolation(
                "gevrey_constant_estimate: ratio grows toward the lattice edge at beta=" +
                std::to_string(beta) + " (coefficient decay too weak for level " +
                std::to_string(j) + ")");
        C = std::max(C, C_full);
    }
    return C;
}

namespace {

// Least squares slope of (u_i, w_i); returns false when degenerate.
bool lsq_slope(const std::vector<double>& u, const std::vector<double>& w, double& slope) {
    if (u.size() < 4) return false;
    const double n = static_cast<double>(u.size());
    double su = 0, sw = 0, suu = 0, suw = 0;
    for (size_t i = 0; i < u.size(); ++i) {
        su += u[i];
        sw += w[i];
        suu += u[i] * u[i];
        suw += u[i] * w[i];
    }
    const double det = n * suu - su * su;
    if (std::abs(det) < 1e-12) return false;
    slope = (n * suw - su * sw) / det;
    return true;
}

}  // namespace

DecayFitReport verify_decay_orders(const SymbolGrid& sg, double expected_xi_order,
                                   double expected_x_order) {
    DecayFitReport rep;
    rep.expected_xi = expected_xi_order;
    rep.expected_x = expected_x_order;
    const Grid& g = sg.grid;
    const double h = g.h();
    const double L = g.L();
    const auto& xs = g.x_nodes();
    const auto& xis = g.xi_nodes();

    std::vector<int> xi_idx, x_idx;
    for (int j = 0; j < g.N(); ++j)
        if (std::abs(xis[j]) >= 4.0 * h && std::abs(xis[j]) <= 0.5 * g.xi_max())
            xi_idx.push_back(j);
    for (int i = 0; i < g.N(); ++i)
        if (std::abs(xs[i]) >= 1.0 && std::abs(xs[i]) <= 0.5 * L) x_idx.push_back(i);
    if (xi_idx.size() < 4 || x_idx.size() < 4) {
        rep.inconclusive = true;
        return rep;
    }

    auto quantiles = [](const std::vector<int>& v) {
        return std::vector<int>{v[v.size() / 4], v[v.size() / 2], v[3 * v.size() / 4]};
    };

    // xi slope at fixed large x (three rows, keep the worst).
    bool any = false;
    double xi_slope = -1e300;
    for (int i : quantiles(x_idx)) {
        std::vector<double> lu, lw;
        for (int j : xi_idx) {
            const double mag = std::abs(sg.table(i, j));
            if (mag < 1e-280) continue;
            lu.push_back(std::log(bracket_h(xis[j], h)));
            lw.push_back(std::log(mag));
        }
        double s;
        if (lsq_slope(lu, lw, s)) {
            xi_slope = std::max(xi_slope, s);
            any = true;
        }
    }
    double x_slope = -1e300;
    bool any_x = false;
    for (int j : quantiles(xi_idx)) {
        std::vector<double> lu, lw;
        for (int i : x_idx) {
            const double mag = std::abs(sg.table(i, j));
            if (mag < 1e-280) continue;
            lu.push_back(std::log(bracket(xs[i])));
            lw.push_back(std::log(mag));
        }
        double s;
        if (lsq_slope(lu, lw, s)) {
            x_slope = std::max(x_slope, s);
            any_x = true;
        }
    }
    if (!any || !any_x) {
        rep.inconclusive = true;
        return rep;
    }
    rep.xi_slope = xi_slope;
    rep.x_slope = x_slope;
    rep.pass = (xi_slope <= expected_xi_order + 0.15) && (x_slope <= expected_x_order + 0.15);
    return rep;
}

}  // namespace pevo
