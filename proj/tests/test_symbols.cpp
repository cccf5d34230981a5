#include "doctest.h"

#include <cmath>

#include "pevo/symbols.hpp"

using namespace pevo;

namespace {

GevreyConfig kdv_cfg() {
    GevreyConfig cfg;
    cfg.p = 3;
    cfg.sigma = 0.9;
    cfg.theta0 = 1.5;
    cfg.theta = 2.0;
    cfg.T = 0.1;
    cfg.rho = 0.5;
    cfg.rho_prime = 0.25;
    cfg.h = 2.0;
    cfg.K = 0.5;
    cfg.M = {0.7, 0.4};
    return cfg;
}

// plain Simpson oracle used to cross-check quadrature-backed values
double simpson_oracle(const std::function<double(double)>& f, double a, double b, int n) {
    double acc = f(a) + f(b);
    for (int i = 1; i < n; ++i) acc += f(a + (b - a) * i / n) * (i % 2 ? 4.0 : 2.0);
    return acc * (b - a) / (3.0 * n);
}

}  // namespace

TEST_CASE("config validation") {
    GevreyConfig cfg = kdv_cfg();
    CHECK_NOTHROW(cfg.validate());

    GevreyConfig bad = cfg;
    bad.sigma = 0.4;  // below (p-2)/(p-1) = 0.5
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    CHECK_NOTHROW(bad.validate_relaxed());

    bad = cfg;
    bad.theta = 6.0;  // >= 1/((p-1)(1-sigma)) = 5
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    bad = cfg;
    bad.rho_prime = 0.9;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    bad = cfg;
    bad.M = {0.7};
    CHECK_THROWS_AS(bad.validate_relaxed(), std::invalid_argument);
}

TEST_CASE("psi cutoff") {
    CHECK(psi_cut(0.3) == 1.0);
    CHECK(psi_cut(-0.5) == 1.0);
    CHECK(psi_cut(1.2) == 0.0);
    CHECK(psi_cut(-1.0) == 0.0);
    const double mid = psi_cut(0.75);
    CHECK(mid > 0.0);
    CHECK(mid < 1.0);
    // monotone on the transition
    double prev = 1.0;
    for (double y = 0.5; y <= 1.0; y += 0.01) {
        const double v = psi_cut(y);
        CHECK(v <= prev + 1e-15);
        prev = v;
    }
}

TEST_CASE("omega cutoff") {
    GevreyConfig cfg = kdv_cfg();  // p = 3 (odd)
    CHECK(omega_cut(0.5, cfg, +1) == 0.0);
    CHECK(omega_cut(3.0, cfg, +1) == -1.0);
    CHECK(omega_cut(-3.0, cfg, +1) == -1.0);
    const double mid = omega_cut(1.5, cfg, +1);
    CHECK(mid > -1.0);
    CHECK(mid < 0.0);
    double prev = 0.0;
    for (double z = 1.0; z <= 2.0; z += 0.02) {
        const double v = omega_cut(z, cfg, +1);
        CHECK(v <= prev + 1e-15);
        prev = v;
    }
    // even p: odd in xi so a_p * omega * xi^{p-1} keeps one sign
    GevreyConfig cfg2 = cfg;
    cfg2.p = 2;
    cfg2.M = {0.7};
    CHECK(omega_cut(3.0, cfg2, +1) == -1.0);
    CHECK(omega_cut(-3.0, cfg2, +1) == +1.0);
}

TEST_CASE("mollifier factorial estimates fit with finite constants") {
    ScalarSymbol psi_sym;
    psi_sym.eval = [](double x, double) { return cplx(psi_cut(x), 0.0); };
    psi_sym.fd_step_x = 0.01;
    double C_psi = 0.0;
    for (int n = 1; n <= 4; ++n) {
        double sup = 0.0;
        for (double y = 0.4; y <= 1.1; y += 0.008)
            sup = std::max(sup, std::abs(psi_sym.deriv(0, n, y, 0.0)));
        C_psi = std::max(C_psi, std::pow(sup / std::pow(std::tgamma(n + 1.0), 1.125),
                                         1.0 / (n + 1)));
    }
    CHECK(std::isfinite(C_psi));
    CHECK(C_psi < 60.0);
}

TEST_CASE("lambda vanishing cases") {
    GevreyConfig cfg = kdv_cfg();
    CHECK(lambda_pk(1, 0.0, 7.0, cfg, +1) == 0.0);
    CHECK(lambda_pk(2, 0.0, -5.0, cfg, +1) == 0.0);
    CHECK(lambda_pk(1, 3.0, 1.9, cfg, +1) == 0.0);   // |xi| <= h
    CHECK(lambda_pk(1, -4.0, -2.0, cfg, +1) == 0.0);
    CHECK(Lambda_total(0.0, 7.0, cfg, +1) == 0.0);
    CHECK(Lambda_total(5.0, 0.5, cfg, +1) == 0.0);
}

TEST_CASE("lambda positive and bounded by the (i) estimate") {
    GevreyConfig cfg = kdv_cfg();
    cfg.h = 10.0;
    cfg.M = {1.0, 0.5};
    const double xi = 10.0 * cfg.R_ap + 0.001;
    const double v = lambda_pk(1, 5.0, xi, cfg, -1);
    CHECK(v > 0.0);
    const double bound =
        cfg.M[0] / (1.0 - cfg.sigma) * std::pow(bracket_h(xi, cfg.h), 2.0 * (1.0 - cfg.sigma));
    CHECK(v <= bound);
}

TEST_CASE("lambda sign structure (odd p)") {
    GevreyConfig cfg = kdv_cfg();
    for (double xi : {4.5, -5.0, 9.0}) {      // |xi| > R_ap * h = 4
        for (double x : {0.5, 3.0, -2.0}) {
            for (int sign_ap : {+1, -1}) {
                const double v = lambda_pk(1, x, xi, cfg, sign_ap);
                CHECK(v * (-sign_ap * (x > 0 ? 1.0 : -1.0)) > 0.0);
            }
        }
    }
}

TEST_CASE("lambda quadrature against plain Simpson oracle") {
    GevreyConfig cfg = kdv_cfg();
    const double xi = 5.0, x = 4.0;
    const double s = cfg.decay_exponent(1);
    const double B = std::pow(bracket_h(xi, cfg.h), cfg.p - 1.0);
    const double oracle = simpson_oracle(
        [&](double y) { return std::pow(bracket(y), -s) * psi_cut(bracket(y) / B); }, 0.0, x,
        20000);
    const double expect = cfg.M[0] * omega_cut(xi / cfg.h, cfg, +1) * oracle;
    CHECK(lambda_pk(1, x, xi, cfg, +1) == doctest::Approx(expect).epsilon(1e-9));
}

TEST_CASE("lambda column path matches pointwise path") {
    GevreyConfig cfg = kdv_cfg();
    std::vector<double> xs = {-6.0, -1.5, 0.0, 0.3, 2.0, 5.5};
    auto col = lambda_pk_column(2, 6.5, xs, cfg, +1);
    for (size_t i = 0; i < xs.size(); ++i)
        CHECK(col[i] == doctest::Approx(lambda_pk(2, xs[i], 6.5, cfg, +1)).epsilon(1e-10));
}

TEST_CASE("Lambda_total equals single term for p=2") {
    GevreyConfig cfg = kdv_cfg();
    cfg.p = 2;
    cfg.M = {0.7};
    CHECK(Lambda_total(2.0, 5.0, cfg, +1) ==
          doctest::Approx(lambda_pk(1, 2.0, 5.0, cfg, +1)).epsilon(1e-12));
}

TEST_CASE("Lambda_time") {
    GevreyConfig cfg = kdv_cfg();
    const double xi = 3.0;
    const double bh = bracket_h(xi, cfg.h);
    CHECK(Lambda_time(cfg.T, xi, cfg) ==
          doctest::Approx(cfg.rho_prime * std::pow(bh, 0.5)).epsilon(1e-12));
    CHECK(Lambda_time(0.0, 0.0, cfg) ==
          doctest::Approx(cfg.K * cfg.T * std::pow(cfg.h, 0.2) +
                          cfg.rho_prime * std::pow(cfg.h, 0.5))
              .epsilon(1e-12));
    GevreyConfig cfg0 = cfg;
    cfg0.K = 0.0;
    cfg0.rho_prime = 0.0;
    CHECK(Lambda_time(0.03, xi, cfg0) == 0.0);
    CHECK_THROWS_AS(Lambda_time(-0.2, xi, cfg), std::invalid_argument);
    CHECK_THROWS_AS(Lambda_time(cfg.T + 0.5, xi, cfg), std::invalid_argument);
    // decreasing in t with K > 0, and always >= rho' h^{1/theta}
    CHECK(Lambda_time(0.0, xi, cfg) > Lambda_time(cfg.T, xi, cfg));
    CHECK(Lambda_time(0.05, xi, cfg) >= cfg.rho_prime * std::pow(cfg.h, 0.5));
}

TEST_CASE("symbol_derivative basics") {
    const double h = 2.0;
    ScalarSymbol br;
    br.eval = [h](double, double xi) { return cplx(bracket_h(xi, h), 0.0); };
    const double xi = 1.7;
    CHECK(symbol_derivative(br, 0, 0, 0.3, xi).real() ==
          doctest::Approx(bracket_h(xi, h)));
    CHECK(symbol_derivative(br, 1, 0, 0.0, xi).real() ==
          doctest::Approx(xi / bracket_h(xi, h)).epsilon(1e-8));
}

TEST_CASE("Lambda x-derivative identity (fundamental theorem)") {
    GevreyConfig cfg = kdv_cfg();
    auto Lam = make_Lambda_symbol(cfg, +1);
    for (double xi : {4.6, 7.0}) {
        for (double x : {0.8, -2.5, 4.0}) {
            double expect = 0.0;
            for (int k = 1; k <= cfg.p - 1; ++k)
                expect += lambda_pk_dx(k, x, xi, cfg, +1);
            CHECK(Lam.deriv(0, 1, x, xi).real() == doctest::Approx(expect).epsilon(1e-10));
        }
    }
}

TEST_CASE("Lambda xi-derivative: FD path vs analytic oracle") {
    // Away from the cutoff transition (|xi| > R_ap h + 1) the only xi
    // dependence for k = 2 sits in <xi>_h^{-1}: the derivative has the
    // closed form M_1 omega (-xi <xi>_h^{-3}) I(x). For k = 1 it vanishes.
    GevreyConfig cfg = kdv_cfg();
    auto Lam = make_Lambda_symbol(cfg, +1);
    const double xi = 5.5, x = 3.0;
    const double bh = bracket_h(xi, cfg.h);
    const double s2 = cfg.decay_exponent(2);
    const double B = std::pow(bh, 2.0);
    const double I = simpson_oracle(
        [&](double y) { return std::pow(bracket(y), -s2) * psi_cut(bracket(y) / B); }, 0.0, x,
        20000);
    const double oracle =
        cfg.M[1] * omega_cut(xi / cfg.h, cfg, +1) * (-xi * std::pow(bh, -3.0)) * I;
    CHECK(Lam.deriv(1, 0, x, xi).real() == doctest::Approx(oracle).epsilon(1e-6));
}

TEST_CASE("mixed derivative closed form") {
    GevreyConfig cfg = kdv_cfg();
    auto Lam = make_Lambda_symbol(cfg, +1);
    const double xi = 6.0, x = 2.0;
    double expect = 0.0;
    for (int k = 1; k <= cfg.p - 1; ++k)
        expect += lambda_pk_dxi_dx(k, x, xi, cfg, +1);
    CHECK(Lam.deriv(1, 1, x, xi).real() == doctest::Approx(expect).epsilon(1e-6));
}

TEST_CASE("estimate report: (i) analytic bound and d_x ratio") {
    GevreyConfig cfg = kdv_cfg();
    auto lat = SampleLattice::make(8.0, 16.0, 21, 25);
    for (int k = 1; k <= 2; ++k) {
        auto rep = verify_lambda_estimates(k, cfg, +1, lat, 3);
        CHECK(rep.pass_i);
        CHECK(rep.all_finite);
        CHECK(rep.raw_ratio_dx <= 2.0 * cfg.M[k - 1]);
        CHECK(rep.raw_ratio_dx > 0.25 * cfg.M[k - 1]);
    }
}

TEST_CASE("gevrey constant estimate") {
    GevreyConfig cfg = kdv_cfg();
    // zero coefficient
    CoeffDerivFn zero = [](int, double, double) { return cplx(0.0, 0.0); };
    CHECK(gevrey_constant_estimate(zero, 1, cfg, 4, 10.0, 65, 3) == 0.0);

    // matching decay <x>^{-sigma} at level j=1 stays finite
    const double s = cfg.decay_exponent(1);
    CoeffDerivFn ok = [s](int beta, double, double x) {
        // d^beta of c <x>^{-s} via nested differences of the closed form
        const double step = 0.02 * (1.0 + 0.1 * std::abs(x));
        std::function<double(int, double)> rec = [&](int b, double t) -> double {
            if (b == 0) return 0.6 * std::pow(bracket(t), -s);
            double acc = 0.0;
            static const double c9[9] = {1.0 / 280,  -4.0 / 105, 1.0 / 5,
                                         -4.0 / 5,   0.0,        4.0 / 5,
                                         -1.0 / 5,   4.0 / 105,  -1.0 / 280};
            for (int m = -4; m <= 4; ++m) acc += c9[m + 4] * rec(b - 1, t + m * step);
            return acc / step;
        };
        return cplx(rec(beta, x), 0.0);
    };
    const double C = gevrey_constant_estimate(ok, 1, cfg, 3, 10.0, 65, 3);
    CHECK(C >= 0.6);
    CHECK(C < 5.0);

    // too-slow decay <x>^{-sigma/2} against the level-1 requirement diverges
    CoeffDerivFn slow = [&](int beta, double, double x) {
        if (beta > 0) return cplx(0.0, 0.0);  // value check alone flags it
        return cplx(std::pow(bracket(x), -cfg.sigma / 2.0), 0.0);
    };
    CHECK_THROWS_AS(gevrey_constant_estimate(slow, 1, cfg, 2, 10.0, 65, 3),
                    AssumptionViolation);
}

TEST_CASE("tabulate basics and decay fits") {
    Grid g = Grid::make(10.0, 256, 1.0);
    auto ones = tabulate([](double, double) { return cplx(1.0, 0.0); }, g, 0, 0, "one");
    CHECK(ones.table.cwiseAbs().maxCoeff() == doctest::Approx(1.0));
    CHECK(ones.table.cwiseAbs().minCoeff() == doctest::Approx(1.0));

    auto xi_sym = tabulate([](double, double xi) { return cplx(xi, 0.0); }, g, 1, 0, "xi");
    for (int i = 0; i < 5; ++i)
        CHECK(xi_sym.table(i, 10) == xi_sym.table(100 + i, 10));

    const double h = g.h();
    auto dec = tabulate(
        [h](double, double xi) { return cplx(std::pow(bracket_h(xi, h), -2.0), 0.0); }, g, -2,
        0, "dec2");
    auto rep = verify_decay_orders(dec, -2.0, 0.0);
    CHECK(!rep.inconclusive);
    CHECK(rep.pass);
    CHECK(rep.xi_slope == doctest::Approx(-2.0).epsilon(0.025));

    auto xdec = tabulate(
        [](double x, double) { return cplx(std::pow(bracket(x), -0.9), 0.0); }, g, 0, -0.9,
        "xdec");
    auto repx = verify_decay_orders(xdec, 0.0, -0.9);
    CHECK(repx.pass);
    CHECK(repx.x_slope == doctest::Approx(-0.9).epsilon(0.06));

    CHECK_THROWS(tabulate(
        [](double x, double) { return cplx(1.0 / x, 0.0); }, g, 0, 0, "inf"));
}

TEST_CASE("Lambda tables agree with oracles") {
    GevreyConfig cfg = kdv_cfg();
    Grid g = Grid::make(10.0, 32, cfg.h);
    auto tabs = build_Lambda_tables(cfg, +1, g, 2, 2);
    const auto& xs = g.x_nodes();
    const auto& xis = g.xi_nodes();
    for (int i = 3; i < g.N(); i += 7) {
        for (int j = 1; j < g.N(); j += 5) {
            const double lam = Lambda_total(xs[i], xis[j], cfg, +1);
            CHECK(tabs.at(0, 0)(i, j).real() == doctest::Approx(lam).epsilon(1e-10));
            double dx = 0.0, dxdxi = 0.0;
            for (int k = 1; k <= 2; ++k) {
                dx += lambda_pk_dx(k, xs[i], xis[j], cfg, +1);
                dxdxi += lambda_pk_dxi_dx(k, xs[i], xis[j], cfg, +1);
            }
            CHECK(tabs.at(0, 1)(i, j).real() == doctest::Approx(dx).epsilon(1e-9));
            if (std::abs(dxdxi) > 1e-12)
                CHECK(tabs.at(1, 1)(i, j).real() == doctest::Approx(dxdxi).epsilon(1e-5));
        }
    }
}
