#include "doctest.h"

#include <cmath>

#include "pevo/gevrey_norms.hpp"
#include "pevo/grid.hpp"

using namespace pevo;

TEST_CASE("gs_norm reduces to L2 at m=0, rho=0") {
    Grid g = Grid::make(10.0, 64, 2.0);
    auto u = gaussian_packet(g, 0.5, 2.0, 1.0);
    GevreyNormSpec spec{0.0, 0.0, 2.0, g.h()};
    CHECK(gs_norm(u, spec) == doctest::Approx(u.norm_l2()).epsilon(1e-12));
}

TEST_CASE("gs_norm of a single lattice mode") {
    Grid g = Grid::make(M_PI, 32, 1.0);
    const double xi0 = 2.0;
    std::vector<cplx> vals(g.N());
    for (int i = 0; i < g.N(); ++i)
        vals[i] = std::exp(cplx(0.0, xi0 * g.x_nodes()[i]));
    auto u = StateVector::from_values(g, vals);
    GevreyNormSpec spec{1.5, 0.3, 2.0, 1.0};
    const double b = bracket_h(xi0, 1.0);
    const double expect =
        std::pow(b, 1.5) * std::exp(0.3 * std::pow(b, 0.5)) * u.norm_l2();
    CHECK(gs_norm(u, spec) == doctest::Approx(expect).epsilon(1e-10));
}

TEST_CASE("weight application round trip and monotonicity") {
    Grid g = Grid::make(10.0, 128, 2.0);
    auto u = gaussian_packet(g, -1.0, 3.0, 0.9);
    GevreyNormSpec spec{1.0, 0.4, 2.0, g.h()};
    auto w = gs_weight_apply(u, spec, +1);
    auto back = gs_weight_apply(w, spec, -1);
    double err = 0.0, ref = 0.0;
    for (int i = 0; i < g.N(); ++i) {
        err += std::norm(back.values()[i] - u.values()[i]);
        ref += std::norm(u.values()[i]);
    }
    CHECK(std::sqrt(err / ref) < 1e-10);

    // definition: gs_norm == L2 norm of the weighted state
    CHECK(gs_norm(u, spec) == doctest::Approx(w.norm_l2()).epsilon(1e-12));

    // radius monotonicity over a corpus
    for (auto& probe : probe_packets(g, 8, 7)) {
        GevreyNormSpec lo{0.0, 0.2, 2.0, g.h()}, hi{0.0, 0.35, 2.0, g.h()};
        CHECK(gs_norm(probe, lo) <= gs_norm(probe, hi) * (1.0 + 1e-12));
    }
}

TEST_CASE("overflow guard") {
    Grid g = Grid::make(10.0, 256, 1.0);
    GevreyNormSpec bad{0.0, 200.0, 1.2, 1.0};
    CHECK_THROWS_AS(gs_norm(gaussian_packet(g, 0, 1, 1), bad), std::invalid_argument);
}
