#include "pevo/quantize.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace pevo {

namespace {

void require_same_grid(const SymbolGrid& sg, const StateVector& u) {
    if (!sg.grid.same_as(u.grid()))
        throw std::invalid_argument("quantizer: symbol and state live on different grids");
}

}  // namespace

StateVector OperatorMatrix::apply(const StateVector& u) const {
    if (!grid.same_as(u.grid()))
        throw std::invalid_argument("OperatorMatrix::apply: grid mismatch");
    Eigen::Map<const Eigen::VectorXcd> v(u.values().data(), u.values().size());
    Eigen::VectorXcd w = A * v;
    return StateVector::from_values(grid, std::vector<cplx>(w.data(), w.data() + w.size()));
}

StateVector apply_left(const SymbolGrid& sg, const StateVector& u) {
    require_same_grid(sg, u);
    const Grid& g = sg.grid;
    const int N = g.N();
    const auto& xs = g.x_nodes();
    const auto& xis = g.xi_nodes();
    const auto& uhat = u.spectrum();
    const double scale = 1.0 / (2.0 * g.L());
    std::vector<cplx> out(N);
    for (int i = 0; i < N; ++i) {
        cplx acc(0.0, 0.0);
        for (int j = 0; j < N; ++j)
            acc += std::exp(cplx(0.0, xs[i] * xis[j])) * sg.table(i, j) * uhat[j];
        out[i] = scale * acc;
    }
    return StateVector::from_values(g, std::move(out));
}

StateVector apply_reverse(const SymbolGrid& sg, const StateVector& u) {
    require_same_grid(sg, u);
    const Grid& g = sg.grid;
    const int N = g.N();
    const auto& xs = g.x_nodes();
    const auto& xis = g.xi_nodes();
    const auto& uv = u.values();
    const double dx = g.dx();
    std::vector<cplx> w(N);
    for (int j = 0; j < N; ++j) {
        cplx acc(0.0, 0.0);
        for (int i = 0; i < N; ++i)
            acc += std::exp(cplx(0.0, -xis[j] * xs[i])) * sg.table(i, j) * uv[i];
        w[j] = dx * acc;
    }
    return StateVector::from_spectrum(g, std::move(w));
}

StateVector fourier_multiplier(const std::function<cplx(double)>& m, const StateVector& u) {
    const auto& xis = u.grid().xi_nodes();
    std::vector<cplx> spec = u.spectrum();
    for (size_t j = 0; j < spec.size(); ++j) {
        const cplx mj = m(xis[j]);
        if (!std::isfinite(mj.real()) || !std::isfinite(mj.imag()))
            throw std::runtime_error("fourier_multiplier: non-finite multiplier on lattice");
        spec[j] *= mj;
    }
    return StateVector::from_spectrum(u.grid(), std::move(spec));
}

OperatorMatrix operator_matrix(const SymbolGrid& sg, QuantSide side) {
    const Grid& g = sg.grid;
    const int N = g.N();
    const auto& xs = g.x_nodes();
    const auto& xis = g.xi_nodes();
    const double dx = g.dx();
    const double scale = 1.0 / (2.0 * g.L());

    Eigen::MatrixXcd Eplus(N, N);   // e^{+i x_i xi_j} / 2L
    Eigen::MatrixXcd Eminus(N, N);  // e^{-i xi_j x_k} dx
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) {
            Eplus(i, j) = scale * std::exp(cplx(0.0, xs[i] * xis[j]));
            Eminus(j, i) = dx * std::exp(cplx(0.0, -xis[j] * xs[i]));
        }

    OperatorMatrix op{Eigen::MatrixXcd(N, N), g,
                      sg.label + (side == QuantSide::Left ? " [left]" : " [reverse]")};
    if (side == QuantSide::Left) {
        op.A = (sg.table.array() * Eplus.array()).matrix() * Eminus;
    } else {
        // A = Eplus * (P^T .* Eminus), with the symbol evaluated at the
        // input node: A(m,i) = sum_j Eplus(m,j) p(x_i,xi_j) Eminus(j,i).
        Eigen::MatrixXcd right(N, N);
        for (int j = 0; j < N; ++j)
            for (int i = 0; i < N; ++i) right(j, i) = sg.table(i, j) * Eminus(j, i);
        op.A = Eplus * right;
    }
    return op;
}

OperatorMatrix multiplier_matrix(const std::function<cplx(double)>& m, const Grid& grid,
                                 std::string label) {
    SymbolGrid sg = tabulate([&](double, double xi) { return m(xi); }, grid, 0.0, 0.0, label);
    OperatorMatrix op = operator_matrix(sg, QuantSide::Left);
    op.label = std::move(label);
    return op;
}

Eigen::VectorXcd multiplier_diagonal(const std::function<cplx(double)>& m, const Grid& grid) {
    const auto& xis = grid.xi_nodes();
    Eigen::VectorXcd d(grid.N());
    for (int j = 0; j < grid.N(); ++j) d(j) = m(xis[j]);
    return d;
}

double probe_operator_norm(const Eigen::MatrixXcd& A, const std::vector<StateVector>& probes) {
    double worst = 0.0;
    for (const auto& u : probes) {
        Eigen::Map<const Eigen::VectorXcd> v(u.values().data(), u.values().size());
        const double nv = v.norm();
        if (nv == 0.0) continue;
        worst = std::max(worst, (A * v).norm() / nv);
    }
    return worst;
}

void operator_matrix_export(const OperatorMatrix& op, const std::filesystem::path& binfile,
                            const std::filesystem::path& jsonfile) {
    std::ofstream bin(binfile, std::ios::binary);
    if (!bin) throw std::runtime_error("operator_matrix_export: cannot open " + binfile.string());
    for (int i = 0; i < op.A.rows(); ++i)
        for (int j = 0; j < op.A.cols(); ++j) {
            const double re = op.A(i, j).real(), im = op.A(i, j).imag();
            bin.write(reinterpret_cast<const char*>(&re), sizeof(double));
            bin.write(reinterpret_cast<const char*>(&im), sizeof(double));
        }
    nlohmann::json meta{{"N", op.grid.N()},
                        {"L", op.grid.L()},
                        {"h", op.grid.h()},
                        {"label", op.label},
                        {"layout", "row-major complex128 (re,im)"}};
    std::ofstream js(jsonfile);
    js << meta.dump(2) << '\n';
}

}  // namespace pevo
