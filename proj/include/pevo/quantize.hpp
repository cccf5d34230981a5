#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <functional>
#include <string>

#include "pevo/grid.hpp"
#include "pevo/symbols.hpp"

namespace pevo {

enum class QuantSide { Left, Reverse };

/// Dense grid realization of a quantized symbol, acting on value-space
/// vectors. Immutable after assembly.
struct OperatorMatrix {
    Eigen::MatrixXcd A;
    Grid grid;
    std::string label;

    StateVector apply(const StateVector& u) const;
};

/// Left (Kohn-Nirenberg) quantization:
///   (P u)(x_i) = (1/2L) sum_j e^{i x_i xi_j} p(x_i, xi_j) uhat(xi_j).
StateVector apply_left(const SymbolGrid& sg, const StateVector& u);

/// Reverse quantization (symbol at the input variable):
///   w(xi_j) = dx sum_i e^{-i xi_j x_i} p(x_i, xi_j) u(x_i),  then inverse
/// transform of w. The finite double sum is the literal discrete
/// counterpart of the oscillatory-integral definition.
StateVector apply_reverse(const SymbolGrid& sg, const StateVector& u);

/// Pure Fourier multiplier, exact and O(N log N).
StateVector fourier_multiplier(const std::function<cplx(double)>& m, const StateVector& u);

/// Dense matrix of the quantization (closed-form assembly; agrees with the
/// apply_* routines to round-off).
OperatorMatrix operator_matrix(const SymbolGrid& sg, QuantSide side);

/// Dense matrix of a pure multiplier.
OperatorMatrix multiplier_matrix(const std::function<cplx(double)>& m, const Grid& grid,
                                 std::string label);

/// Diagonal (spectral-space) coefficients of a multiplier as a vector.
Eigen::VectorXcd multiplier_diagonal(const std::function<cplx(double)>& m, const Grid& grid);

/// max_u ||A u|| / ||u|| over the probe set (A given as an error operator).
double probe_operator_norm(const Eigen::MatrixXcd& A, const std::vector<StateVector>& probes);

/// Flat binary (row-major complex128) plus JSON sidecar {N, L, h, label}.
void operator_matrix_export(const OperatorMatrix& op, const std::filesystem::path& binfile,
                            const std::filesystem::path& jsonfile);

}  // namespace pevo
