#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <complex>
#include <stdexcept>

// Dense complex linear algebra for open-system simulations: tensor products,
// partial traces, commutators, Hermitian eigendecomposition and density-matrix
// diagnostics. All functions are pure; inputs are never modified.
//
// Index convention: in a product space C^m (x) C^n the first (A) factor is the
// slow index, i.e. the joint basis state |i,alpha> sits at row i*n + alpha.
// Every embedding and partial trace in this library assumes that layout.

namespace qthermo {

using Scalar = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using RVec = Eigen::VectorXd;

inline constexpr Scalar imag_unit{0.0, 1.0};

/// Kronecker product with the A-slow convention:
/// (A (x) B)[i*n+a, j*n+b] = A[i,j] * B[a,b].
template <typename DerivedA, typename DerivedB>
CMat kron(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
    const Eigen::Index m = a.rows(), n = b.rows();
    if (a.cols() != m || b.cols() != n)
        throw std::invalid_argument("kron: factors must be square");
    CMat out(m * n, m * n);
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j < m; ++j)
            out.block(i * n, j * n, n, n) = Scalar(a(i, j)) * b;
    return out;
}

/// Identity on C^d.
inline CMat identity(Eigen::Index d) { return CMat::Identity(d, d); }

/// Trace out subsystem B: out[i,j] = sum_a rho[i*n+a, j*n+a].
CMat partial_trace_B(const CMat& rho, Eigen::Index m, Eigen::Index n);

/// Trace out subsystem A: out[a,b] = sum_i rho[i*n+a, i*n+b].
CMat partial_trace_A(const CMat& rho, Eigen::Index m, Eigen::Index n);

/// AB - BA.
template <typename DerivedA, typename DerivedB>
CMat commutator(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols() || a.rows() != a.cols())
        throw std::invalid_argument("commutator: operands must be square with equal dims");
    CMat ab = a * b;
    ab.noalias() -= b * a;
    return ab;
}

struct HermitianEig {
    RVec values;   // ascending
    CMat vectors;  // unitary, columns are eigenvectors
};

/// Eigendecomposition of a Hermitian matrix. The input is symmetrized as
/// (H + H^dag)/2 before solving; inputs farther than 1e-10 * ||H||_F from
/// Hermitian are rejected.
HermitianEig hermitian_eigen(const CMat& h);

struct DensityReport {
    double trace_err;        // |tr(rho) - 1|
    double hermiticity_err;  // ||rho - rho^dag||_F
    double min_eigenvalue;
    bool valid(double tol) const {
        return trace_err < tol && hermiticity_err < tol && min_eigenvalue > -tol;
    }
};

/// Diagnostic only: never throws for bad states.
DensityReport is_valid_density(const CMat& rho);

}  // namespace qthermo
