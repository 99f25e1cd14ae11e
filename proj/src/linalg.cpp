#include "qthermo/linalg.hpp"

namespace qthermo {

CMat partial_trace_B(const CMat& rho, Eigen::Index m, Eigen::Index n) {
    if (rho.rows() != rho.cols() || rho.rows() != m * n || m < 1 || n < 1)
        throw std::invalid_argument("partial_trace_B: dim(rho) must equal m*n");
    CMat out = CMat::Zero(m, m);
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j < m; ++j) {
            Scalar s{0.0, 0.0};
            for (Eigen::Index a = 0; a < n; ++a) s += rho(i * n + a, j * n + a);
            out(i, j) = s;
        }
    return out;
}

CMat partial_trace_A(const CMat& rho, Eigen::Index m, Eigen::Index n) {
    if (rho.rows() != rho.cols() || rho.rows() != m * n || m < 1 || n < 1)
        throw std::invalid_argument("partial_trace_A: dim(rho) must equal m*n");
    CMat out = CMat::Zero(n, n);
    for (Eigen::Index a = 0; a < n; ++a)
        for (Eigen::Index b = 0; b < n; ++b) {
            Scalar s{0.0, 0.0};
            for (Eigen::Index i = 0; i < m; ++i) s += rho(i * n + a, i * n + b);
            out(a, b) = s;
        }
    return out;
}

HermitianEig hermitian_eigen(const CMat& h) {
    if (h.rows() != h.cols()) throw std::invalid_argument("hermitian_eigen: matrix must be square");
    const double scale = h.norm();
    const double dev = (h - h.adjoint()).norm();
    if (dev > 1e-10 * std::max(scale, 1e-300))
        throw std::invalid_argument("hermitian_eigen: input is not Hermitian within tolerance");
    const CMat sym = 0.5 * (h + h.adjoint().eval());
    Eigen::SelfAdjointEigenSolver<CMat> solver(sym);
    if (solver.info() != Eigen::Success)
        throw std::runtime_error("hermitian_eigen: eigensolver failed to converge");
    return HermitianEig{solver.eigenvalues(), solver.eigenvectors()};
}

DensityReport is_valid_density(const CMat& rho) {
    if (rho.rows() != rho.cols()) throw std::invalid_argument("is_valid_density: matrix must be square");
    DensityReport rep{};
    rep.trace_err = std::abs(rho.trace() - Scalar{1.0, 0.0});
    rep.hermiticity_err = (rho - rho.adjoint()).norm();
    Eigen::SelfAdjointEigenSolver<CMat> solver(0.5 * (rho + rho.adjoint().eval()),
                                               Eigen::EigenvaluesOnly);
    rep.min_eigenvalue = solver.eigenvalues().minCoeff();
    return rep;
}

}  // namespace qthermo
