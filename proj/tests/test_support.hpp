#pragma once

#include "qthermo/linalg.hpp"

#include <random>

// Seeded generators shared by the unit and acceptance suites.

namespace qthermo::testing {

inline std::mt19937& rng(unsigned seed = 0) {
    static std::mt19937 gen(20240117u);
    if (seed != 0) gen.seed(seed);
    return gen;
}

inline CMat random_ginibre(Eigen::Index d, std::mt19937& gen) {
    std::normal_distribution<double> dist(0.0, 1.0);
    CMat g(d, d);
    for (Eigen::Index j = 0; j < d; ++j)
        for (Eigen::Index i = 0; i < d; ++i) g(i, j) = Scalar(dist(gen), dist(gen));
    return g;
}

/// Random full-rank density matrix, G G^dag normalized.
inline CMat random_density(Eigen::Index d, std::mt19937& gen) {
    const CMat g = random_ginibre(d, gen);
    CMat rho = g * g.adjoint();
    rho /= rho.trace().real();
    return rho;
}

inline CMat random_hermitian(Eigen::Index d, std::mt19937& gen) {
    const CMat g = random_ginibre(d, gen);
    return 0.5 * (g + g.adjoint().eval());
}

/// Haar-ish unitary from the QR decomposition of a Ginibre matrix.
inline CMat random_unitary(Eigen::Index d, std::mt19937& gen) {
    const CMat g = random_ginibre(d, gen);
    Eigen::HouseholderQR<CMat> qr(g);
    CMat q = qr.householderQ();
    return q;
}

}  // namespace qthermo::testing
