#include <doctest.h>

#include "qthermo/linalg.hpp"
#include "test_support.hpp"

using namespace qthermo;
using qthermo::testing::rng;

namespace {

CMat pauli_x() {
    CMat m = CMat::Zero(2, 2);
    m(0, 1) = 1.0;
    m(1, 0) = 1.0;
    return m;
}

CMat pauli_z() {
    CMat m = CMat::Zero(2, 2);
    m(0, 0) = 1.0;
    m(1, 1) = -1.0;
    return m;
}

CMat ladder_down(int n) {  // truncated annihilation, duplicated here on purpose:
    CMat a = CMat::Zero(n, n);  // the linalg tests must not depend on models
    for (int k = 1; k < n; ++k) a(k - 1, k) = std::sqrt(double(k));
    return a;
}

}  // namespace

TEST_CASE("kron: identities and diagonal structure") {
    CHECK((kron(identity(2), identity(3)) - identity(6)).norm() == 0.0);

    const CMat sz_i2 = kron(pauli_z(), identity(2));
    CMat expect = CMat::Zero(4, 4);
    expect.diagonal() << 1.0, 1.0, -1.0, -1.0;
    CHECK((sz_i2 - expect).norm() == 0.0);
}

TEST_CASE("kron: sigma+ (x) a maps |g,1> to |e,0> with unit amplitude") {
    CMat sp = CMat::Zero(2, 2);
    sp(0, 1) = 1.0;  // |e><g| in the (|e>,|g>) basis
    const CMat op = kron(sp, ladder_down(2));
    // |g,1> is index 1*2+1 = 3, |e,0> is index 0. a|1> = |0> with amplitude 1.
    for (Eigen::Index i = 0; i < 4; ++i)
        for (Eigen::Index j = 0; j < 4; ++j) {
            if (i == 0 && j == 3)
                CHECK(op(i, j) == Scalar{1.0, 0.0});
            else
                CHECK(op(i, j) == Scalar{0.0, 0.0});
        }
}

TEST_CASE("kron: trace is multiplicative (property)") {
    auto& gen = rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        std::uniform_int_distribution<int> dims(2, 4);
        const CMat a = testing::random_ginibre(dims(gen), gen);
        const CMat b = testing::random_ginibre(dims(gen), gen);
        const Scalar lhs = kron(a, b).trace();
        const Scalar rhs = a.trace() * b.trace();
        CHECK(std::abs(lhs - rhs) <= 1e-12 * std::max(1.0, std::abs(rhs)));
    }
}

TEST_CASE("partial traces: product states factorize") {
    auto& gen = rng(12);
    const CMat rho_a = testing::random_density(3, gen);
    const CMat rho_b = testing::random_density(4, gen);
    const CMat joint = kron(rho_a, rho_b);
    CHECK((partial_trace_B(joint, 3, 4) - rho_a).norm() < 1e-13);
    CHECK((partial_trace_A(joint, 3, 4) - rho_b).norm() < 1e-13);
}

TEST_CASE("partial traces: maximally entangled pair reduces to I/2") {
    // (|e,0> + |g,1>)/sqrt(2) on 2x2: indices 0 and 3.
    CVec psi = CVec::Zero(4);
    psi(0) = 1.0 / std::sqrt(2.0);
    psi(3) = 1.0 / std::sqrt(2.0);
    const CMat rho = psi * psi.adjoint();
    CHECK((partial_trace_B(rho, 2, 2) - 0.5 * identity(2)).norm() < 1e-14);
    CHECK((partial_trace_A(rho, 2, 2) - 0.5 * identity(2)).norm() < 1e-14);
}

TEST_CASE("partial traces: trace preservation (property)") {
    auto& gen = rng(13);
    for (int trial = 0; trial < 30; ++trial) {
        const CMat rho = testing::random_density(12, gen);
        CHECK(std::abs(partial_trace_B(rho, 3, 4).trace() - Scalar{1.0, 0.0}) < 1e-12);
        CHECK(std::abs(partial_trace_A(rho, 3, 4).trace() - Scalar{1.0, 0.0}) < 1e-12);
    }
}

TEST_CASE("partial trace kernel identity: Tr{Tr_B(rho) X} = Tr{rho (X (x) I)}") {
    auto& gen = rng(14);
    for (int trial = 0; trial < 100; ++trial) {
        const CMat rho = testing::random_density(12, gen);
        const CMat x = testing::random_ginibre(3, gen);
        const Scalar lhs = (partial_trace_B(rho, 3, 4) * x).trace();
        const Scalar rhs = (rho * kron(x, identity(4))).trace();
        CHECK(std::abs(lhs - rhs) < 1e-12);
    }
}

TEST_CASE("partial trace: dimension mismatch rejected") {
    CHECK_THROWS_AS(partial_trace_B(identity(5), 2, 2), std::invalid_argument);
    CHECK_THROWS_AS(partial_trace_A(identity(6), 2, 2), std::invalid_argument);
}

TEST_CASE("commutator: basic algebra") {
    auto& gen = rng(15);
    const CMat h = testing::random_hermitian(4, gen);
    CHECK(commutator(h, h).norm() < 1e-14);

    CMat sp = CMat::Zero(2, 2), sm = CMat::Zero(2, 2);
    sp(0, 1) = 1.0;
    sm(1, 0) = 1.0;
    CMat expect = CMat::Zero(2, 2);
    expect(0, 0) = 1.0;
    expect(1, 1) = -1.0;
    CHECK((commutator(sp, sm) - expect).norm() == 0.0);

    const CMat a = testing::random_ginibre(3, gen), b = testing::random_ginibre(3, gen);
    CHECK((commutator(a, b) + commutator(b, a)).norm() < 1e-12);
}

TEST_CASE("commutator: truncated ladder boundary artifact") {
    const int n = 6;
    const CMat a = ladder_down(n);
    const CMat direct = a * a.adjoint() - a.adjoint() * a;  // independent route
    CMat expect = identity(n);
    expect(n - 1, n - 1) = -double(n - 1);
    CHECK((commutator(a, a.adjoint().eval()) - direct).norm() == 0.0);
    CHECK((direct - expect).norm() < 1e-13);
}

TEST_CASE("hermitian_eigen: fixed spectra") {
    CMat d = CMat::Zero(3, 3);
    d.diagonal() << 3.0, 1.0, 2.0;
    const auto eig = hermitian_eigen(d);
    CHECK(eig.values(0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(eig.values(1) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(eig.values(2) == doctest::Approx(3.0).epsilon(1e-14));

    const auto sx = hermitian_eigen(pauli_x());
    CHECK(sx.values(0) == doctest::Approx(-1.0).epsilon(1e-14));
    CHECK(sx.values(1) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("hermitian_eigen: random reconstruction and unitarity") {
    auto& gen = rng(16);
    for (int trial = 0; trial < 20; ++trial) {
        const CMat h = testing::random_hermitian(8, gen);
        const auto eig = hermitian_eigen(h);
        const CMat rebuilt = eig.vectors * eig.values.cast<Scalar>().asDiagonal() * eig.vectors.adjoint();
        CHECK((h - rebuilt).norm() < 1e-10 * h.norm());
        CHECK((eig.vectors.adjoint() * eig.vectors - identity(8)).norm() < 1e-10);
        CHECK(std::abs(eig.values.sum() - h.trace().real()) < 1e-10 * std::max(1.0, h.norm()));
        for (Eigen::Index i = 1; i < eig.values.size(); ++i) CHECK(eig.values(i) >= eig.values(i - 1));
    }
}

TEST_CASE("hermitian_eigen: rejects non-Hermitian input") {
    CMat m = CMat::Zero(2, 2);
    m(0, 1) = 1.0;  // strictly upper triangular
    CHECK_THROWS_AS(hermitian_eigen(m), std::invalid_argument);
}

TEST_CASE("is_valid_density: diagnostics") {
    const auto good = is_valid_density(0.5 * identity(2));
    CHECK(good.trace_err < 1e-15);
    CHECK(good.hermiticity_err < 1e-15);
    CHECK(good.min_eigenvalue == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(good.valid(1e-9));

    CMat bad = CMat::Zero(2, 2);
    bad.diagonal() << 1.5, -0.5;
    const auto rep = is_valid_density(bad);
    CHECK(rep.min_eigenvalue == doctest::Approx(-0.5).epsilon(1e-14));
    CHECK(!rep.valid(1e-9));
}

TEST_CASE("adjoint involution on random matrices") {
    auto& gen = rng(17);
    const CMat g = testing::random_ginibre(5, gen);
    CHECK((g.adjoint().adjoint() - g).norm() == 0.0);
}
