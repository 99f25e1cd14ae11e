#include <doctest.h>

#include "qthermo/thermo.hpp"
#include "test_support.hpp"

using namespace qthermo;
using qthermo::testing::rng;

namespace {

BipartiteSystem small_edjcm() {
    return build_edjcm(0.0, 3.0, 4.0, -1.0, 1.0, 0.05, 0.05, 2.0, 0.5, FockSpec{4, 1e-6});
}

CMat basis_state(Eigen::Index d, Eigen::Index k) {
    CMat rho = CMat::Zero(d, d);
    rho(k, k) = 1.0;
    return rho;
}

}  // namespace

TEST_CASE("mean energy: diagonal expectations") {
    const auto ops = matter_ops_2level();
    const double wa = 1.9;
    CHECK(mean_energy(basis_state(2, 0), (wa * ops.sigma_e).eval()) == doctest::Approx(wa).epsilon(1e-14));

    // Thermal field with H_f = w a+a.
    const int n_levels = 6;
    const double w = 0.8, nbar = 0.9;
    CMat rho = CMat::Zero(n_levels, n_levels);
    double z = 0.0;
    for (int k = 0; k < n_levels; ++k) z += std::pow(nbar / (nbar + 1.0), k);
    double expect = 0.0;
    for (int k = 0; k < n_levels; ++k) {
        const double p = std::pow(nbar / (nbar + 1.0), k) / z;
        rho(k, k) = p;
        expect += w * k * p;
    }
    const CMat a = annihilation(n_levels);
    CHECK(mean_energy(rho, (w * a.adjoint() * a).eval()) == doctest::Approx(expect).epsilon(1e-13));
}

TEST_CASE("power: antisymmetry at resonance and vanishing cases") {
    auto& gen = rng(41);
    const auto jcm = build_jcm(1.0, 1.0, 1.0, FockSpec{5, 1e-6});
    for (int trial = 0; trial < 25; ++trial) {
        const CMat rho = testing::random_density(jcm.dim(), gen);
        CHECK(std::abs(power_A(jcm, rho) + power_B(jcm, rho)) < 1e-10);
    }
    // |e,0> has no coherence in the coupled sector.
    CHECK(std::abs(power_A(jcm, basis_state(jcm.dim(), 0))) < 1e-14);

    BipartiteSystem uncoupled = jcm;
    uncoupled.V_AB.setZero();
    const CMat rho = testing::random_density(jcm.dim(), gen);
    CHECK(power_A(uncoupled, rho) == 0.0);
}

TEST_CASE("heat fluxes: no channels, absorption from the hot bath, detailed balance") {
    const auto jcm = build_jcm(1.0, 1.0, 1.0, FockSpec{4, 1e-6});
    auto& gen = rng(42);
    CHECK(heat_flux_A(jcm, testing::random_density(jcm.dim(), gen)).total == 0.0);
    CHECK(heat_flux_total(jcm, testing::random_density(jcm.dim(), gen)).total == 0.0);

    // Ground (x) vacuum: only the n-part of each dissipator acts, pumping the
    // matter up its gap, so Qdot_kA = 2 Gamma_k n_k * gap_k.
    const auto ed = small_edjcm();
    const CMat ground = basis_state(ed.dim(), 0);
    const auto qa = heat_flux_A(ed, ground);
    CHECK(qa.per_channel[0] == doctest::Approx(2.0 * 0.05 * 2.0 * 3.0).epsilon(1e-12));
    CHECK(qa.per_channel[1] == doctest::Approx(2.0 * 0.05 * 0.5 * 4.0).epsilon(1e-12));

    // Two-level detailed balance: zero heat flux at the thermal fixed point.
    BipartiteSystem tls;
    tls.m = 2;
    tls.n = 1;
    const auto ops = matter_ops_2level();
    tls.H_A = 1.0 * ops.sigma_e;
    tls.H_B = CMat::Zero(2, 2);
    tls.V_AB = CMat::Zero(2, 2);
    tls.channels = {tls_thermal_channel(1.0, 0.1, 1.0)};
    CMat fixed = CMat::Zero(2, 2);
    fixed(0, 0) = 1.0 / 3.0;
    fixed(1, 1) = 2.0 / 3.0;
    CHECK(std::abs(heat_flux_A(tls, fixed).total) < 1e-14);
}

TEST_CASE("heat flux through the coupling vanishes without the right coherences") {
    const auto ed = small_edjcm();
    auto& gen = rng(43);

    // Diagonal product state: no coherence, no interaction heat flux.
    CMat diag = CMat::Zero(ed.dim(), ed.dim());
    std::uniform_real_distribution<double> u(0.1, 1.0);
    double z = 0.0;
    for (Eigen::Index k = 0; k < ed.dim(); ++k) {
        diag(k, k) = u(gen);
        z += diag(k, k).real();
    }
    diag /= z;
    CHECK(std::abs(heat_flux_V(ed, diag).total) < 1e-13);

    // Purely imaginary off-diagonals: still zero.
    CMat rho = diag;
    const Eigen::Index p = 1 * ed.n + 1, q = 2 * ed.n + 0;  // |1,1> - |2,0| coupled pair
    rho(p, q) = Scalar{0.0, 0.04};
    rho(q, p) = Scalar{0.0, -0.04};
    CHECK(std::abs(heat_flux_V(ed, rho).total) < 1e-13);

    // Real coherence in the coupled sector does drive it.
    rho(p, q) = Scalar{0.04, 0.0};
    rho(q, p) = Scalar{0.04, 0.0};
    CHECK(std::abs(heat_flux_V(ed, rho).total) > 1e-6);
}

TEST_CASE("heat flux splits: Qdot_k = Qdot_kA + Qdot_kV (property)") {
    const auto ed = small_edjcm();
    auto& gen = rng(44);
    for (int trial = 0; trial < 30; ++trial) {
        const CMat rho = testing::random_density(ed.dim(), gen);
        const auto qt = heat_flux_total(ed, rho);
        const auto qa = heat_flux_A(ed, rho);
        const auto qv = heat_flux_V(ed, rho);
        for (std::size_t k = 0; k < ed.channels.size(); ++k)
            CHECK(std::abs(qt.per_channel[k] - qa.per_channel[k] - qv.per_channel[k]) < 1e-10);
    }
}

TEST_CASE("flux functionals are invariant under a common unitary conjugation (property)") {
    const auto ed = small_edjcm();
    auto& gen = rng(45);
    for (int trial = 0; trial < 10; ++trial) {
        const CMat u = testing::random_unitary(ed.dim(), gen);
        const CMat rho = testing::random_density(ed.dim(), gen);
        BipartiteSystem moved = ed;
        moved.H_A = u.adjoint() * ed.H_A * u;
        moved.H_B = u.adjoint() * ed.H_B * u;
        moved.V_AB = u.adjoint() * ed.V_AB * u;
        for (std::size_t k = 0; k < moved.channels.size(); ++k)
            moved.channels[k].jump = u.adjoint() * ed.channels[k].jump * u;
        const CMat rho_moved = u.adjoint() * rho * u;
        CHECK(std::abs(power_A(ed, rho) - power_A(moved, rho_moved)) < 1e-10);
        CHECK(std::abs(power_B(ed, rho) - power_B(moved, rho_moved)) < 1e-10);
        CHECK(std::abs(heat_flux_A(ed, rho).total - heat_flux_A(moved, rho_moved).total) < 1e-10);
        CHECK(std::abs(heat_flux_V(ed, rho).total - heat_flux_V(moved, rho_moved).total) < 1e-10);
        CHECK(std::abs(mean_energy(rho, ed.hamiltonian()) -
                       mean_energy(rho_moved, moved.hamiltonian())) < 1e-10);
    }
}

TEST_CASE("von Neumann entropy: fixed values and guards") {
    CHECK(von_neumann_entropy(basis_state(3, 1)) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(von_neumann_entropy((0.5 * identity(2)).eval()) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CMat rho = CMat::Zero(2, 2);
    rho.diagonal() << 0.75, 0.25;
    // -(0.75 ln 0.75 + 0.25 ln 0.25)
    CHECK(von_neumann_entropy(rho) == doctest::Approx(0.5623351446188083).epsilon(1e-12));

    CMat bad = CMat::Zero(2, 2);
    bad.diagonal() << 1.5, -0.5;
    CHECK_THROWS_AS(von_neumann_entropy(bad), std::domain_error);
}

TEST_CASE("entropy bounds and subadditivity along a JCM trajectory") {
    const auto jcm = build_jcm(1.0, 1.0, 1.0, FockSpec{4, 1e-2});
    auto& gen = rng(46);
    IntegratorConfig cfg;
    cfg.dt = 1e-3;
    cfg.t_end = 3.0;
    cfg.sample_every = 300;
    const auto traj = integrate(jcm, testing::random_density(jcm.dim(), gen), cfg);
    const auto recs = compute_records(jcm, traj);
    for (const auto& r : recs) {
        CHECK(*r.S_A >= -1e-12);
        CHECK(*r.S_A <= std::log(2.0) + 1e-10);
        CHECK(r.S_AB <= *r.S_A + *r.S_B + 1e-10);
    }
}

TEST_CASE("records: energy additivity E_AB = E_A + E_B + <V> (property)") {
    const auto ed = small_edjcm();
    auto& gen = rng(50);
    IntegratorConfig cfg;
    cfg.dt = 1e-3;
    cfg.t_end = 1.0;
    cfg.sample_every = 100;
    const auto traj = integrate(ed, testing::random_density(ed.dim(), gen), cfg);
    const auto recs = compute_records(ed, traj);
    for (std::size_t i = 0; i < recs.size(); ++i) {
        const double v = mean_energy(traj.states[i], ed.V_AB);
        CHECK(std::abs(recs[i].E_AB - recs[i].E_A - *recs[i].E_B - v) < 1e-10);
    }
}

TEST_CASE("entropy production: closed JCM produces none, sigma_A oscillates in sign") {
    const auto jcm = build_jcm(1.0, 1.0, 1.0, FockSpec{4, 1e-6});
    IntegratorConfig cfg;
    cfg.dt = 1e-3;
    cfg.t_end = 6.0;
    cfg.sample_every = 20;
    const auto traj = integrate(jcm, basis_state(jcm.dim(), 0), cfg);
    const auto recs = compute_records(jcm, traj);
    bool saw_negative = false, saw_positive = false;
    for (const auto& r : recs) {
        CHECK(std::abs(r.sigma.value()) < 1e-6);  // J = 0 and S_AB frozen
        if (r.sigma_A.value() < -1e-3) saw_negative = true;
        if (r.sigma_A.value() > 1e-3) saw_positive = true;
    }
    CHECK(saw_negative);
    CHECK(saw_positive);
}

TEST_CASE("entropy production: single-bath relaxation is non-negative and dies out") {
    BipartiteSystem tls;
    tls.m = 2;
    tls.n = 1;
    const auto ops = matter_ops_2level();
    tls.H_A = 1.0 * ops.sigma_e;
    tls.H_B = CMat::Zero(2, 2);
    tls.V_AB = CMat::Zero(2, 2);
    tls.channels = {tls_thermal_channel(1.0, 0.1, 1.0)};
    IntegratorConfig cfg;
    cfg.dt = 5e-3;
    cfg.t_end = 60.0;
    cfg.sample_every = 2;  // entropy derivatives below need a fine grid
    const auto traj = integrate(tls, basis_state(2, 0), cfg);
    const auto recs = compute_records(tls, traj);
    double sigma_min = 0.0;
    for (const auto& r : recs) sigma_min = std::min(sigma_min, r.sigma.value());
    CHECK(sigma_min >= -1e-8);
    CHECK(std::abs(recs.back().sigma.value()) < 1e-5);
}

TEST_CASE("entropy production: zero-temperature channel leaves sigma undefined") {
    BipartiteSystem tls;
    tls.m = 2;
    tls.n = 1;
    const auto ops = matter_ops_2level();
    tls.H_A = ops.sigma_e;
    tls.H_B = CMat::Zero(2, 2);
    tls.V_AB = CMat::Zero(2, 2);
    tls.channels = {tls_thermal_channel(1.0, 0.1, 0.0)};
    auto& gen = rng(47);
    const CMat rho = testing::random_density(2, gen);
    CHECK_THROWS_AS(entropy_production_full(tls, rho, 0.0), std::domain_error);
}

TEST_CASE("entropy production A: zero inputs give zero") {
    const auto ed = small_edjcm();
    // A state with no flux at all: impossible physically, so check the
    // algebraic path instead with dSdt_A = -J_A.
    auto& gen = rng(48);
    const CMat rho = testing::random_density(ed.dim(), gen);
    const auto sub = entropy_production_A(ed, rho, 0.0);
    CHECK(sub.sigma_A == doctest::Approx(sub.J_A).epsilon(1e-14));
    const auto balanced = entropy_production_A(ed, rho, -sub.J_A);
    CHECK(balanced.sigma_A == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("carnot_check") {
    const auto equal = carnot_check(-0.1, 1.0, 2.0, 2.0 - 1e-12);
    CHECK(equal.bound == doctest::Approx(0.0).epsilon(1e-9));

    const auto wide = carnot_check(-0.1, 1.0, 1e9, 1.0);
    CHECK(wide.bound == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(wide.satisfied);

    CHECK_THROWS_AS(carnot_check(1.0, 0.0, 2.0, 1.0), std::domain_error);
    CHECK_THROWS_AS(carnot_check(1.0, 1.0, 1.0, 2.0), std::domain_error);
}

TEST_CASE("first law residuals: closed resonant JCM") {
    const auto jcm = build_jcm(1.0, 1.0, 1.0, FockSpec{4, 1e-6});
    IntegratorConfig cfg;
    cfg.dt = 1e-3;
    cfg.t_end = 3.0;
    cfg.sample_every = 1;
    const auto traj = integrate(jcm, basis_state(jcm.dim(), 0), cfg);
    const auto res = first_law_residuals(jcm, traj);
    double worst_a = 0.0, worst_full = 0.0;
    for (const auto& [ra, rf] : res) {
        worst_a = std::max(worst_a, ra);
        worst_full = std::max(worst_full, rf);
    }
    CHECK(worst_a < 1e-6);
    CHECK(worst_full < 1e-6);
}

TEST_CASE("first law residuals: too few samples rejected") {
    const auto jcm = build_jcm(1.0, 1.0, 1.0, FockSpec{3, 1e-6});
    Trajectory tiny;
    tiny.times = {0.0, 0.1};
    tiny.states = {basis_state(jcm.dim(), 0), basis_state(jcm.dim(), 0)};
    CHECK_THROWS_AS(first_law_residuals(jcm, tiny), std::invalid_argument);
}

TEST_CASE("unipartite fluxes: vanishing cases and steady-state balance") {
    auto closed = build_driven_tls(1.0, 0.3, 0.9, {});
    auto& gen = rng(49);
    const CMat rho = testing::random_density(2, gen);
    const auto fx = unipartite_fluxes(closed, rho, 0.7);
    CHECK(fx.qdot_alicki == 0.0);
    CHECK(fx.qdot_0 == 0.0);

    auto undriven = build_driven_tls(1.0, 0.0, 0.0, {tls_thermal_channel(1.0, 0.1, 0.5)});
    const auto fx2 = unipartite_fluxes(undriven, rho, 0.7);
    CHECK(fx2.p_alicki == 0.0);
    CHECK(fx2.p_0 == 0.0);
}

TEST_CASE("steady-state analysis: stationary records at the fixed point") {
    BipartiteSystem tls;
    tls.m = 2;
    tls.n = 1;
    const auto ops = matter_ops_2level();
    tls.H_A = 0.5 * ops.sigma_e;
    tls.H_B = CMat::Zero(2, 2);
    tls.V_AB = CMat::Zero(2, 2);
    tls.channels = {tls_thermal_channel(0.5, 0.1, 1.0)};
    IntegratorConfig cfg;
    cfg.dt = 0.01;
    cfg.sample_every = 10;
    cfg.ss_tol = 1e-10;
    cfg.max_steps = 1000000;
    const CMat ss = find_steady_state(tls, basis_state(2, 0), cfg);
    const auto analysis = analyze_steady_state(tls, ss, cfg);
    CHECK(analysis.residual < 1e-10);
    CHECK(std::abs(analysis.record.Qdot_A) < 1e-9);
    CHECK(std::abs(*analysis.record.firstlaw_res_A) < 1e-9);
    CHECK(std::abs(analysis.J) < 1e-9);
}
