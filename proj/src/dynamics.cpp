#include "qthermo/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace qthermo {

namespace {

// Column-grouped triplets for right-multiplication: y.col(c) += v * x.col(r)
// per entry. Operators here carry a handful of nonzeros per row, so this
// turns every product in the Lindblad rhs into a short list of contiguous
// axpys.
struct SparseOp {
    Eigen::Index dim = 0;
    struct Entry {
        Eigen::Index r, c;
        Scalar v;
    };
    std::vector<Entry> entries;

    static SparseOp from_dense(const CMat& m) {
        SparseOp op;
        op.dim = m.rows();
        for (Eigen::Index c = 0; c < m.cols(); ++c)
            for (Eigen::Index r = 0; r < m.rows(); ++r)
                if (m(r, c) != Scalar{0.0, 0.0}) op.entries.push_back({r, c, m(r, c)});
        std::sort(op.entries.begin(), op.entries.end(),
                  [](const Entry& a, const Entry& b) { return a.c < b.c || (a.c == b.c && a.r < b.r); });
        return op;
    }
};

// y = x * op
void rmult(const CMat& x, const SparseOp& op, CMat& y) {
    y.setZero();
    for (const auto& e : op.entries) y.col(e.c) += e.v * x.col(e.r);
}

// y += w * x * op
void rmult_add(const CMat& x, const SparseOp& op, double w, CMat& y) {
    for (const auto& e : op.entries) y.col(e.c) += (w * e.v) * x.col(e.r);
}

// Evaluation plan for a time-independent Lindblad generator. For Hermitian
// input the rhs is assembled from right-multiplications and adjoints only:
//   L(rho) = M + M^dag + sum_k w_k * adjoint(rho * s_k) * s_k,
// with M = rho * drift^dag, drift = -iH - sum_k Gamma_k[(n+1) s+s + n s s+].
// Each term is exactly Hermitian, so states stay Hermitian to roundoff.
struct LindbladPlan {
    Eigen::Index dim = 0;
    SparseOp drift_adj;  // drift^dag
    struct Sandwich {
        SparseOp op;  // rho is multiplied by this on the right, twice
        double weight;
    };
    std::vector<Sandwich> sandwiches;

    mutable CMat m_buf, u_buf, v_buf;

    static LindbladPlan build(const CMat& h, const std::vector<ThermalChannel>& channels) {
        LindbladPlan plan;
        plan.dim = h.rows();
        CMat drift = -imag_unit * h;
        for (const auto& ch : channels) {
            if (ch.gamma == 0.0) continue;
            const CMat sd = ch.jump.adjoint();
            drift.noalias() -= (ch.gamma * (ch.n_thermal + 1.0)) * (sd * ch.jump);
            if (ch.n_thermal != 0.0) drift.noalias() -= (ch.gamma * ch.n_thermal) * (ch.jump * sd);
            plan.sandwiches.push_back({SparseOp::from_dense(sd), 2.0 * ch.gamma * (ch.n_thermal + 1.0)});
            if (ch.n_thermal != 0.0)
                plan.sandwiches.push_back({SparseOp::from_dense(ch.jump), 2.0 * ch.gamma * ch.n_thermal});
        }
        plan.drift_adj = SparseOp::from_dense(drift.adjoint());
        plan.m_buf.resize(plan.dim, plan.dim);
        plan.u_buf.resize(plan.dim, plan.dim);
        plan.v_buf.resize(plan.dim, plan.dim);
        return plan;
    }

    // out = L(rho); requires Hermitian rho.
    void apply(const CMat& rho, CMat& out) const {
        rmult(rho, drift_adj, m_buf);
        out = m_buf + m_buf.adjoint();
        for (const auto& sw : sandwiches) {
            rmult(rho, sw.op, u_buf);
            v_buf = u_buf.adjoint();
            rmult_add(v_buf, sw.op, sw.weight, out);
        }
    }
};

double top_fock_population(const CMat& rho, Eigen::Index m, Eigen::Index n) {
    double p = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) p += rho(i * n + n - 1, i * n + n - 1).real();
    return p;
}

void validate_config(const IntegratorConfig& cfg, double radius) {
    if (cfg.dt <= 0.0) throw std::invalid_argument("integrator: dt must be positive");
    if (cfg.sample_every < 1) throw std::invalid_argument("integrator: sample_every must be >= 1");
    if (cfg.dt * radius > 0.1 + 1e-12) {
        std::ostringstream msg;
        msg << "integrator: dt * spectral radius = " << cfg.dt * radius
            << " exceeds 0.1; reduce dt below " << 0.1 / radius;
        throw std::invalid_argument(msg.str());
    }
}

void check_sample_validity(CMat& rho, double t, double& leak_max, bool& leak_warning,
                           const BipartiteSystem* bip) {
    const Scalar tr = rho.trace();
    const double drift = std::abs(tr - Scalar{1.0, 0.0});
    if (!(drift < 1e-8)) {
        std::ostringstream msg;
        msg << "integration aborted at t = " << t << ": trace drift " << drift << " >= 1e-8";
        throw IntegrationError(msg.str());
    }
    rho /= tr.real();
    Eigen::SelfAdjointEigenSolver<CMat> ev(rho, Eigen::EigenvaluesOnly);
    const double lmin = ev.eigenvalues().minCoeff();
    if (lmin < -1e-6) {
        std::ostringstream msg;
        msg << "integration aborted at t = " << t << ": min eigenvalue " << lmin << " < -1e-6";
        throw IntegrationError(msg.str());
    }
    if (bip) {
        const double leak = top_fock_population(rho, bip->m, bip->n);
        leak_max = std::max(leak_max, leak);
        if (leak > bip->leak_tol) leak_warning = true;
    }
}

// Shared RK4 march. Rhs must write L(state) into its second argument.
template <typename Rhs>
Trajectory run_rk4(const CMat& rho0, const IntegratorConfig& cfg, const SampleObserver& observer,
                   const BipartiteSystem* bip, Rhs&& eval) {
    const Eigen::Index d = rho0.rows();
    const long long steps = std::llround(cfg.t_end / cfg.dt);
    if (steps > cfg.max_steps) throw std::invalid_argument("integrator: step count exceeds max_steps");

    CMat rho = rho0;
    CMat k1(d, d), k2(d, d), k3(d, d), k4(d, d), stage(d, d);

    Trajectory traj;
    traj.times.reserve(std::size_t(steps / cfg.sample_every) + 2);

    auto sample = [&](long long step) {
        const double t = step * cfg.dt;
        check_sample_validity(rho, t, traj.leak_max, traj.leak_warning, bip);
        traj.times.push_back(t);
        traj.states.push_back(rho);
        if (observer) observer(t, rho, traj.times.size() - 1);
    };

    sample(0);
    for (long long step = 0; step < steps; ++step) {
        const double t = step * cfg.dt;
        eval(rho, t, k1);
        stage = rho + (0.5 * cfg.dt) * k1;
        eval(stage, t + 0.5 * cfg.dt, k2);
        stage = rho + (0.5 * cfg.dt) * k2;
        eval(stage, t + 0.5 * cfg.dt, k3);
        stage = rho + cfg.dt * k3;
        eval(stage, t + cfg.dt, k4);
        rho += (cfg.dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if ((step + 1) % cfg.sample_every == 0) sample(step + 1);
    }
    return traj;
}

CMat validated_initial_state(const CMat& rho0) {
    const auto rep = is_valid_density(rho0);
    if (!rep.valid(1e-7)) throw std::invalid_argument("integrator: initial state is not a valid density matrix");
    return rho0 / rho0.trace().real();
}

}  // namespace

CMat rhs(const BipartiteSystem& sys, const CMat& rho) {
    if (rho.rows() != sys.dim() || rho.cols() != sys.dim())
        throw std::invalid_argument("rhs: state dimension mismatch");
    const CMat h = sys.hamiltonian();
    CMat out = -imag_unit * commutator(h, rho);
    for (const auto& ch : sys.channels) out += dissipator_apply(ch, rho);
    return out;
}

CMat rhs_driven(const DrivenSystem& sys, const CMat& rho, double t) {
    if (rho.rows() != sys.dim() || rho.cols() != sys.dim())
        throw std::invalid_argument("rhs_driven: state dimension mismatch");
    CMat out = -imag_unit * commutator(sys.hamiltonian(t), rho);
    for (const auto& ch : sys.channels) out += dissipator_apply(ch, rho);
    return out;
}

double spectral_radius(const CMat& h) {
    const auto eig = hermitian_eigen(h);
    return 0.5 * (eig.values.maxCoeff() - eig.values.minCoeff());
}

Trajectory integrate(const BipartiteSystem& sys, const CMat& rho0, const IntegratorConfig& cfg,
                     const SampleObserver& observer) {
    validate_config(cfg, spectral_radius(sys.hamiltonian()));
    const CMat start = validated_initial_state(rho0);
    const LindbladPlan plan = LindbladPlan::build(sys.hamiltonian(), sys.channels);
    return run_rk4(start, cfg, observer, &sys,
                   [&](const CMat& r, double, CMat& out) { plan.apply(r, out); });
}

Trajectory integrate(const DrivenSystem& sys, const CMat& rho0, const IntegratorConfig& cfg,
                     const SampleObserver& observer) {
    validate_config(cfg, spectral_radius(sys.H0) + sys.epsilon * sys.sigma_plus.norm() * 2.0);
    const CMat start = validated_initial_state(rho0);
    return run_rk4(start, cfg, observer, nullptr,
                   [&](const CMat& r, double t, CMat& out) { out = rhs_driven(sys, r, t); });
}

namespace {

template <typename Plan>
CMat march_to_fixed_point(const CMat& rho0, const IntegratorConfig& cfg, const Plan& plan) {
    const Eigen::Index d = rho0.rows();
    CMat rho = validated_initial_state(rho0);
    CMat k1(d, d), k2(d, d), k3(d, d), k4(d, d), stage(d, d);
    double leak_max = 0.0;
    bool leak_warning = false;

    long long step = 0;
    while (true) {
        plan.apply(rho, k1);
        if (step % cfg.sample_every == 0) {
            if (k1.norm() < cfg.ss_tol) break;
            check_sample_validity(rho, step * cfg.dt, leak_max, leak_warning, nullptr);
        }
        if (step >= cfg.max_steps) {
            std::ostringstream msg;
            msg << "find_steady_state: not converged after " << step
                << " steps; residual = " << k1.norm() << " (ss_tol = " << cfg.ss_tol << ")";
            throw IntegrationError(msg.str());
        }
        stage = rho + (0.5 * cfg.dt) * k1;
        plan.apply(stage, k2);
        stage = rho + (0.5 * cfg.dt) * k2;
        plan.apply(stage, k3);
        stage = rho + cfg.dt * k3;
        plan.apply(stage, k4);
        rho += (cfg.dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        ++step;
    }
    const auto rep = is_valid_density(rho);
    if (!rep.valid(1e-6)) throw IntegrationError("find_steady_state: converged state fails validity check");
    return rho / rho.trace().real();
}

}  // namespace

CMat find_steady_state(const BipartiteSystem& sys, const CMat& rho0, const IntegratorConfig& cfg) {
    const bool dissipative =
        std::any_of(sys.channels.begin(), sys.channels.end(), [](const auto& c) { return c.gamma > 0.0; });
    if (!dissipative)
        throw std::invalid_argument("find_steady_state: no dissipation, steady state not guaranteed");
    validate_config(cfg, spectral_radius(sys.hamiltonian()));
    const LindbladPlan plan = LindbladPlan::build(sys.hamiltonian(), sys.channels);
    return march_to_fixed_point(rho0, cfg, plan);
}

CMat find_steady_state(const DrivenSystem& sys, const CMat& rho0, const IntegratorConfig& cfg) {
    if (sys.epsilon != 0.0)
        throw std::invalid_argument(
            "find_steady_state: rotating drive has no Schroedinger-picture fixed point; "
            "integrate to t_end and inspect the populations instead");
    const bool dissipative =
        std::any_of(sys.channels.begin(), sys.channels.end(), [](const auto& c) { return c.gamma > 0.0; });
    if (!dissipative)
        throw std::invalid_argument("find_steady_state: no dissipation, steady state not guaranteed");
    validate_config(cfg, spectral_radius(sys.H0));
    const LindbladPlan plan = LindbladPlan::build(sys.H0, sys.channels);
    return march_to_fixed_point(rho0, cfg, plan);
}

CMat propagator(const CMat& h0, double t) {
    const auto eig = hermitian_eigen(h0);
    const CVec phases = (-imag_unit * t * eig.values.cast<Scalar>().array()).exp();
    return eig.vectors * phases.asDiagonal() * eig.vectors.adjoint();
}

CMat to_interaction_picture(const CMat& x, const CMat& h0, double t) {
    const CMat u = propagator(h0, t);
    return u.adjoint() * x * u;
}

PictureReport verify_picture_consistency(const DrivenSystem& sys, const CMat& rho, double t) {
    const CMat v_t = sys.drive(t);
    const CMat h_t = sys.H0 + v_t;
    const CMat dv_t = sys.drive_rate(t);

    CMat ld = CMat::Zero(sys.dim(), sys.dim());
    for (const auto& ch : sys.channels) ld += dissipator_apply(ch, rho);
    const double q_sch = (ld * h_t).trace().real();
    const double p_sch = (rho * dv_t).trace().real();

    const CMat u = propagator(sys.H0, t);
    auto conj_in = [&](const CMat& x) { return (u.adjoint() * x * u).eval(); };
    const CMat rho_i = conj_in(rho);
    const CMat h_i = conj_in(h_t);
    const CMat dv_i = conj_in(dv_t);
    CMat ld_i = CMat::Zero(sys.dim(), sys.dim());
    for (const auto& ch : sys.channels) {
        ThermalChannel moved = ch;
        moved.jump = conj_in(ch.jump);
        ld_i += dissipator_apply(moved, rho_i);
    }
    const double q_int = (ld_i * h_i).trace().real();
    const double p_int = (rho_i * dv_i).trace().real();

    PictureReport rep;
    rep.dQ = std::abs(q_sch - q_int);
    rep.dP = std::abs(p_sch - p_int);
    rep.bridge = std::abs((rho * commutator(sys.H0, v_t)).trace());
    return rep;
}

}  // namespace qthermo
