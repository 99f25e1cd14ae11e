#include "qthermo/thermo.hpp"

#include <cmath>

namespace qthermo {

namespace {

constexpr double kImagBudget = 1e-9;

// Tr(AB) without forming the product.
Scalar trace_product(const CMat& a, const CMat& b) {
    return (a.transpose().cwiseProduct(b)).sum();
}

double real_trace_product(const CMat& a, const CMat& b, const char* what) {
    const Scalar tr = trace_product(a, b);
    if (std::abs(tr.imag()) > kImagBudget * std::max(1.0, std::abs(tr.real())))
        throw std::runtime_error(std::string(what) + ": imaginary residue exceeds budget");
    return tr.real();
}

std::optional<double> central_derivative(const std::vector<double>& f, std::size_t i, double h) {
    const std::size_t n = f.size();
    if (n < 3) return std::nullopt;
    if (i == 0) return (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h);
    if (i == n - 1) return (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * h);
    return (f[i + 1] - f[i - 1]) / (2.0 * h);
}

bool finite_temperatures(const std::vector<ThermalChannel>& channels) {
    for (const auto& ch : channels)
        if (ch.gamma > 0.0 && !ch.temperature) return false;
    return true;
}

}  // namespace

double mean_energy(const CMat& rho, const CMat& h, double* imag_residue) {
    if (rho.rows() != h.rows() || rho.cols() != h.cols())
        throw std::invalid_argument("mean_energy: dimension mismatch");
    const Scalar tr = trace_product(rho, h);
    if (imag_residue) *imag_residue = std::abs(tr.imag());
    return tr.real();
}

double power_A(const BipartiteSystem& sys, const CMat& rho) {
    return (-imag_unit * trace_product(rho, commutator(sys.H_A, sys.V_AB))).real();
}

double power_B(const BipartiteSystem& sys, const CMat& rho) {
    return (-imag_unit * trace_product(rho, commutator(sys.H_B, sys.V_AB))).real();
}

namespace {

ChannelSums heat_flux_against(const BipartiteSystem& sys, const CMat& rho, const CMat& op,
                              const char* what) {
    ChannelSums sums;
    sums.per_channel.reserve(sys.channels.size());
    for (const auto& ch : sys.channels) {
        const double q = real_trace_product(dissipator_apply(ch, rho), op, what);
        sums.per_channel.push_back(q);
        sums.total += q;
    }
    return sums;
}

}  // namespace

ChannelSums heat_flux_A(const BipartiteSystem& sys, const CMat& rho) {
    return heat_flux_against(sys, rho, sys.H_A, "heat_flux_A");
}

ChannelSums heat_flux_V(const BipartiteSystem& sys, const CMat& rho) {
    return heat_flux_against(sys, rho, sys.V_AB, "heat_flux_V");
}

ChannelSums heat_flux_total(const BipartiteSystem& sys, const CMat& rho) {
    return heat_flux_against(sys, rho, sys.hamiltonian(), "heat_flux_total");
}

UnipartiteFluxes unipartite_fluxes(const DrivenSystem& sys, const CMat& rho, double t) {
    const CMat v_t = sys.drive(t);
    const CMat h_t = sys.H0 + v_t;
    UnipartiteFluxes out{};
    for (const auto& ch : sys.channels) {
        const CMat d = dissipator_apply(ch, rho);
        const double q_full = real_trace_product(d, h_t, "unipartite_fluxes");
        const double q_0 = real_trace_product(d, sys.H0, "unipartite_fluxes");
        const double q_v = real_trace_product(d, v_t, "unipartite_fluxes");
        out.per_channel_total.per_channel.push_back(q_full);
        out.per_channel_total.total += q_full;
        out.per_channel_0.per_channel.push_back(q_0);
        out.per_channel_0.total += q_0;
        out.per_channel_V.per_channel.push_back(q_v);
        out.per_channel_V.total += q_v;
    }
    out.qdot_alicki = out.per_channel_total.total;
    out.qdot_0 = out.per_channel_0.total;
    out.p_alicki = (rho * sys.drive_rate(t)).trace().real();
    out.p_0 = (-imag_unit * (rho * commutator(sys.H0, v_t)).trace()).real();
    return out;
}

double von_neumann_entropy(const CMat& rho) {
    if (rho.rows() != rho.cols())
        throw std::invalid_argument("von_neumann_entropy: matrix must be square");
    Eigen::SelfAdjointEigenSolver<CMat> solver(0.5 * (rho + rho.adjoint().eval()),
                                               Eigen::EigenvaluesOnly);
    const RVec& values = solver.eigenvalues();
    if (values.minCoeff() < -1e-6)
        throw std::domain_error("von_neumann_entropy: state has a negative eigenvalue beyond tolerance");
    double s = 0.0;
    for (Eigen::Index i = 0; i < values.size(); ++i) {
        const double p = std::clamp(values[i], 0.0, 1.0);
        if (p > 0.0) s -= p * std::log(p);
    }
    return s;
}

double entropy_production_full(const BipartiteSystem& sys, const CMat& rho, double dSdt_AB) {
    if (!finite_temperatures(sys.channels))
        throw std::domain_error(
            "entropy_production_full: zero-temperature channel present, sigma undefined");
    const auto q = heat_flux_total(sys, rho);
    double j = 0.0;
    for (std::size_t k = 0; k < sys.channels.size(); ++k)
        if (sys.channels[k].gamma > 0.0) j -= q.per_channel[k] / *sys.channels[k].temperature;
    return dSdt_AB + j;
}

SubsystemProduction entropy_production_A(const BipartiteSystem& sys, const CMat& rho,
                                         double dSdt_A, double delta_scale) {
    if (!finite_temperatures(sys.channels))
        throw std::domain_error("entropy_production_A: zero-temperature channel present, sigma_A undefined");
    const auto qa = heat_flux_A(sys, rho);
    const auto qv = heat_flux_V(sys, rho);
    const auto qt = heat_flux_total(sys, rho);
    SubsystemProduction out{};
    double qmax = 0.0, vmax = 0.0;
    out.J_A = 0.0;
    for (std::size_t k = 0; k < sys.channels.size(); ++k) {
        if (sys.channels[k].gamma <= 0.0) continue;
        out.J_A -= qa.per_channel[k] / *sys.channels[k].temperature;
        qmax = std::max(qmax, std::abs(qt.per_channel[k]));
        vmax = std::max(vmax, std::abs(qv.per_channel[k]));
    }
    out.sigma_A = dSdt_A + out.J_A;
    out.ss_conditions = vmax < delta_scale * qmax;
    return out;
}

CarnotReport carnot_check(double p_out, double qdot_H, double t_hot, double t_cold) {
    if (qdot_H == 0.0) throw std::domain_error("carnot_check: Qdot_H = 0, efficiency undefined");
    if (!(t_hot > t_cold && t_cold > 0.0))
        throw std::domain_error("carnot_check: need T_H > T_C > 0");
    CarnotReport rep{};
    rep.eta = -p_out / qdot_H;
    rep.bound = 1.0 - t_cold / t_hot;
    rep.satisfied = rep.eta <= rep.bound + 1e-6;
    return rep;
}

namespace {

// Per-system quantities hoisted out of the per-sample loop.
struct BipartiteCache {
    CMat hamiltonian;
    CMat comm_A;  // [H_A, V_AB]
    CMat comm_B;  // [H_B, V_AB]

    explicit BipartiteCache(const BipartiteSystem& sys)
        : hamiltonian(sys.hamiltonian()),
          comm_A(commutator(sys.H_A, sys.V_AB)),
          comm_B(commutator(sys.H_B, sys.V_AB)) {}
};

// First pass of record assembly: everything that depends on a single sample.
ThermoRecord instantaneous_record(const BipartiteSystem& sys, const BipartiteCache& cache,
                                  double t, const CMat& rho, double delta_scale) {
    ThermoRecord r;
    r.t = t;
    r.E_A = mean_energy(rho, sys.H_A);
    r.E_B = mean_energy(rho, sys.H_B);
    r.E_AB = mean_energy(rho, cache.hamiltonian);
    r.P_A = (-imag_unit * trace_product(rho, cache.comm_A)).real();
    r.P_B = (-imag_unit * trace_product(rho, cache.comm_B)).real();
    double qmax = 0.0, vmax = 0.0;
    r.Qdot_A = 0.0;
    r.Qdot_V = 0.0;
    for (const auto& ch : sys.channels) {
        const CMat d = dissipator_apply(ch, rho);
        ChannelFlux cf;
        cf.label = ch.label;
        cf.gamma = ch.gamma;
        cf.n_thermal = ch.n_thermal;
        cf.temperature = ch.temperature;
        cf.to_A = real_trace_product(d, sys.H_A, "records");
        cf.to_V = real_trace_product(d, sys.V_AB, "records");
        cf.total = cf.to_A + cf.to_V + real_trace_product(d, sys.H_B, "records");
        r.channels.push_back(cf);
        r.Qdot_A += cf.to_A;
        r.Qdot_V += cf.to_V;
        if (ch.gamma > 0.0) {
            qmax = std::max(qmax, std::abs(cf.total));
            vmax = std::max(vmax, std::abs(cf.to_V));
        }
    }
    r.ss_conditions = vmax < delta_scale * qmax;
    r.S_A = von_neumann_entropy(partial_trace_B(rho, sys.m, sys.n));
    r.S_B = von_neumann_entropy(partial_trace_A(rho, sys.m, sys.n));
    r.S_AB = von_neumann_entropy(rho);
    if (finite_temperatures(sys.channels)) {
        double j = 0.0, ja = 0.0;
        for (std::size_t k = 0; k < sys.channels.size(); ++k)
            if (sys.channels[k].gamma > 0.0) {
                j -= r.channels[k].total / *sys.channels[k].temperature;
                ja -= r.channels[k].to_A / *sys.channels[k].temperature;
            }
        r.J = j;
        r.J_A = ja;
    }
    double topf = 0.0;
    for (Eigen::Index i = 0; i < sys.m; ++i) topf += rho(i * sys.n + sys.n - 1, i * sys.n + sys.n - 1).real();
    r.leak = topf;
    return r;
}

ThermoRecord instantaneous_record(const DrivenSystem& sys, double t, const CMat& rho,
                                  double delta_scale) {
    ThermoRecord r;
    r.t = t;
    r.E_A = mean_energy(rho, sys.H0);
    r.E_AB = mean_energy(rho, sys.hamiltonian(t));
    const auto fx = unipartite_fluxes(sys, rho, t);
    r.P_A = fx.p_0;
    r.Qdot_A = fx.qdot_0;
    r.Qdot_V = fx.per_channel_V.total;
    r.qdot_alicki = fx.qdot_alicki;
    r.p_alicki = fx.p_alicki;
    double qmax = 0.0, vmax = 0.0;
    for (std::size_t k = 0; k < sys.channels.size(); ++k) {
        ChannelFlux cf;
        cf.label = sys.channels[k].label;
        cf.gamma = sys.channels[k].gamma;
        cf.n_thermal = sys.channels[k].n_thermal;
        cf.temperature = sys.channels[k].temperature;
        cf.total = fx.per_channel_total.per_channel[k];
        cf.to_A = fx.per_channel_0.per_channel[k];
        cf.to_V = fx.per_channel_V.per_channel[k];
        r.channels.push_back(cf);
        if (sys.channels[k].gamma > 0.0) {
            qmax = std::max(qmax, std::abs(cf.total));
            vmax = std::max(vmax, std::abs(cf.to_V));
        }
    }
    r.ss_conditions = vmax < delta_scale * qmax;
    r.S_AB = von_neumann_entropy(rho);
    if (finite_temperatures(sys.channels)) {
        double j = 0.0, ja = 0.0;
        for (std::size_t k = 0; k < sys.channels.size(); ++k)
            if (sys.channels[k].gamma > 0.0) {
                j -= fx.per_channel_total.per_channel[k] / *sys.channels[k].temperature;
                ja -= fx.per_channel_0.per_channel[k] / *sys.channels[k].temperature;
            }
        r.J = j;
        r.J_A = ja;
    }
    return r;
}

// Second pass: finite-difference derivatives, productions and residuals.
// For the driven case res_full checks the Alicki first law dE/dt = Qdot + P;
// for bipartite systems it checks dE_A/dt + dE_B/dt = Edot_AB - Qdot_V.
void add_derivative_fields(std::vector<ThermoRecord>& recs, double h, bool bipartite) {
    const std::size_t n = recs.size();
    if (n < 3 || h <= 0.0) return;
    std::vector<double> s_ab(n), s_a(n), e_a(n), e_b(n), e_full(n);
    for (std::size_t i = 0; i < n; ++i) {
        s_ab[i] = recs[i].S_AB;
        s_a[i] = recs[i].S_A.value_or(0.0);
        e_a[i] = recs[i].E_A;
        e_b[i] = recs[i].E_B.value_or(0.0);
        e_full[i] = recs[i].E_AB;
    }
    for (std::size_t i = 0; i < n; ++i) {
        auto& r = recs[i];
        r.dSdt_AB = central_derivative(s_ab, i, h);
        if (r.J) r.sigma = *r.dSdt_AB + *r.J;
        const double dEA = *central_derivative(e_a, i, h);
        r.firstlaw_res_A = std::abs(dEA - r.Qdot_A - r.P_A);
        if (bipartite) {
            r.dSdt_A = central_derivative(s_a, i, h);
            if (r.J_A) r.sigma_A = *r.dSdt_A + *r.J_A;
            double edot_ab = 0.0;
            for (const auto& cf : r.channels) edot_ab += cf.total;
            const double dEB = *central_derivative(e_b, i, h);
            r.firstlaw_res_full = std::abs(dEA + dEB - (edot_ab - r.Qdot_V));
        } else {
            const double dE = *central_derivative(e_full, i, h);
            r.firstlaw_res_full = std::abs(dE - *r.qdot_alicki - *r.p_alicki);
        }
    }
}

}  // namespace

std::vector<ThermoRecord> compute_records(const BipartiteSystem& sys, const Trajectory& traj,
                                          double delta_scale) {
    std::vector<ThermoRecord> recs;
    recs.reserve(traj.times.size());
    const BipartiteCache cache(sys);
    for (std::size_t i = 0; i < traj.times.size(); ++i)
        recs.push_back(instantaneous_record(sys, cache, traj.times[i], traj.states[i], delta_scale));
    add_derivative_fields(recs, traj.sample_dt(), true);
    return recs;
}

std::vector<ThermoRecord> compute_records(const DrivenSystem& sys, const Trajectory& traj,
                                          double delta_scale) {
    std::vector<ThermoRecord> recs;
    recs.reserve(traj.times.size());
    for (std::size_t i = 0; i < traj.times.size(); ++i)
        recs.push_back(instantaneous_record(sys, traj.times[i], traj.states[i], delta_scale));
    add_derivative_fields(recs, traj.sample_dt(), false);
    return recs;
}

std::vector<std::pair<double, double>> first_law_residuals(const BipartiteSystem& sys,
                                                           const Trajectory& traj) {
    if (traj.times.size() < 3)
        throw std::invalid_argument("first_law_residuals: need at least 3 samples for central differences");
    const auto recs = compute_records(sys, traj);
    std::vector<std::pair<double, double>> out;
    out.reserve(recs.size());
    for (const auto& r : recs) out.emplace_back(*r.firstlaw_res_A, *r.firstlaw_res_full);
    return out;
}

SteadyStateAnalysis analyze_steady_state(const BipartiteSystem& sys, const CMat& rho_ss,
                                         const IntegratorConfig& cfg, double delta_scale) {
    SteadyStateAnalysis out;
    out.residual = rhs(sys, rho_ss).norm();

    // Short probe around the fixed point so the entropy derivatives are
    // measured, not assumed.
    IntegratorConfig probe = cfg;
    probe.t_end = 4.0 * cfg.dt * double(cfg.sample_every);
    const Trajectory traj = integrate(sys, rho_ss, probe);
    const auto recs = compute_records(sys, traj, delta_scale);
    const auto& mid = recs[recs.size() / 2];
    out.record = mid;
    out.J = mid.J.value_or(0.0);
    out.sigma_A = mid.sigma_A.value_or(0.0);
    out.J_A = mid.J_A.value_or(0.0);
    out.ss_conditions = mid.ss_conditions;

    std::optional<double> t_hot, t_cold;
    double qdot_hot = 0.0;
    for (const auto& cf : mid.channels) {
        if (cf.label == Reservoir::hot && cf.temperature) {
            t_hot = cf.temperature;
            qdot_hot += cf.total;
        }
        if (cf.label == Reservoir::cold && cf.temperature) t_cold = cf.temperature;
    }
    out.t_hot = t_hot;
    out.t_cold = t_cold;
    if (t_hot && t_cold && qdot_hot != 0.0) {
        const auto carnot = carnot_check(*mid.P_B, qdot_hot, *t_hot, *t_cold);
        out.eta = carnot.eta;
        out.carnot_bound = carnot.bound;
        out.carnot_satisfied = carnot.satisfied;
    }
    return out;
}

}  // namespace qthermo
