#pragma once

#include "qthermo/dynamics.hpp"

#include <optional>
#include <vector>

// Thermodynamic functionals for bipartite and driven unipartite systems:
// energies, heat fluxes, powers, von Neumann entropies, entropy production
// and first/second-law diagnostics.
//
// Sign conventions: every flux is an energy current *into* the named part,
// so Qdot_A > 0 means the reservoirs heat subsystem A and P_A > 0 means the
// coupling does work on A. All reported fluxes are real parts; imaginary
// residues are tracked internally and must stay below 1e-9.

namespace qthermo {

/// Re Tr(rho H). If imag_residue is non-null it receives |Im Tr(rho H)|.
double mean_energy(const CMat& rho, const CMat& h, double* imag_residue = nullptr);

/// P_A = Re(-i Tr{rho [H_A, V_AB]}), the coherent energy current into A.
double power_A(const BipartiteSystem& sys, const CMat& rho);
double power_B(const BipartiteSystem& sys, const CMat& rho);

struct ChannelSums {
    std::vector<double> per_channel;  // in system channel order
    double total = 0.0;
};

/// Qdot_kA = Tr(D_k[rho] H_A): dissipative current into the bare A energy.
ChannelSums heat_flux_A(const BipartiteSystem& sys, const CMat& rho);
/// Qdot_kV = Tr(D_k[rho] V_AB): dissipative current into the coupling term.
ChannelSums heat_flux_V(const BipartiteSystem& sys, const CMat& rho);
/// Qdot_k = Tr(D_k[rho] H): total heat flux from reservoir k; the sum equals
/// the full-system energy flux (the time-independent H does no work).
ChannelSums heat_flux_total(const BipartiteSystem& sys, const CMat& rho);

struct UnipartiteFluxes {
    double qdot_alicki;  // Tr{L_d[rho] H(t)}
    double p_alicki;     // Tr{rho dH/dt}
    double qdot_0;       // Tr{L_d[rho] H0}
    double p_0;          // Re(-i Tr{rho [H0, V(t)]})
    ChannelSums per_channel_total;  // Tr{D_k[rho] H(t)}
    ChannelSums per_channel_0;      // Tr{D_k[rho] H0}
    ChannelSums per_channel_V;      // Tr{D_k[rho] V(t)}
};
UnipartiteFluxes unipartite_fluxes(const DrivenSystem& sys, const CMat& rho, double t);

/// -sum_i lambda_i ln lambda_i in nats (k_B = 1). Eigenvalues are clamped to
/// [0, 1]; states with an eigenvalue below -1e-6 are rejected.
double von_neumann_entropy(const CMat& rho);

/// Spohn entropy production sigma = dS/dt - sum_k Qdot_k / T_k. Throws if a
/// dissipative channel has no finite temperature (n_thermal = 0).
double entropy_production_full(const BipartiteSystem& sys, const CMat& rho, double dSdt_AB);

struct SubsystemProduction {
    double sigma_A;
    double J_A;          // -sum_k Qdot_kA / T_k
    bool ss_conditions;  // all |Qdot_kV| below delta_scale * max_k |Qdot_k|
};
/// sigma_A = dS_A/dt + J_A. Carries no positivity guarantee away from steady
/// state; ss_conditions reports whether the interaction heat fluxes are
/// negligible at this state.
SubsystemProduction entropy_production_A(const BipartiteSystem& sys, const CMat& rho,
                                         double dSdt_A, double delta_scale = 1e-3);

struct CarnotReport {
    double eta;    // -P_out / Qdot_H
    double bound;  // 1 - T_C / T_H
    bool satisfied;
};
CarnotReport carnot_check(double p_out, double qdot_H, double t_hot, double t_cold);

struct ChannelFlux {
    Reservoir label = Reservoir::other;
    double gamma = 0.0;
    double n_thermal = 0.0;
    std::optional<double> temperature;
    double total = 0.0;  // Tr(D_k[rho] H)
    double to_A = 0.0;   // Tr(D_k[rho] H_A)  (H0 for driven systems)
    double to_V = 0.0;   // Tr(D_k[rho] V)
};

/// One fully evaluated sample. Optional fields stay empty when the quantity
/// is undefined for the run (driven systems have no B subsystem; zero-
/// temperature channels leave sigma undefined).
struct ThermoRecord {
    double t = 0.0;
    double E_A = 0.0;
    std::optional<double> E_B;
    double E_AB = 0.0;
    double P_A = 0.0;
    std::optional<double> P_B;
    double Qdot_A = 0.0;
    double Qdot_V = 0.0;
    std::vector<ChannelFlux> channels;
    std::optional<double> S_A, S_B;
    double S_AB = 0.0;
    std::optional<double> dSdt_AB, dSdt_A;
    std::optional<double> J, J_A;
    std::optional<double> sigma, sigma_A;
    bool ss_conditions = false;
    std::optional<double> firstlaw_res_A, firstlaw_res_full;
    std::optional<double> leak;
    // Driven-system extras (Alicki full-H partitioning).
    std::optional<double> qdot_alicki, p_alicki;
};

/// Evaluates every ThermoRecord field along a sampled trajectory; entropy
/// and energy time derivatives use second-order central differences over the
/// uniform sample grid (one-sided second-order stencils at the endpoints).
std::vector<ThermoRecord> compute_records(const BipartiteSystem& sys, const Trajectory& traj,
                                          double delta_scale = 1e-3);
std::vector<ThermoRecord> compute_records(const DrivenSystem& sys, const Trajectory& traj,
                                          double delta_scale = 1e-3);

/// Per-sample (res_A, res_full) first-law residuals. Needs >= 3 samples.
std::vector<std::pair<double, double>> first_law_residuals(const BipartiteSystem& sys,
                                                           const Trajectory& traj);

struct SteadyStateAnalysis {
    double residual = 0.0;  // ||rhs(rho_ss)||_F
    ThermoRecord record;    // evaluated at the converged state
    double J = 0.0;
    double sigma_A = 0.0;
    double J_A = 0.0;
    bool ss_conditions = false;
    std::optional<double> eta, carnot_bound;
    std::optional<bool> carnot_satisfied;
    std::optional<double> t_hot, t_cold;
};

/// Probes a converged state with a short sampled run and evaluates the
/// steady-state second-law quantities at its midpoint.
SteadyStateAnalysis analyze_steady_state(const BipartiteSystem& sys, const CMat& rho_ss,
                                         const IntegratorConfig& cfg, double delta_scale = 1e-3);

}  // namespace qthermo
