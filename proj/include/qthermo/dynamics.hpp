#pragma once

#include "qthermo/models.hpp"

#include <functional>
#include <vector>

// Time evolution of density matrices under the master equation
//   drho/dt = -i [H, rho] + sum_k D_k[rho],
// steady-state location by long-time integration, and interaction-picture
// transforms. The integrator is classic fixed-step RK4; the right-hand side
// is evaluated through a sparsity-exploiting plan that reproduces the dense
// reference rhs() to machine precision on Hermitian states.

namespace qthermo {

struct IntegrationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IntegratorConfig {
    double dt = 1e-3;
    double t_end = 1.0;
    Eigen::Index sample_every = 1;
    double ss_tol = 1e-9;         // steady-state residual threshold
    long long max_steps = 50'000'000;
};

struct Trajectory {
    std::vector<double> times;  // strictly increasing, uniform spacing
    std::vector<CMat> states;   // renormalized snapshots
    double leak_max = 0.0;      // peak top-Fock-level population (bipartite runs)
    bool leak_warning = false;

    double sample_dt() const { return times.size() > 1 ? times[1] - times[0] : 0.0; }
};

using SampleObserver = std::function<void(double t, const CMat& rho, std::size_t sample_idx)>;

/// Master-equation right-hand side with H = H_A + H_B + V_AB. Dense
/// reference implementation; valid for any square input.
CMat rhs(const BipartiteSystem& sys, const CMat& rho);

/// Right-hand side for the driven system, H(t) = H0 + V(t).
CMat rhs_driven(const DrivenSystem& sys, const CMat& rho, double t);

/// Half the spectral spread of H (the dynamics are invariant under constant
/// shifts of H, so this is the sharp step-size scale). Used to enforce
/// dt * radius <= 0.1 before integrating.
double spectral_radius(const CMat& h);

Trajectory integrate(const BipartiteSystem& sys, const CMat& rho0, const IntegratorConfig& cfg,
                     const SampleObserver& observer = {});

Trajectory integrate(const DrivenSystem& sys, const CMat& rho0, const IntegratorConfig& cfg,
                     const SampleObserver& observer = {});

/// Marches the master equation until ||rhs(rho)||_F < cfg.ss_tol and returns
/// the converged state. Throws if the system has no dissipation or if
/// cfg.max_steps is exceeded.
CMat find_steady_state(const BipartiteSystem& sys, const CMat& rho0, const IntegratorConfig& cfg);

/// Same for an undriven (epsilon = 0) system. With a rotating drive the
/// Schroedinger-picture rhs never vanishes, so this throws for epsilon != 0;
/// integrate to t_end and inspect the populations instead.
CMat find_steady_state(const DrivenSystem& sys, const CMat& rho0, const IntegratorConfig& cfg);

/// exp(-i H0 t), computed from the eigendecomposition of H0.
CMat propagator(const CMat& h0, double t);

/// U0^dag X U0 with U0 = exp(-i H0 t).
CMat to_interaction_picture(const CMat& x, const CMat& h0, double t);

struct PictureReport {
    double dQ;      // |heat flux (Schroedinger) - heat flux (interaction)|
    double dP;      // |power (Schroedinger) - power (interaction)|
    double bridge;  // |Tr{rho [H0, V(t)]}|, the full-vs-partial derivative gap
};

/// Evaluates heat flux and power in both pictures (transforming the state,
/// the Hamiltonian parts and the jump operators) and reports the residuals.
PictureReport verify_picture_consistency(const DrivenSystem& sys, const CMat& rho, double t);

}  // namespace qthermo
