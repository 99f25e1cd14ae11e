#pragma once

#include "qthermo/linalg.hpp"

#include <optional>
#include <string>
#include <vector>

// Model catalog: truncated-Fock cavity QED systems and driven two-level
// systems, with thermal Lindblad channels.
//
// Conventions (used throughout the library):
//   * hbar = k_B = 1; all frequencies are angular, energies carry the same
//     units, temperatures are in units of hbar*omega/k_B.
//   * Two-level matter basis is (|e>, |g>): sigma_e = diag(1, 0),
//     sigma^+ = |e><g|. Three-level basis is (|0>, |1>, |2>) ascending in
//     energy, sigma_01 = |0><1| etc.
//   * A thermal channel with rate Gamma and occupation nth generates
//       D[rho] = Gamma * { (nth+1)(2 s rho s+ - s+s rho - rho s+s)
//                        + nth   (2 s+ rho s - s s+ rho - rho s s+) },
//     so at nth = 0 an excited two-level population decays at rate 2*Gamma.

namespace qthermo {

enum class Reservoir { hot, cold, other };

std::string to_string(Reservoir r);

struct ThermalChannel {
    CMat jump;           // lowering operator, embedded in the full space
    double gamma = 0.0;  // decay rate, >= 0
    double n_thermal = 0.0;
    Reservoir label = Reservoir::other;
    // Reservoir temperature derived from the transition gap; absent for
    // zero-occupation (zero-temperature) channels.
    std::optional<double> temperature;
};

/// Fock-space truncation: cutoff N >= 2 levels; trajectories warn when the
/// population of the top level exceeds leak_tol.
struct FockSpec {
    int cutoff = 2;
    double leak_tol = 1e-6;
};

/// Bipartite system on C^m (x) C^n with H = H_A + H_B + V_AB, all parts
/// stored embedded in the m*n product space. Dissipation acts through
/// subsystem A only.
struct BipartiteSystem {
    Eigen::Index m = 0, n = 0;
    CMat H_A, H_B, V_AB;
    std::vector<ThermalChannel> channels;
    double leak_tol = 1e-6;

    Eigen::Index dim() const { return m * n; }
    CMat hamiltonian() const { return H_A + H_B + V_AB; }
};

/// Unipartite system with H(t) = H0 + V(t),
/// V(t) = eps * (sigma^+ e^{-i wL t} + sigma^- e^{+i wL t}).
struct DrivenSystem {
    CMat H0;
    double epsilon = 0.0;
    double omega_L = 0.0;
    CMat sigma_plus, sigma_minus;
    std::vector<ThermalChannel> channels;

    Eigen::Index dim() const { return H0.rows(); }
    CMat drive(double t) const;       // V(t)
    CMat drive_rate(double t) const;  // dV/dt, analytic
    CMat hamiltonian(double t) const { return H0 + drive(t); }
};

/// Truncated annihilation operator: a[k-1, k] = sqrt(k), k = 1..N-1.
CMat annihilation(int n_levels);

struct TwoLevelOps {
    CMat sigma_plus, sigma_minus, sigma_e;
};
TwoLevelOps matter_ops_2level();

struct ThreeLevelOps {
    CMat sigma_21, sigma_01, sigma_02;
    CMat sigma_bar;  // diag(w0, w1, w2)
};
ThreeLevelOps matter_ops_3level(double w0, double w1, double w2);

/// T = dw / ln(1/n + 1) for a bosonic reservoir with mean occupation n on a
/// transition of gap dw. Both arguments must be positive.
double reservoir_temperature(double gap, double occupation);

/// Applies the channel's dissipator to rho. Trace-annihilating and
/// Hermiticity-preserving.
CMat dissipator_apply(const ThermalChannel& ch, const CMat& rho);

/// Jaynes-Cummings model: H_m = wa sigma_e (x) 1, H_f = wf 1 (x) a+a,
/// V = lambda (sigma^+ (x) a + sigma^- (x) a+). No channels.
BipartiteSystem build_jcm(double omega_a, double omega_f, double lambda, const FockSpec& fock);

/// Extended dissipative JCM: three-level matter, hot channel on the 0-1 gap,
/// cold channel on the 0-2 gap, cavity mode on the 2-1 gap. Pass omega_f < 0
/// to pick the resonant default omega_f = w2 - w1.
BipartiteSystem build_edjcm(double w0, double w1, double w2, double omega_f, double lambda,
                            double gamma01, double gamma02, double n01, double n02,
                            const FockSpec& fock);

/// Driven two-level system: H0 = wa sigma_e plus the parametric drive.
DrivenSystem build_driven_tls(double omega_a, double epsilon, double omega_L,
                              std::vector<ThermalChannel> channels);

/// Convenience: thermal channel on the two-level sigma^- with temperature
/// derived from the gap omega_a (when n > 0).
ThermalChannel tls_thermal_channel(double omega_a, double gamma, double n_thermal,
                                   Reservoir label = Reservoir::other);

}  // namespace qthermo
