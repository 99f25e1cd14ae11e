#include "qthermo/models.hpp"

#include <cmath>

namespace qthermo {

std::string to_string(Reservoir r) {
    switch (r) {
        case Reservoir::hot: return "hot";
        case Reservoir::cold: return "cold";
        default: return "other";
    }
}

CMat DrivenSystem::drive(double t) const {
    const Scalar phase = std::exp(-imag_unit * omega_L * t);
    return epsilon * (phase * sigma_plus + std::conj(phase) * sigma_minus);
}

CMat DrivenSystem::drive_rate(double t) const {
    const Scalar phase = std::exp(-imag_unit * omega_L * t);
    return epsilon * (-imag_unit * omega_L * phase * sigma_plus +
                      imag_unit * omega_L * std::conj(phase) * sigma_minus);
}

CMat annihilation(int n_levels) {
    if (n_levels < 2) throw std::invalid_argument("annihilation: need at least 2 Fock levels");
    CMat a = CMat::Zero(n_levels, n_levels);
    for (int k = 1; k < n_levels; ++k) a(k - 1, k) = std::sqrt(double(k));
    return a;
}

TwoLevelOps matter_ops_2level() {
    TwoLevelOps ops;
    ops.sigma_plus = CMat::Zero(2, 2);
    ops.sigma_plus(0, 1) = 1.0;
    ops.sigma_minus = ops.sigma_plus.adjoint();
    ops.sigma_e = CMat::Zero(2, 2);
    ops.sigma_e(0, 0) = 1.0;
    return ops;
}

ThreeLevelOps matter_ops_3level(double w0, double w1, double w2) {
    ThreeLevelOps ops;
    ops.sigma_21 = CMat::Zero(3, 3);
    ops.sigma_21(2, 1) = 1.0;  // |2><1|
    ops.sigma_01 = CMat::Zero(3, 3);
    ops.sigma_01(0, 1) = 1.0;  // |0><1|
    ops.sigma_02 = CMat::Zero(3, 3);
    ops.sigma_02(0, 2) = 1.0;  // |0><2|
    ops.sigma_bar = CMat::Zero(3, 3);
    ops.sigma_bar(0, 0) = w0;
    ops.sigma_bar(1, 1) = w1;
    ops.sigma_bar(2, 2) = w2;
    return ops;
}

double reservoir_temperature(double gap, double occupation) {
    if (gap <= 0.0) throw std::domain_error("reservoir_temperature: gap must be positive");
    if (occupation <= 0.0)
        throw std::domain_error("reservoir_temperature: occupation must be positive");
    return gap / std::log1p(1.0 / occupation);
}

CMat dissipator_apply(const ThermalChannel& ch, const CMat& rho) {
    const CMat& s = ch.jump;
    if (s.rows() != rho.rows() || rho.rows() != rho.cols())
        throw std::invalid_argument("dissipator_apply: dimension mismatch");
    const CMat sd = s.adjoint();
    const CMat sds = sd * s;  // s+ s
    const CMat ssd = s * sd;  // s s+
    CMat out = (2.0 * (s * rho * sd) - sds * rho - rho * sds) * (ch.n_thermal + 1.0);
    if (ch.n_thermal != 0.0)
        out += ch.n_thermal * (2.0 * (sd * rho * s) - ssd * rho - rho * ssd);
    return ch.gamma * out;
}

namespace {

void require_hermitian(const CMat& h, const char* what) {
    const double dev = (h - h.adjoint()).norm();
    if (dev > 1e-12 * std::max(1.0, h.norm()))
        throw std::logic_error(std::string(what) + ": built Hamiltonian part is not Hermitian");
}

}  // namespace

BipartiteSystem build_jcm(double omega_a, double omega_f, double lambda, const FockSpec& fock) {
    if (omega_a < 0.0 || omega_f < 0.0) throw std::invalid_argument("build_jcm: frequencies must be >= 0");
    if (lambda <= 0.0) throw std::invalid_argument("build_jcm: coupling must be positive");
    if (fock.cutoff < 2) throw std::invalid_argument("build_jcm: Fock cutoff must be >= 2");

    const auto ops = matter_ops_2level();
    const CMat a = annihilation(fock.cutoff);
    const CMat id_f = identity(fock.cutoff);
    const CMat id_m = identity(2);

    BipartiteSystem sys;
    sys.m = 2;
    sys.n = fock.cutoff;
    sys.leak_tol = fock.leak_tol;
    sys.H_A = omega_a * kron(ops.sigma_e, id_f);
    sys.H_B = omega_f * kron(id_m, (a.adjoint() * a).eval());
    sys.V_AB = lambda * (kron(ops.sigma_plus, a) + kron(ops.sigma_minus, a.adjoint().eval()));
    require_hermitian(sys.H_A, "build_jcm H_m");
    require_hermitian(sys.H_B, "build_jcm H_f");
    require_hermitian(sys.V_AB, "build_jcm V");
    return sys;
}

BipartiteSystem build_edjcm(double w0, double w1, double w2, double omega_f, double lambda,
                            double gamma01, double gamma02, double n01, double n02,
                            const FockSpec& fock) {
    if (!(w2 > w1 && w1 > w0 && w0 >= 0.0))
        throw std::invalid_argument("build_edjcm: need w2 > w1 > w0 >= 0");
    if (lambda <= 0.0) throw std::invalid_argument("build_edjcm: coupling must be positive");
    if (gamma01 < 0.0 || gamma02 < 0.0 || n01 < 0.0 || n02 < 0.0)
        throw std::invalid_argument("build_edjcm: rates and occupations must be >= 0");
    if (fock.cutoff < 2) throw std::invalid_argument("build_edjcm: Fock cutoff must be >= 2");
    if (omega_f < 0.0) omega_f = w2 - w1;  // resonant default

    const auto ops = matter_ops_3level(w0, w1, w2);
    const CMat a = annihilation(fock.cutoff);
    const CMat id_f = identity(fock.cutoff);
    const CMat id_m = identity(3);

    BipartiteSystem sys;
    sys.m = 3;
    sys.n = fock.cutoff;
    sys.leak_tol = fock.leak_tol;
    sys.H_A = kron(ops.sigma_bar, id_f);
    sys.H_B = omega_f * kron(id_m, (a.adjoint() * a).eval());
    // Excitation-conserving coupling on the 2-1 transition: the atom climbs
    // 1 -> 2 by absorbing a cavity photon and emits one on the way down, so
    // [H_m + H_f, V] = 0 at omega_f = w2 - w1.
    sys.V_AB = lambda * (kron(ops.sigma_21, a) + kron(ops.sigma_21.adjoint().eval(), a.adjoint().eval()));
    require_hermitian(sys.H_A, "build_edjcm H_m");
    require_hermitian(sys.H_B, "build_edjcm H_f");
    require_hermitian(sys.V_AB, "build_edjcm V");

    ThermalChannel lower;  // 0-1 transition
    lower.jump = kron(ops.sigma_01, id_f);
    lower.gamma = gamma01;
    lower.n_thermal = n01;
    if (n01 > 0.0) lower.temperature = reservoir_temperature(w1 - w0, n01);

    ThermalChannel upper;  // 0-2 transition
    upper.jump = kron(ops.sigma_02, id_f);
    upper.gamma = gamma02;
    upper.n_thermal = n02;
    if (n02 > 0.0) upper.temperature = reservoir_temperature(w2 - w0, n02);

    // Hot/cold follow the derived temperatures; with only one finite
    // temperature (or none) the 0-1 channel keeps the hot label.
    if (lower.temperature && upper.temperature && *upper.temperature > *lower.temperature) {
        lower.label = Reservoir::cold;
        upper.label = Reservoir::hot;
    } else {
        lower.label = Reservoir::hot;
        upper.label = Reservoir::cold;
    }

    sys.channels = {lower, upper};
    return sys;
}

DrivenSystem build_driven_tls(double omega_a, double epsilon, double omega_L,
                              std::vector<ThermalChannel> channels) {
    if (epsilon < 0.0) throw std::invalid_argument("build_driven_tls: drive amplitude must be >= 0");
    const auto ops = matter_ops_2level();
    DrivenSystem sys;
    sys.H0 = omega_a * ops.sigma_e;
    sys.epsilon = epsilon;
    sys.omega_L = omega_L;
    sys.sigma_plus = ops.sigma_plus;
    sys.sigma_minus = ops.sigma_minus;
    sys.channels = std::move(channels);
    return sys;
}

ThermalChannel tls_thermal_channel(double omega_a, double gamma, double n_thermal, Reservoir label) {
    if (gamma < 0.0 || n_thermal < 0.0)
        throw std::invalid_argument("tls_thermal_channel: rate and occupation must be >= 0");
    ThermalChannel ch;
    ch.jump = matter_ops_2level().sigma_minus;
    ch.gamma = gamma;
    ch.n_thermal = n_thermal;
    ch.label = label;
    if (n_thermal > 0.0 && omega_a > 0.0)
        ch.temperature = reservoir_temperature(omega_a, n_thermal);
    return ch;
}

}  // namespace qthermo
