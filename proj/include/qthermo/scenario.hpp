#pragma once

#include "qthermo/thermo.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <variant>
#include <vector>

// Scenario-file driven runner. A scenario is a strict JSON document naming a
// model from the catalog, an initial state, integrator settings, output paths
// and a list of named verification checks. Identical scenario files produce
// bit-identical trajectory CSVs.

namespace qthermo {

struct ScenarioError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct JcmParams {
    double omega_a = 1.0, omega_f = 1.0, lambda = 1.0;
    int fock_cutoff = 5;
    double leak_tol = 1e-6;
};

struct EdjcmParams {
    double omega0 = 0.0, omega1 = 30.0, omega2 = 40.0;
    double omega_f = -1.0;  // negative selects the resonant default w2 - w1
    double lambda = 1.0;
    double gamma01 = 0.05, gamma02 = 0.05;
    double n01 = 0.5, n02 = 5.0;
    int fock_cutoff = 15;
    double leak_tol = 1e-6;
};

struct ChannelSpec {
    double gamma = 0.0;
    double n_thermal = 0.0;
    Reservoir label = Reservoir::other;
    std::optional<double> gap;  // for the derived temperature (custom models)
    CMat op;                    // jump operator on subsystem A (custom models)
};

struct DrivenTlsParams {
    double omega_a = 1.0, epsilon = 0.0, omega_l = 1.0;
    std::vector<ChannelSpec> channels;
};

struct CustomBipartiteParams {
    Eigen::Index m = 0, n = 0;
    CMat h_a, h_b;  // local (m x m), (n x n)
    CMat v_ab;      // full (m*n x m*n)
    double leak_tol = 1e-6;
    std::vector<ChannelSpec> channels;
};

struct FieldStateSpec {
    enum class Kind { fock, thermal, coherent } kind = Kind::fock;
    int fock_level = 0;
    double thermal_occupation = 0.0;
    Scalar coherent_alpha{0.0, 0.0};
};

struct InitialStateSpec {
    enum class Kind { ground_vacuum, excited_vacuum, product, matrix_file } kind =
        Kind::ground_vacuum;
    // product parts: matter as a named level, an index, or an amplitude vector
    std::variant<std::monostate, std::string, int, std::vector<Scalar>> matter;
    std::optional<FieldStateSpec> field;
    std::string path;  // matrix_file
};

struct CheckRequest {
    std::string name;
    std::optional<double> tol;
};

struct Scenario {
    std::string name;
    std::filesystem::path source_path;
    std::string model;  // jcm | edjcm | driven_tls | custom_bipartite
    std::variant<JcmParams, EdjcmParams, DrivenTlsParams, CustomBipartiteParams> params;
    InitialStateSpec initial_state;
    IntegratorConfig integrator;
    double ss_delta_scale = 1e-3;
    std::string csv_name = "trajectory.csv";
    std::string report_name = "report.json";
    std::vector<CheckRequest> checks;
};

/// Parses and validates a scenario file. Unknown fields, missing required
/// fields and unphysical parameters are rejected with the offending location
/// in the message.
Scenario load_scenario(const std::filesystem::path& path);

using SystemVariant = std::variant<BipartiteSystem, DrivenSystem>;

SystemVariant build_system(const Scenario& sc);
CMat build_initial_state(const Scenario& sc, const SystemVariant& sys);

struct CheckOutcome {
    std::string status;  // pass | fail | not_applicable
    std::optional<double> value;
    std::optional<double> tol;
    std::string detail;
};

struct RunResult {
    int exit_code = 0;  // 0 pass, 1 check failure, 2 input error, 3 numerical abort
    std::filesystem::path csv_path, report_path;
    std::map<std::string, CheckOutcome> checks;
    double sigma_min = 0.0;
    double leak_max = 0.0;
    std::vector<std::string> warnings;
};

struct RunOptions {
    std::filesystem::path out_dir;
    std::vector<std::string> extra_checks;
    std::optional<double> dt_override;
    std::optional<double> t_end_override;
};

/// Integrates the scenario, writes the trajectory CSV and the JSON report,
/// and evaluates the requested checks.
RunResult run_scenario(const Scenario& sc, const RunOptions& opts);

struct CheckInfo {
    std::string name;
    std::string formula;
    std::string default_tol;
    std::string applies_to;
};

/// The documented check catalog.
std::vector<CheckInfo> list_checks();

/// Frozen trajectory CSV header.
std::string csv_header();

}  // namespace qthermo
