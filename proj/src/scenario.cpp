#include "qthermo/scenario.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

namespace qthermo {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& where, const std::string& what) {
    throw ScenarioError(where + ": " + what);
}

// Strict accessor for one JSON object: every get_* marks the key as consumed
// and finish() rejects whatever was not consumed.
class Fields {
  public:
    Fields(const json& j, std::string where) : j_(j), where_(std::move(where)) {
        if (!j_.is_object()) fail(where_, "expected an object");
    }

    const json* find(const std::string& key) {
        seen_.insert(key);
        const auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }

    const json& require(const std::string& key) {
        const json* p = find(key);
        if (!p) fail(where_, "missing required field '" + key + "'");
        return *p;
    }

    double number(const std::string& key) { return as_number(require(key), key); }

    double number_or(const std::string& key, double fallback) {
        const json* p = find(key);
        return p ? as_number(*p, key) : fallback;
    }

    int integer(const std::string& key) { return as_integer(require(key), key); }

    int integer_or(const std::string& key, int fallback) {
        const json* p = find(key);
        return p ? as_integer(*p, key) : fallback;
    }

    std::string text(const std::string& key) {
        const json& v = require(key);
        if (!v.is_string()) fail(where_, "field '" + key + "' must be a string");
        return v.get<std::string>();
    }

    std::string text_or(const std::string& key, const std::string& fallback) {
        const json* p = find(key);
        if (!p) return fallback;
        if (!p->is_string()) fail(where_, "field '" + key + "' must be a string");
        return p->get<std::string>();
    }

    void finish() const {
        for (const auto& [key, value] : j_.items())
            if (!seen_.count(key)) fail(where_, "unknown field '" + key + "'");
    }

    const std::string& where() const { return where_; }

  private:
    double as_number(const json& v, const std::string& key) const {
        if (!v.is_number()) fail(where_, "field '" + key + "' must be a number");
        return v.get<double>();
    }
    int as_integer(const json& v, const std::string& key) const {
        if (!v.is_number_integer()) fail(where_, "field '" + key + "' must be an integer");
        return v.get<int>();
    }

    const json& j_;
    std::string where_;
    std::set<std::string> seen_;
};

CMat parse_matrix(const json& j, const std::string& where, Eigen::Index rows, Eigen::Index cols) {
    if (!j.is_array() || Eigen::Index(j.size()) != rows) fail(where, "expected " + std::to_string(rows) + " rows");
    CMat m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const json& row = j[r];
        if (!row.is_array() || Eigen::Index(row.size()) != cols)
            fail(where, "row " + std::to_string(r) + " must have " + std::to_string(cols) + " entries");
        for (Eigen::Index c = 0; c < cols; ++c) {
            const json& e = row[c];
            if (e.is_number()) {
                m(r, c) = Scalar(e.get<double>(), 0.0);
            } else if (e.is_array() && e.size() == 2 && e[0].is_number() && e[1].is_number()) {
                m(r, c) = Scalar(e[0].get<double>(), e[1].get<double>());
            } else {
                fail(where, "entries must be numbers or [re, im] pairs");
            }
        }
    }
    return m;
}

Reservoir parse_label(const std::string& text, const std::string& where) {
    if (text == "hot") return Reservoir::hot;
    if (text == "cold") return Reservoir::cold;
    if (text == "other") return Reservoir::other;
    fail(where, "label must be one of hot/cold/other");
}

std::vector<ChannelSpec> parse_channels(const json& j, const std::string& where, bool with_op,
                                        Eigen::Index op_dim) {
    if (!j.is_array()) fail(where, "expected an array of channels");
    std::vector<ChannelSpec> out;
    for (std::size_t k = 0; k < j.size(); ++k) {
        const std::string ch_where = where + "[" + std::to_string(k) + "]";
        Fields f(j[k], ch_where);
        ChannelSpec ch;
        ch.gamma = f.number("gamma");
        if (ch.gamma < 0.0) fail(ch_where, "gamma must be >= 0");
        ch.n_thermal = f.number("n_thermal");
        if (ch.n_thermal < 0.0) fail(ch_where, "n_thermal must be >= 0");
        ch.label = parse_label(f.text_or("label", "other"), ch_where);
        if (const json* gap = f.find("gap")) {
            if (!gap->is_number()) fail(ch_where, "gap must be a number");
            ch.gap = gap->get<double>();
            if (*ch.gap <= 0.0) fail(ch_where, "gap must be positive");
        }
        if (with_op) {
            ch.op = parse_matrix(f.require("op"), ch_where + ".op", op_dim, op_dim);
        } else if (f.find("op")) {
            fail(ch_where, "unknown field 'op'");
        }
        f.finish();
        out.push_back(std::move(ch));
    }
    return out;
}

InitialStateSpec parse_initial_state(const json& j, const std::string& where) {
    Fields f(j, where);
    InitialStateSpec spec;
    const std::string type = f.text("type");
    if (type == "ground_vacuum") {
        spec.kind = InitialStateSpec::Kind::ground_vacuum;
    } else if (type == "excited_vacuum") {
        spec.kind = InitialStateSpec::Kind::excited_vacuum;
    } else if (type == "product") {
        spec.kind = InitialStateSpec::Kind::product;
        const json& matter = f.require("matter");
        if (matter.is_string()) {
            spec.matter = matter.get<std::string>();
        } else if (matter.is_number_integer()) {
            spec.matter = matter.get<int>();
        } else if (matter.is_array()) {
            std::vector<Scalar> amps;
            for (const auto& e : matter) {
                if (e.is_number())
                    amps.emplace_back(e.get<double>(), 0.0);
                else if (e.is_array() && e.size() == 2)
                    amps.emplace_back(e[0].get<double>(), e[1].get<double>());
                else
                    fail(where + ".matter", "amplitudes must be numbers or [re, im] pairs");
            }
            spec.matter = std::move(amps);
        } else {
            fail(where + ".matter", "must be a level name, index or amplitude vector");
        }
        if (const json* field = f.find("field")) {
            Fields ff(*field, where + ".field");
            FieldStateSpec fs;
            int kinds = 0;
            if (const json* v = ff.find("fock")) {
                fs.kind = FieldStateSpec::Kind::fock;
                fs.fock_level = v->get<int>();
                ++kinds;
            }
            if (const json* v = ff.find("thermal")) {
                fs.kind = FieldStateSpec::Kind::thermal;
                fs.thermal_occupation = v->get<double>();
                if (fs.thermal_occupation < 0.0) fail(where + ".field", "thermal occupation must be >= 0");
                ++kinds;
            }
            if (const json* v = ff.find("coherent")) {
                fs.kind = FieldStateSpec::Kind::coherent;
                if (!v->is_array() || v->size() != 2) fail(where + ".field", "coherent must be [re, im]");
                fs.coherent_alpha = Scalar((*v)[0].get<double>(), (*v)[1].get<double>());
                ++kinds;
            }
            if (kinds != 1) fail(where + ".field", "exactly one of fock/thermal/coherent required");
            ff.finish();
            spec.field = fs;
        }
    } else if (type == "matrix_file") {
        spec.kind = InitialStateSpec::Kind::matrix_file;
        spec.path = f.text("path");
    } else {
        fail(where, "unknown initial state type '" + type + "'");
    }
    f.finish();
    return spec;
}

IntegratorConfig parse_integrator(const json& j, const std::string& where) {
    Fields f(j, where);
    IntegratorConfig cfg;
    cfg.dt = f.number("dt");
    if (cfg.dt <= 0.0) fail(where, "dt must be positive");
    cfg.t_end = f.number("t_end");
    if (cfg.t_end <= 0.0) fail(where, "t_end must be positive");
    cfg.sample_every = f.integer_or("sample_every", 1);
    if (cfg.sample_every < 1) fail(where, "sample_every must be >= 1");
    cfg.ss_tol = f.number_or("ss_tol", 1e-9);
    if (cfg.ss_tol <= 0.0) fail(where, "ss_tol must be positive");
    cfg.max_steps = f.integer_or("max_steps", 50'000'000);
    if (cfg.max_steps < 1) fail(where, "max_steps must be >= 1");
    f.finish();
    return cfg;
}

}  // namespace

Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ScenarioError(path.string() + ": cannot open file");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ScenarioError(path.string() + ": " + e.what());
    }

    const std::string where = path.filename().string();
    Fields top(doc, where);
    Scenario sc;
    sc.source_path = path;
    sc.name = top.text_or("name", path.stem().string());
    sc.model = top.text("model");

    const json& params = top.require("params");
    if (sc.model == "jcm") {
        Fields f(params, where + ".params");
        JcmParams p;
        p.omega_a = f.number("omega_a");
        p.omega_f = f.number("omega_f");
        p.lambda = f.number("lambda");
        p.fock_cutoff = f.integer("fock_cutoff");
        p.leak_tol = f.number_or("leak_tol", 1e-6);
        if (p.omega_a < 0.0) fail(where + ".params", "omega_a must be >= 0");
        if (p.omega_f < 0.0) fail(where + ".params", "omega_f must be >= 0");
        if (p.lambda <= 0.0) fail(where + ".params", "lambda must be positive");
        if (p.fock_cutoff < 2) fail(where + ".params", "fock_cutoff must be >= 2");
        f.finish();
        sc.params = p;
    } else if (sc.model == "edjcm") {
        Fields f(params, where + ".params");
        EdjcmParams p;
        p.omega0 = f.number("omega0");
        p.omega1 = f.number("omega1");
        p.omega2 = f.number("omega2");
        p.omega_f = f.number_or("omega_f", -1.0);
        p.lambda = f.number("lambda");
        p.gamma01 = f.number("gamma01");
        p.gamma02 = f.number("gamma02");
        p.n01 = f.number("n01");
        p.n02 = f.number("n02");
        p.fock_cutoff = f.integer("fock_cutoff");
        p.leak_tol = f.number_or("leak_tol", 1e-6);
        if (!(p.omega2 > p.omega1 && p.omega1 > p.omega0 && p.omega0 >= 0.0))
            fail(where + ".params", "need omega2 > omega1 > omega0 >= 0");
        if (p.lambda <= 0.0) fail(where + ".params", "lambda must be positive");
        if (p.gamma01 < 0.0) fail(where + ".params", "gamma01 must be >= 0");
        if (p.gamma02 < 0.0) fail(where + ".params", "gamma02 must be >= 0");
        if (p.n01 < 0.0) fail(where + ".params", "n01 must be >= 0");
        if (p.n02 < 0.0) fail(where + ".params", "n02 must be >= 0");
        if (p.fock_cutoff < 2) fail(where + ".params", "fock_cutoff must be >= 2");
        f.finish();
        sc.params = p;
    } else if (sc.model == "driven_tls") {
        Fields f(params, where + ".params");
        DrivenTlsParams p;
        p.omega_a = f.number("omega_a");
        p.epsilon = f.number("epsilon");
        p.omega_l = f.number_or("omega_l", p.omega_a);
        if (p.epsilon < 0.0) fail(where + ".params", "epsilon must be >= 0");
        if (const json* ch = f.find("channels"))
            p.channels = parse_channels(*ch, where + ".params.channels", false, 2);
        f.finish();
        sc.params = p;
    } else if (sc.model == "custom_bipartite") {
        Fields f(params, where + ".params");
        CustomBipartiteParams p;
        p.m = f.integer("m");
        p.n = f.integer("n");
        if (p.m < 1 || p.n < 1) fail(where + ".params", "m and n must be >= 1");
        p.h_a = parse_matrix(f.require("H_A"), where + ".params.H_A", p.m, p.m);
        p.h_b = parse_matrix(f.require("H_B"), where + ".params.H_B", p.n, p.n);
        p.v_ab = parse_matrix(f.require("V_AB"), where + ".params.V_AB", p.m * p.n, p.m * p.n);
        p.leak_tol = f.number_or("leak_tol", 1e-6);
        if (const json* ch = f.find("channels"))
            p.channels = parse_channels(*ch, where + ".params.channels", true, p.m);
        f.finish();
        sc.params = p;
    } else {
        fail(where, "unknown model '" + sc.model + "'");
    }

    sc.initial_state = parse_initial_state(top.require("initial_state"), where + ".initial_state");
    sc.integrator = parse_integrator(top.require("integrator"), where + ".integrator");
    sc.ss_delta_scale = top.number_or("ss_delta_scale", 1e-3);
    if (sc.ss_delta_scale <= 0.0) fail(where, "ss_delta_scale must be positive");

    if (const json* outputs = top.find("outputs")) {
        Fields f(*outputs, where + ".outputs");
        sc.csv_name = f.text_or("csv", sc.csv_name);
        sc.report_name = f.text_or("report", sc.report_name);
        f.finish();
    }

    if (const json* checks = top.find("checks")) {
        if (!checks->is_array()) fail(where + ".checks", "expected an array");
        for (std::size_t i = 0; i < checks->size(); ++i) {
            const json& c = (*checks)[i];
            CheckRequest req;
            if (c.is_string()) {
                req.name = c.get<std::string>();
            } else if (c.is_object()) {
                Fields f(c, where + ".checks[" + std::to_string(i) + "]");
                req.name = f.text("name");
                if (const json* tol = f.find("tol")) req.tol = tol->get<double>();
                f.finish();
            } else {
                fail(where + ".checks", "entries must be names or {name, tol}");
            }
            const auto catalog = list_checks();
            if (std::none_of(catalog.begin(), catalog.end(),
                             [&](const CheckInfo& ci) { return ci.name == req.name; }))
                fail(where + ".checks", "unknown check '" + req.name + "'");
            sc.checks.push_back(std::move(req));
        }
    }
    top.finish();
    return sc;
}

SystemVariant build_system(const Scenario& sc) {
    if (const auto* p = std::get_if<JcmParams>(&sc.params))
        return build_jcm(p->omega_a, p->omega_f, p->lambda, FockSpec{p->fock_cutoff, p->leak_tol});
    if (const auto* p = std::get_if<EdjcmParams>(&sc.params))
        return build_edjcm(p->omega0, p->omega1, p->omega2, p->omega_f, p->lambda, p->gamma01,
                           p->gamma02, p->n01, p->n02, FockSpec{p->fock_cutoff, p->leak_tol});
    if (const auto* p = std::get_if<DrivenTlsParams>(&sc.params)) {
        std::vector<ThermalChannel> channels;
        for (const auto& spec : p->channels) {
            ThermalChannel ch = tls_thermal_channel(spec.gap.value_or(p->omega_a), spec.gamma,
                                                    spec.n_thermal, spec.label);
            channels.push_back(std::move(ch));
        }
        return build_driven_tls(p->omega_a, p->epsilon, p->omega_l, std::move(channels));
    }
    const auto& p = std::get<CustomBipartiteParams>(sc.params);
    BipartiteSystem sys;
    sys.m = p.m;
    sys.n = p.n;
    sys.leak_tol = p.leak_tol;
    sys.H_A = kron(p.h_a, identity(p.n));
    sys.H_B = kron(identity(p.m), p.h_b);
    sys.V_AB = p.v_ab;
    const double scale = std::max(1.0, sys.hamiltonian().norm());
    if ((sys.H_A - sys.H_A.adjoint()).norm() > 1e-12 * scale)
        throw ScenarioError(sc.name + ": H_A is not Hermitian");
    if ((sys.H_B - sys.H_B.adjoint()).norm() > 1e-12 * scale)
        throw ScenarioError(sc.name + ": H_B is not Hermitian");
    if ((sys.V_AB - sys.V_AB.adjoint()).norm() > 1e-12 * scale)
        throw ScenarioError(sc.name + ": V_AB is not Hermitian");
    for (const auto& spec : p.channels) {
        ThermalChannel ch;
        ch.jump = kron(spec.op, identity(p.n));
        ch.gamma = spec.gamma;
        ch.n_thermal = spec.n_thermal;
        ch.label = spec.label;
        if (spec.gap && spec.n_thermal > 0.0)
            ch.temperature = reservoir_temperature(*spec.gap, spec.n_thermal);
        sys.channels.push_back(std::move(ch));
    }
    return sys;
}

namespace {

CVec fock_vector(Eigen::Index dim, int level, const std::string& who) {
    if (level < 0 || level >= dim)
        throw ScenarioError(who + ": Fock level out of range for the configured cutoff");
    CVec v = CVec::Zero(dim);
    v(level) = 1.0;
    return v;
}

CMat field_state(const FieldStateSpec& spec, Eigen::Index dim, const std::string& who) {
    switch (spec.kind) {
        case FieldStateSpec::Kind::fock: {
            const CVec v = fock_vector(dim, spec.fock_level, who);
            return v * v.adjoint();
        }
        case FieldStateSpec::Kind::thermal: {
            CMat rho = CMat::Zero(dim, dim);
            const double nbar = spec.thermal_occupation;
            const double r = nbar / (nbar + 1.0);
            double z = 0.0;
            for (Eigen::Index k = 0; k < dim; ++k) z += std::pow(r, double(k));
            for (Eigen::Index k = 0; k < dim; ++k) rho(k, k) = std::pow(r, double(k)) / z;
            return rho;
        }
        case FieldStateSpec::Kind::coherent: {
            CVec v(dim);
            // amplitudes alpha^k / sqrt(k!), normalized after truncation
            Scalar amp{1.0, 0.0};
            for (Eigen::Index k = 0; k < dim; ++k) {
                v(k) = amp;
                amp *= spec.coherent_alpha / std::sqrt(double(k + 1));
            }
            v /= v.norm();
            return v * v.adjoint();
        }
    }
    throw ScenarioError(who + ": unreachable field state kind");
}

Eigen::Index named_matter_level(const std::string& name, const std::string& model,
                                Eigen::Index m, const std::string& who) {
    // Catalog convention: the two-level basis is (|e>, |g>), the three-level
    // basis is (|0>, |1>, |2>) ascending.
    if (name == "ground") return model == "jcm" || m == 2 ? 1 : 0;
    if (name == "excited") return model == "jcm" || m == 2 ? 0 : m - 1;
    throw ScenarioError(who + ": unknown matter level name '" + name + "' (use ground/excited or an index)");
}

CMat matter_state(const Scenario& sc, Eigen::Index m, const std::string& who) {
    const auto& spec = sc.initial_state;
    if (const auto* name = std::get_if<std::string>(&spec.matter)) {
        const CVec v = fock_vector(m, int(named_matter_level(*name, sc.model, m, who)), who);
        return v * v.adjoint();
    }
    if (const auto* idx = std::get_if<int>(&spec.matter)) {
        if (*idx < 0 || *idx >= m) throw ScenarioError(who + ": matter level index out of range");
        const CVec v = fock_vector(m, *idx, who);
        return v * v.adjoint();
    }
    if (const auto* amps = std::get_if<std::vector<Scalar>>(&spec.matter)) {
        if (Eigen::Index(amps->size()) != m)
            throw ScenarioError(who + ": matter amplitude vector must have dimension " + std::to_string(m));
        CVec v(m);
        for (Eigen::Index i = 0; i < m; ++i) v(i) = (*amps)[i];
        const double norm = v.norm();
        if (norm == 0.0) throw ScenarioError(who + ": matter amplitudes are all zero");
        v /= norm;
        return v * v.adjoint();
    }
    throw ScenarioError(who + ": product state requires a matter part");
}

CMat load_matrix_file(const std::filesystem::path& base, const std::string& rel,
                      Eigen::Index dim) {
    if (rel.empty()) throw ScenarioError("initial_state: matrix_file path is empty");
    const std::filesystem::path given(rel);
    const std::filesystem::path path = given.is_absolute() ? given : base / given;
    std::ifstream in(path);
    if (!in) throw ScenarioError(path.string() + ": cannot open state file");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ScenarioError(path.string() + ": " + e.what());
    }
    Fields f(doc, path.filename().string());
    const CMat rho = parse_matrix(f.require("rows"), path.filename().string() + ".rows", dim, dim);
    f.finish();
    return rho;
}

}  // namespace

CMat build_initial_state(const Scenario& sc, const SystemVariant& sys) {
    const std::string who = sc.name + ".initial_state";
    const auto& spec = sc.initial_state;

    if (const auto* bip = std::get_if<BipartiteSystem>(&sys)) {
        switch (spec.kind) {
            case InitialStateSpec::Kind::ground_vacuum:
            case InitialStateSpec::Kind::excited_vacuum: {
                if (sc.model == "custom_bipartite")
                    throw ScenarioError(who + ": named states are ambiguous for custom models; use 'product'");
                const bool excited = spec.kind == InitialStateSpec::Kind::excited_vacuum;
                const Eigen::Index level =
                    named_matter_level(excited ? "excited" : "ground", sc.model, bip->m, who);
                const CVec vm = fock_vector(bip->m, int(level), who);
                const CVec vf = fock_vector(bip->n, 0, who);
                const CMat rm = vm * vm.adjoint();
                const CMat rf = vf * vf.adjoint();
                return kron(rm, rf);
            }
            case InitialStateSpec::Kind::product: {
                const CMat rm = matter_state(sc, bip->m, who);
                if (!spec.field) throw ScenarioError(who + ": bipartite product state needs a field part");
                const CMat rf = field_state(*spec.field, bip->n, who);
                return kron(rm, rf);
            }
            case InitialStateSpec::Kind::matrix_file:
                return load_matrix_file(sc.source_path.parent_path(), spec.path, bip->dim());
        }
    }
    const auto& driven = std::get<DrivenSystem>(sys);
    switch (spec.kind) {
        case InitialStateSpec::Kind::ground_vacuum: {
            CMat rho = CMat::Zero(2, 2);
            rho(1, 1) = 1.0;
            return rho;
        }
        case InitialStateSpec::Kind::excited_vacuum: {
            CMat rho = CMat::Zero(2, 2);
            rho(0, 0) = 1.0;
            return rho;
        }
        case InitialStateSpec::Kind::product: {
            if (spec.field) throw ScenarioError(who + ": driven systems have no field part");
            return matter_state(sc, driven.dim(), who);
        }
        case InitialStateSpec::Kind::matrix_file:
            return load_matrix_file(sc.source_path.parent_path(), spec.path, driven.dim());
    }
    throw ScenarioError(who + ": unreachable initial state kind");
}

// ---------------------------------------------------------------------------
// Trajectory CSV

std::string csv_header() {
    return "t,E_A,E_B,E_AB,P_A,P_B,Qdot_A,Qdot_V,Qdot_hot,Qdot_cold,Qdot_hotA,Qdot_hotV,"
           "Qdot_coldA,Qdot_coldV,S_A,S_B,S_AB,dSdt_AB,dSdt_A,sigma,sigma_A,firstlaw_res_A,leak";
}

namespace {

void append_field(std::string& line, const std::optional<double>& v) {
    line.push_back(',');
    if (v) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", *v);
        line += buf;
    }
}

void write_csv(const std::filesystem::path& path, const std::vector<ThermoRecord>& recs) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ScenarioError(path.string() + ": cannot open for writing");
    out << csv_header() << '\n';
    for (const auto& r : recs) {
        std::optional<double> q_hot, q_cold, q_hotA, q_hotV, q_coldA, q_coldV;
        for (const auto& cf : r.channels) {
            auto add = [](std::optional<double>& slot, double v) { slot = slot.value_or(0.0) + v; };
            if (cf.label == Reservoir::hot) {
                add(q_hot, cf.total);
                add(q_hotA, cf.to_A);
                add(q_hotV, cf.to_V);
            } else if (cf.label == Reservoir::cold) {
                add(q_cold, cf.total);
                add(q_coldA, cf.to_A);
                add(q_coldV, cf.to_V);
            }
        }
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", r.t);
        std::string line = buf;
        append_field(line, r.E_A);
        append_field(line, r.E_B);
        append_field(line, r.E_AB);
        append_field(line, r.P_A);
        append_field(line, r.P_B);
        append_field(line, r.Qdot_A);
        append_field(line, r.Qdot_V);
        append_field(line, q_hot);
        append_field(line, q_cold);
        append_field(line, q_hotA);
        append_field(line, q_hotV);
        append_field(line, q_coldA);
        append_field(line, q_coldV);
        append_field(line, r.S_A);
        append_field(line, r.S_B);
        append_field(line, r.S_AB);
        append_field(line, r.dSdt_AB);
        append_field(line, r.dSdt_A);
        append_field(line, r.sigma);
        append_field(line, r.sigma_A);
        append_field(line, r.firstlaw_res_A);
        append_field(line, r.leak);
        out << line << '\n';
    }
}

// ---------------------------------------------------------------------------
// Checks

struct RunContext {
    const Scenario& sc;
    const SystemVariant& sys;
    const Trajectory& traj;
    const std::vector<ThermoRecord>& recs;

    const BipartiteSystem* bip() const { return std::get_if<BipartiteSystem>(&sys); }
    const DrivenSystem* driven() const { return std::get_if<DrivenSystem>(&sys); }

    bool dissipative() const {
        auto live = [](const auto& chs) {
            return std::any_of(chs.begin(), chs.end(), [](const auto& c) { return c.gamma > 0.0; });
        };
        return bip() ? live(bip()->channels) : live(driven()->channels);
    }

    bool closed() const { return !dissipative(); }

    bool resonant_bipartite() const {
        const auto* b = bip();
        if (!b) return false;
        return commutator((b->H_A + b->H_B).eval(), b->V_AB).norm() <
               1e-12 * std::max(1.0, b->hamiltonian().norm());
    }

    bool finite_temps() const {
        auto ok = [](const auto& chs) {
            for (const auto& c : chs)
                if (c.gamma > 0.0 && !c.temperature) return false;
            return true;
        };
        return bip() ? ok(bip()->channels) : ok(driven()->channels);
    }

    // Fixed point continuation, shared by the steady-state checks. Only
    // attempted for time-independent generators.
    struct FixedPoint {
        bool attempted = false;
        bool converged = false;
        CMat state;
        double residual = 0.0;
        std::string error;
    };
    mutable FixedPoint fp;

    const FixedPoint& fixed_point() const {
        if (fp.attempted) return fp;
        fp.attempted = true;
        try {
            if (const auto* b = bip()) {
                fp.state = find_steady_state(*b, traj.states.back(), sc.integrator);
                fp.residual = rhs(*b, fp.state).norm();
            } else {
                fp.state = find_steady_state(*driven(), traj.states.back(), sc.integrator);
                CMat d = -imag_unit * commutator(driven()->H0, fp.state);
                for (const auto& ch : driven()->channels) d += dissipator_apply(ch, fp.state);
                fp.residual = d.norm();
            }
            fp.converged = true;
        } catch (const std::exception& e) {
            fp.error = e.what();
        }
        return fp;
    }

    double matter_residual_end() const {
        const auto* b = bip();
        return partial_trace_B(rhs(*b, traj.states.back()), b->m, b->n).norm();
    }
};

struct CheckDef {
    std::string name;
    std::string formula;
    double default_tol;
    std::string applies_to;
    std::function<bool(const RunContext&)> applicable;
    // Returns (value, pass, detail). tol is the resolved tolerance.
    std::function<CheckOutcome(const RunContext&, double tol)> eval;
};

CheckOutcome make_pass(double value, double tol, bool pass, std::string detail = "") {
    CheckOutcome o;
    o.status = pass ? "pass" : "fail";
    o.value = value;
    o.tol = tol;
    o.detail = std::move(detail);
    return o;
}

const std::vector<CheckDef>& check_table() {
    static const std::vector<CheckDef> table = [] {
        std::vector<CheckDef> t;

        t.push_back({"trace_preservation", "max_t |Tr rho(t) - 1|", 1e-9, "any",
                     [](const RunContext&) { return true; },
                     [](const RunContext& ctx, double tol) {
                         double worst = 0.0;
                         for (const auto& s : ctx.traj.states)
                             worst = std::max(worst, std::abs(s.trace() - Scalar{1.0, 0.0}));
                         return make_pass(worst, tol, worst < tol);
                     }});

        t.push_back({"hermiticity", "max_t ||rho - rho^dag||_F", 1e-10, "any",
                     [](const RunContext&) { return true; },
                     [](const RunContext& ctx, double tol) {
                         double worst = 0.0;
                         for (const auto& s : ctx.traj.states)
                             worst = std::max(worst, (s - s.adjoint()).norm());
                         return make_pass(worst, tol, worst < tol);
                     }});

        t.push_back({"positivity", "min_t lambda_min(rho(t))", 1e-6, "any",
                     [](const RunContext&) { return true; },
                     [](const RunContext& ctx, double tol) {
                         double worst = 0.0;
                         for (const auto& s : ctx.traj.states)
                             worst = std::min(worst, is_valid_density(s).min_eigenvalue);
                         return make_pass(worst, tol, worst > -tol);
                     }});

        t.push_back({"leak_bound", "max_t P(top Fock level)", 0.0, "bipartite",
                     [](const RunContext& ctx) { return ctx.bip() != nullptr; },
                     [](const RunContext& ctx, double tol) {
                         const double lim = tol > 0.0 ? tol : ctx.bip()->leak_tol;
                         return make_pass(ctx.traj.leak_max, lim, ctx.traj.leak_max < lim);
                     }});

        t.push_back({"energy_conservation_closed", "max_t |E_AB(t) - E_AB(0)|", 1e-8, "closed",
                     [](const RunContext& ctx) { return ctx.closed(); },
                     [](const RunContext& ctx, double tol) {
                         double worst = 0.0;
                         for (const auto& r : ctx.recs)
                             worst = std::max(worst, std::abs(r.E_AB - ctx.recs.front().E_AB));
                         return make_pass(worst, tol, worst < tol);
                     }});

        t.push_back({"purity_constant_closed", "max_t |Tr rho^2(t) - Tr rho^2(0)|", 1e-8, "closed",
                     [](const RunContext& ctx) { return ctx.closed(); },
                     [](const RunContext& ctx, double tol) {
                         const double p0 = (ctx.traj.states.front() * ctx.traj.states.front()).trace().real();
                         double worst = 0.0;
                         for (const auto& s : ctx.traj.states)
                             worst = std::max(worst, std::abs((s * s).trace().real() - p0));
                         return make_pass(worst, tol, worst < tol);
                     }});

        t.push_back({"eigenvalue_constancy_closed", "max_t max_i |lambda_i(t) - lambda_i(0)|", 1e-7,
                     "closed",
                     [](const RunContext& ctx) { return ctx.closed(); },
                     [](const RunContext& ctx, double tol) {
                         const RVec spec0 = hermitian_eigen(ctx.traj.states.front()).values;
                         double worst = 0.0;
                         for (const auto& s : ctx.traj.states)
                             worst = std::max(worst,
                                              (hermitian_eigen(s).values - spec0).cwiseAbs().maxCoeff());
                         return make_pass(worst, tol, worst < tol);
                     }});

        t.push_back({"sigma_zero_closed", "max_t |sigma(t)|", 1e-6, "closed",
                     [](const RunContext& ctx) { return ctx.closed() && ctx.recs.size() >= 3; },
                     [](const RunContext& ctx, double tol) {
                         double worst = 0.0;
                         for (const auto& r : ctx.recs)
                             if (r.sigma) worst = std::max(worst, std::abs(*r.sigma));
                         return make_pass(worst, tol, worst < tol);
                     }});

        t.push_back({"power_antisymmetry", "max_t |P_A + P_B|", 1e-10, "resonant bipartite",
                     [](const RunContext& ctx) { return ctx.resonant_bipartite(); },
                     [](const RunContext& ctx, double tol) {
                         double worst = 0.0;
                         for (const auto& r : ctx.recs)
                             worst = std::max(worst, std::abs(r.P_A + *r.P_B));
                         return make_pass(worst, tol, worst < tol);
                     }});

        t.push_back({"zero_heat_to_B", "max_{t,k} |Tr(D_k[rho] H_B)|", 1e-12, "dissipative bipartite",
                     [](const RunContext& ctx) { return ctx.bip() && ctx.dissipative(); },
                     [](const RunContext& ctx, double tol) {
                         double worst = 0.0;
                         for (const auto& r : ctx.recs)
                             for (const auto& cf : r.channels)
                                 worst = std::max(worst, std::abs(cf.total - cf.to_A - cf.to_V));
                         return make_pass(worst, tol, worst < tol);
                     }});

        t.push_back({"heat_split_additivity", "max_{t,k} |Qdot_k - Qdot_kA - Qdot_kV|", 1e-10,
                     "dissipative bipartite",
                     [](const RunContext& ctx) { return ctx.bip() && ctx.dissipative(); },
                     [](const RunContext& ctx, double tol) {
                         double worst = 0.0;
                         for (const auto& r : ctx.recs)
                             for (const auto& cf : r.channels)
                                 worst = std::max(worst, std::abs(cf.total - cf.to_A - cf.to_V));
                         return make_pass(worst, tol, worst < tol);
                     }});

        t.push_back({"first_law_A", "max_t |dE_A/dt - Qdot_A - P_A|", 1e-3, "any (>= 3 samples)",
                     [](const RunContext& ctx) { return ctx.recs.size() >= 3; },
                     [](const RunContext& ctx, double tol) {
                         double worst = 0.0;
                         for (const auto& r : ctx.recs)
                             if (r.firstlaw_res_A) worst = std::max(worst, *r.firstlaw_res_A);
                         return make_pass(worst, tol, worst < tol);
                     }});

        t.push_back({"first_law_full", "max_t |dE_A/dt + dE_B/dt - Edot_AB + Qdot_V|", 1e-3,
                     "any (>= 3 samples)",
                     [](const RunContext& ctx) { return ctx.recs.size() >= 3; },
                     [](const RunContext& ctx, double tol) {
                         double worst = 0.0;
                         for (const auto& r : ctx.recs)
                             if (r.firstlaw_res_full) worst = std::max(worst, *r.firstlaw_res_full);
                         return make_pass(worst, tol, worst < tol);
                     }});

        t.push_back({"spohn_positive", "min_t sigma(t)", 1e-8, "dissipative with finite temperatures",
                     [](const RunContext& ctx) {
                         return ctx.dissipative() && ctx.finite_temps() && ctx.recs.size() >= 3;
                     },
                     [](const RunContext& ctx, double tol) {
                         double worst = std::numeric_limits<double>::infinity();
                         for (const auto& r : ctx.recs)
                             if (r.sigma) worst = std::min(worst, *r.sigma);
                         return make_pass(worst, tol, worst >= -tol);
                     }});

        t.push_back({"sigma_A_dips_negative", "min_t sigma_A(t)", 1e-3, "bipartite",
                     [](const RunContext& ctx) { return ctx.bip() && ctx.recs.size() >= 3; },
                     [](const RunContext& ctx, double tol) {
                         double low = std::numeric_limits<double>::infinity();
                         for (const auto& r : ctx.recs)
                             if (r.sigma_A) low = std::min(low, *r.sigma_A);
                         return make_pass(low, tol, low < -tol,
                                          "the subsystem production must go negative somewhere");
                     }});

        t.push_back({"steady_state_reached", "||rhs(rho_ss)||_F after continuation", 0.0,
                     "time-independent dissipative",
                     [](const RunContext& ctx) {
                         return ctx.dissipative() && (!ctx.driven() || ctx.driven()->epsilon == 0.0);
                     },
                     [](const RunContext& ctx, double tol) {
                         const double lim = tol > 0.0 ? tol : ctx.sc.integrator.ss_tol;
                         const auto& fp = ctx.fixed_point();
                         if (!fp.converged) return make_pass(0.0, lim, false, fp.error);
                         return make_pass(fp.residual, lim, fp.residual < lim);
                     }});

        t.push_back({"matter_steady_state", "||Tr_B rhs(rho(t_end))||_F", 1e-3, "dissipative bipartite",
                     [](const RunContext& ctx) { return ctx.bip() && ctx.dissipative(); },
                     [](const RunContext& ctx, double tol) {
                         const double r = ctx.matter_residual_end();
                         return make_pass(r, tol, r < tol);
                     }});

        t.push_back({"detailed_balance_tls", "|rho_ee(ss) - n/(2n+1)|", 1e-6,
                     "undriven two-level, single channel",
                     [](const RunContext& ctx) {
                         const auto* d = ctx.driven();
                         return d && d->epsilon == 0.0 && d->channels.size() == 1 &&
                                d->channels[0].gamma > 0.0;
                     },
                     [](const RunContext& ctx, double tol) {
                         const auto& fp = ctx.fixed_point();
                         if (!fp.converged) return make_pass(0.0, tol, false, fp.error);
                         const double n = ctx.driven()->channels[0].n_thermal;
                         const double expect = n / (2.0 * n + 1.0);
                         const double err = std::abs(fp.state(0, 0).real() - expect);
                         return make_pass(err, tol, err < tol);
                     }});

        t.push_back({"thermal_fixed_point_flux", "|Qdot_0(rho_ss)|", 1e-9,
                     "undriven two-level, single channel",
                     [](const RunContext& ctx) {
                         const auto* d = ctx.driven();
                         return d && d->epsilon == 0.0 && d->channels.size() == 1 &&
                                d->channels[0].gamma > 0.0;
                     },
                     [](const RunContext& ctx, double tol) {
                         const auto& fp = ctx.fixed_point();
                         if (!fp.converged) return make_pass(0.0, tol, false, fp.error);
                         const auto fx = unipartite_fluxes(*ctx.driven(), fp.state, 0.0);
                         return make_pass(std::abs(fx.qdot_0), tol, std::abs(fx.qdot_0) < tol);
                     }});

        t.push_back({"steady_state_second_law", "|sigma_A - J| / J with ss conditions and J > 0",
                     1e-2, "dissipative bipartite, evaluated at t_end",
                     [](const RunContext& ctx) {
                         return ctx.bip() && ctx.dissipative() && ctx.finite_temps() &&
                                ctx.recs.size() >= 3;
                     },
                     [](const RunContext& ctx, double tol) {
                         const auto& r = ctx.recs[ctx.recs.size() - 2];  // interior stencil
                         if (!r.sigma_A || !r.J)
                             return make_pass(0.0, tol, false, "sigma_A or J unavailable");
                         std::string detail;
                         bool ok = true;
                         if (!r.ss_conditions) {
                             ok = false;
                             detail += "interaction heat fluxes not negligible; ";
                         }
                         if (!(*r.J > 0.0)) {
                             ok = false;
                             detail += "J <= 0; ";
                         }
                         const double rel = std::abs(*r.sigma_A - *r.J) / std::abs(*r.J);
                         if (!(rel < tol)) ok = false;
                         return make_pass(rel, tol, ok, detail);
                     }});

        t.push_back({"carnot_bound", "eta = -P_A/Qdot_hot vs 1 - T_C/T_H", 1e-6,
                     "bipartite with hot and cold channels, evaluated at t_end",
                     [](const RunContext& ctx) {
                         const auto* b = ctx.bip();
                         if (!b) return false;
                         bool hot = false, cold = false;
                         for (const auto& c : b->channels) {
                             if (c.label == Reservoir::hot && c.temperature) hot = true;
                             if (c.label == Reservoir::cold && c.temperature) cold = true;
                         }
                         return hot && cold;
                     },
                     [](const RunContext& ctx, double tol) {
                         const auto& r = ctx.recs.back();
                         double qdot_hot = 0.0;
                         std::optional<double> t_hot, t_cold;
                         for (const auto& cf : r.channels) {
                             if (cf.label == Reservoir::hot) {
                                 qdot_hot += cf.total;
                                 t_hot = cf.temperature;
                             } else if (cf.label == Reservoir::cold) {
                                 t_cold = cf.temperature;
                             }
                         }
                         if (qdot_hot == 0.0) return make_pass(0.0, tol, false, "Qdot_hot = 0");
                         const auto carnot = carnot_check(r.P_A, qdot_hot, *t_hot, *t_cold);
                         std::ostringstream detail;
                         detail << "eta = " << carnot.eta << ", bound = " << carnot.bound;
                         return make_pass(carnot.bound - carnot.eta, tol,
                                          carnot.eta <= carnot.bound + tol, detail.str());
                     }});

        t.push_back({"amplifier_power_positive", "P_B(t_end)", 0.0, "dissipative bipartite",
                     [](const RunContext& ctx) { return ctx.bip() && ctx.dissipative(); },
                     [](const RunContext& ctx, double tol) {
                         const double p = *ctx.recs.back().P_B;
                         return make_pass(p, tol, p > tol);
                     }});

        t.push_back({"picture_consistency", "max_t max(|dQdot|, |dP|) between pictures", 1e-8,
                     "driven systems",
                     [](const RunContext& ctx) { return ctx.driven() != nullptr; },
                     [](const RunContext& ctx, double tol) {
                         double worst = 0.0;
                         for (std::size_t i = 0; i < ctx.traj.times.size(); ++i) {
                             const auto rep = verify_picture_consistency(
                                 *ctx.driven(), ctx.traj.states[i], ctx.traj.times[i]);
                             worst = std::max(worst, std::max(rep.dQ, rep.dP));
                         }
                         return make_pass(worst, tol, worst < tol);
                     }});

        t.push_back({"bridge_term_nonzero", "max_t |Tr(rho [H0, V(t)])|", 1e-3, "driven systems",
                     [](const RunContext& ctx) { return ctx.driven() != nullptr; },
                     [](const RunContext& ctx, double tol) {
                         double peak = 0.0;
                         for (std::size_t i = 0; i < ctx.traj.times.size(); ++i) {
                             const auto rep = verify_picture_consistency(
                                 *ctx.driven(), ctx.traj.states[i], ctx.traj.times[i]);
                             peak = std::max(peak, rep.bridge);
                         }
                         return make_pass(peak, tol, peak > tol,
                                          "full and partial time derivatives must differ");
                     }});

        t.push_back({"unipartite_steady_balance", "|Qdot_0 + P_0| at t_end", 1e-6, "driven systems",
                     [](const RunContext& ctx) { return ctx.driven() && ctx.dissipative(); },
                     [](const RunContext& ctx, double tol) {
                         const auto fx = unipartite_fluxes(*ctx.driven(), ctx.traj.states.back(),
                                                           ctx.traj.times.back());
                         const double v = std::abs(fx.qdot_0 + fx.p_0);
                         return make_pass(v, tol, v < tol);
                     }});

        t.push_back({"bloch_steady_population", "|rho_ee(t_end) - analytic Bloch value|", 1e-5,
                     "resonant driven two-level, single channel",
                     [](const RunContext& ctx) {
                         const auto* d = ctx.driven();
                         return d && d->epsilon > 0.0 && d->omega_L == d->H0(0, 0).real() &&
                                d->channels.size() == 1 && d->channels[0].gamma > 0.0;
                     },
                     [](const RunContext& ctx, double tol) {
                         const auto* d = ctx.driven();
                         const double g = d->channels[0].gamma;
                         const double n = d->channels[0].n_thermal;
                         const double gd = g * (2.0 * n + 1.0);
                         const double gdown = 2.0 * g * (n + 1.0), gup = 2.0 * g * n;
                         const double e2 = d->epsilon * d->epsilon;
                         const double expect = (2.0 * e2 / gd + gup) / (4.0 * e2 / gd + gdown + gup);
                         const double err = std::abs(ctx.traj.states.back()(0, 0).real() - expect);
                         return make_pass(err, tol, err < tol);
                     }});

        t.push_back({"vacuum_rabi", "max_t |P_e(t) - cos^2(lambda t)|", 1e-6,
                     "closed resonant JCM from |e,0>",
                     [](const RunContext& ctx) {
                         const auto* p = std::get_if<JcmParams>(&ctx.sc.params);
                         return p && ctx.closed() && p->omega_a == p->omega_f &&
                                ctx.sc.initial_state.kind == InitialStateSpec::Kind::excited_vacuum;
                     },
                     [](const RunContext& ctx, double tol) {
                         const auto& p = std::get<JcmParams>(ctx.sc.params);
                         const auto* b = ctx.bip();
                         double worst = 0.0;
                         for (std::size_t i = 0; i < ctx.traj.times.size(); ++i) {
                             double pe = 0.0;
                             for (Eigen::Index a = 0; a < b->n; ++a)
                                 pe += ctx.traj.states[i](a, a).real();
                             const double exact = std::pow(std::cos(p.lambda * ctx.traj.times[i]), 2);
                             worst = std::max(worst, std::abs(pe - exact));
                         }
                         return make_pass(worst, tol, worst < tol);
                     }});

        return t;
    }();
    return table;
}

}  // namespace

std::vector<CheckInfo> list_checks() {
    std::vector<CheckInfo> out;
    for (const auto& def : check_table()) {
        std::ostringstream tol;
        if (def.default_tol > 0.0)
            tol << def.default_tol;
        else if (def.name == "leak_bound")
            tol << "scenario leak_tol";
        else if (def.name == "steady_state_reached")
            tol << "integrator ss_tol";
        else
            tol << "strict";
        out.push_back({def.name, def.formula, tol.str(), def.applies_to});
    }
    return out;
}

RunResult run_scenario(const Scenario& sc, const RunOptions& opts) {
    const auto started = std::chrono::steady_clock::now();
    RunResult result;

    Scenario run = sc;
    if (opts.dt_override) run.integrator.dt = *opts.dt_override;
    if (opts.t_end_override) run.integrator.t_end = *opts.t_end_override;
    for (const auto& name : opts.extra_checks) {
        const auto catalog = list_checks();
        if (std::none_of(catalog.begin(), catalog.end(),
                         [&](const CheckInfo& ci) { return ci.name == name; }))
            throw ScenarioError("unknown check '" + name + "'");
        if (std::none_of(run.checks.begin(), run.checks.end(),
                         [&](const CheckRequest& r) { return r.name == name; }))
            run.checks.push_back({name, std::nullopt});
    }

    std::filesystem::create_directories(opts.out_dir);
    result.csv_path = opts.out_dir / run.csv_name;
    result.report_path = opts.out_dir / run.report_name;

    const SystemVariant sys = build_system(run);
    const CMat rho0 = build_initial_state(run, sys);

    Trajectory traj;
    if (const auto* b = std::get_if<BipartiteSystem>(&sys))
        traj = integrate(*b, rho0, run.integrator);
    else
        traj = integrate(std::get<DrivenSystem>(sys), rho0, run.integrator);

    std::vector<ThermoRecord> recs;
    if (const auto* b = std::get_if<BipartiteSystem>(&sys))
        recs = compute_records(*b, traj, run.ss_delta_scale);
    else
        recs = compute_records(std::get<DrivenSystem>(sys), traj, run.ss_delta_scale);

    write_csv(result.csv_path, recs);

    result.leak_max = traj.leak_max;
    if (traj.leak_warning)
        result.warnings.push_back("top Fock level population exceeded leak_tol; increase the cutoff");
    double sigma_min = std::numeric_limits<double>::infinity();
    bool any_sigma = false;
    for (const auto& r : recs)
        if (r.sigma) {
            sigma_min = std::min(sigma_min, *r.sigma);
            any_sigma = true;
        }
    result.sigma_min = any_sigma ? sigma_min : 0.0;

    const RunContext ctx{run, sys, traj, recs};
    for (const auto& req : run.checks) {
        const auto& table = check_table();
        const auto it = std::find_if(table.begin(), table.end(),
                                     [&](const CheckDef& d) { return d.name == req.name; });
        const CheckDef& def = *it;
        CheckOutcome outcome;
        if (!def.applicable(ctx)) {
            outcome.status = "not_applicable";
            outcome.detail = "applies to: " + def.applies_to;
        } else {
            outcome = def.eval(ctx, req.tol.value_or(def.default_tol));
        }
        result.checks[req.name] = outcome;
        if (outcome.status == "fail") result.exit_code = 1;
    }

    // Report document.
    ordered_json report;
    report["scenario"] = run.name;
    report["model"] = run.model;
    report["integrator"] = {{"dt", run.integrator.dt},
                            {"t_end", run.integrator.t_end},
                            {"sample_every", run.integrator.sample_every},
                            {"ss_tol", run.integrator.ss_tol}};
    report["samples"] = traj.times.size();
    report["sigma_min"] = any_sigma ? ordered_json(result.sigma_min) : ordered_json(nullptr);
    report["leak_max"] = traj.leak_max;
    report["leak_warning"] = traj.leak_warning;

    if (const auto* b = std::get_if<BipartiteSystem>(&sys)) {
        const auto& last = recs.back();
        ordered_json fin;
        fin["t"] = last.t;
        fin["E_A"] = last.E_A;
        fin["E_B"] = *last.E_B;
        fin["E_AB"] = last.E_AB;
        fin["P_A"] = last.P_A;
        fin["P_B"] = *last.P_B;
        fin["Qdot_A"] = last.Qdot_A;
        fin["Qdot_V"] = last.Qdot_V;
        fin["S_AB"] = last.S_AB;
        if (last.J) fin["J"] = *last.J;
        if (last.sigma_A) fin["sigma_A"] = *last.sigma_A;
        fin["ss_conditions"] = last.ss_conditions;
        fin["matter_residual"] = ctx.matter_residual_end();
        fin["full_residual"] = rhs(*b, traj.states.back()).norm();
        std::optional<double> t_hot, t_cold;
        double qdot_hot = 0.0;
        for (const auto& cf : last.channels) {
            if (cf.label == Reservoir::hot && cf.temperature) {
                t_hot = cf.temperature;
                qdot_hot += cf.total;
            }
            if (cf.label == Reservoir::cold && cf.temperature) t_cold = cf.temperature;
        }
        if (t_hot && t_cold && qdot_hot != 0.0) {
            const auto carnot = carnot_check(last.P_A, qdot_hot, *t_hot, *t_cold);
            fin["carnot"] = {{"eta", carnot.eta},
                             {"bound", carnot.bound},
                             {"satisfied", carnot.satisfied},
                             {"T_hot", *t_hot},
                             {"T_cold", *t_cold}};
        }
        report["final"] = fin;
    } else {
        const auto& d = std::get<DrivenSystem>(sys);
        const auto fx = unipartite_fluxes(d, traj.states.back(), traj.times.back());
        report["final"] = {{"t", traj.times.back()},
                           {"E_0", mean_energy(traj.states.back(), d.H0)},
                           {"Qdot_0", fx.qdot_0},
                           {"P_0", fx.p_0},
                           {"Qdot_alicki", fx.qdot_alicki},
                           {"P_alicki", fx.p_alicki},
                           {"rho_ee", traj.states.back()(0, 0).real()}};
    }

    ordered_json checks_json;
    for (const auto& req : run.checks) {
        const auto& c = result.checks.at(req.name);
        ordered_json cj;
        cj["status"] = c.status;
        if (c.value) cj["value"] = *c.value;
        if (c.tol) cj["tol"] = *c.tol;
        if (!c.detail.empty()) cj["detail"] = c.detail;
        checks_json[req.name] = cj;
    }
    report["checks"] = checks_json;
    report["warnings"] = result.warnings;
    report["wall_clock_s"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

    std::ofstream out(result.report_path, std::ios::binary);
    if (!out) throw ScenarioError(result.report_path.string() + ": cannot open for writing");
    out << report.dump(2) << '\n';

    return result;
}

}  // namespace qthermo
