#include "qthermo/scenario.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <thread>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCheckFailure = 1;
constexpr int kExitInputError = 2;
constexpr int kExitNumericalAbort = 3;

std::filesystem::path default_out_dir() {
    if (const char* env = std::getenv("QTHERMO_OUT")) return env;
    return std::filesystem::current_path();
}

struct JobOutcome {
    std::string name;
    int code = kExitOk;
    std::string message;
    qthermo::RunResult result;
};

JobOutcome run_one(const std::filesystem::path& file, const qthermo::RunOptions& opts) {
    JobOutcome out;
    out.name = file.string();
    try {
        const qthermo::Scenario sc = qthermo::load_scenario(file);
        out.name = sc.name;
        out.result = qthermo::run_scenario(sc, opts);
        out.code = out.result.exit_code;
    } catch (const qthermo::ScenarioError& e) {
        out.code = kExitInputError;
        out.message = e.what();
    } catch (const qthermo::IntegrationError& e) {
        out.code = kExitNumericalAbort;
        out.message = e.what();
    } catch (const std::invalid_argument& e) {
        out.code = kExitInputError;
        out.message = e.what();
    } catch (const std::exception& e) {
        out.code = kExitNumericalAbort;
        out.message = e.what();
    }
    return out;
}

void print_outcome(const JobOutcome& job) {
    if (!job.message.empty()) {
        std::fprintf(stderr, "%s: error: %s\n", job.name.c_str(), job.message.c_str());
        return;
    }
    std::printf("%s:\n", job.name.c_str());
    for (const auto& [name, check] : job.result.checks) {
        std::printf("  %-28s %s", name.c_str(), check.status.c_str());
        if (check.value && check.tol)
            std::printf("  (value %.6g, tol %.6g)", *check.value, *check.tol);
        else if (check.value)
            std::printf("  (value %.6g)", *check.value);
        std::printf("\n");
    }
    for (const auto& w : job.result.warnings) std::printf("  warning: %s\n", w.c_str());
    std::printf("  wrote %s\n  wrote %s\n", job.result.csv_path.string().c_str(),
                job.result.report_path.string().c_str());
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Open-system thermodynamics simulator: Lindblad dynamics with "
                 "heat-flux/power partitionings and first/second-law verification"};
    app.require_subcommand(1);

    auto* simulate = app.add_subcommand("simulate", "Integrate scenario files and run their checks");
    std::vector<std::string> files;
    simulate->add_option("scenarios", files, "Scenario JSON files")->required()->check(CLI::ExistingFile);
    std::string out_dir = default_out_dir().string();
    simulate->add_option("--out", out_dir, "Output directory (default: $QTHERMO_OUT or CWD)");
    std::vector<std::string> extra_checks;
    simulate->add_option("--check", extra_checks, "Additional named checks to evaluate");
    double dt_override = 0.0, t_end_override = 0.0;
    auto* dt_opt = simulate->add_option("--dt", dt_override, "Override the integrator step size");
    auto* te_opt = simulate->add_option("--t-end", t_end_override, "Override the integration horizon");
    unsigned jobs = 1;
    simulate->add_option("--jobs", jobs, "Run independent scenarios concurrently")
        ->check(CLI::Range(1u, 64u));

    auto* checks = app.add_subcommand("checks", "Inspect the verification check catalog");
    auto* checks_list = checks->add_subcommand("list", "Print every named check");

    CLI11_PARSE(app, argc, argv);

    if (checks->parsed()) {
        if (!checks_list->parsed()) {
            std::fprintf(stderr, "usage: qthermo checks list\n");
            return kExitInputError;
        }
        for (const auto& info : qthermo::list_checks()) {
            std::printf("%-28s %s\n", info.name.c_str(), info.formula.c_str());
            std::printf("%-28s   default tol: %s; applies to: %s\n", "", info.default_tol.c_str(),
                        info.applies_to.c_str());
        }
        return kExitOk;
    }

    qthermo::RunOptions base;
    base.extra_checks = extra_checks;
    if (dt_opt->count() > 0) base.dt_override = dt_override;
    if (te_opt->count() > 0) base.t_end_override = t_end_override;

    std::vector<JobOutcome> outcomes(files.size());
    std::atomic<std::size_t> next{0};
    const unsigned workers = std::max<unsigned>(1, std::min<unsigned>(jobs, files.size()));
    auto worker = [&] {
        for (std::size_t i = next.fetch_add(1); i < files.size(); i = next.fetch_add(1)) {
            qthermo::RunOptions opts = base;
            opts.out_dir = out_dir;
            if (files.size() > 1) opts.out_dir /= std::filesystem::path(files[i]).stem().string();
            outcomes[i] = run_one(files[i], opts);
        }
    };
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    int code = kExitOk;
    for (const auto& job : outcomes) {
        print_outcome(job);
        code = std::max(code, job.code);
    }
    return code;
}
