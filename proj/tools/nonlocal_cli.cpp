#include <nonlocal/acceptance.hpp>
#include <nonlocal/config.hpp>
#include <nonlocal/error.hpp>
#include <nonlocal/particle_kernels.hpp>
#include <nonlocal/run.hpp>
#include <nonlocal/wasserstein.hpp>

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

using namespace nonlocal;

namespace {

// Rows "x_1,...,x_d,weight"; a leading non-numeric line is a header.
ParticleMeasure read_measure_csv(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw Error("cannot read '" + path + "'");
    std::vector<double> pos, w;
    std::size_t dim = 0, lineno = 0;
    std::string line;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        bool numeric = true;
        while (std::getline(ss, cell, ',')) {
            try {
                std::size_t used = 0;
                row.push_back(std::stod(cell, &used));
                if (cell.find_first_not_of(" \t\r", used) != std::string::npos) numeric = false;
            } catch (const std::exception&) {
                numeric = false;
            }
        }
        if (!numeric) {
            if (pos.empty() && w.empty()) continue;
            throw Error(path + ":" + std::to_string(lineno) + ": non-numeric row");
        }
        if (row.size() < 2) throw Error(path + ":" + std::to_string(lineno) + ": need x_1..x_d,weight");
        if (dim == 0) dim = row.size() - 1;
        if (row.size() - 1 != dim) throw Error(path + ":" + std::to_string(lineno) + ": inconsistent dimension");
        pos.insert(pos.end(), row.begin(), row.end() - 1);
        w.push_back(row.back());
    }
    if (w.empty()) throw Error("'" + path + "' holds no particles");
    return ParticleMeasure(dim, std::move(pos), std::move(w));
}

int cmd_run(const std::string& scenario, const Overrides& ov, const RunOptions& opt)
{
    ScenarioConfig cfg = load_config(resolve_scenario(scenario));
    apply_overrides(cfg, ov);
    const RunOutcome o = run_scenario(cfg, opt);
    std::cout << cfg.name << ": " << o.record.snapshots.size() << " snapshots, "
              << o.scenario.initial.particle_count() << " particles -> " << opt.out_dir << "\n";
    for (const auto& r : o.reports)
        std::printf("%-4s %-20s lhs=%.6g rhs=%.6g slack=%g %s\n", r.pass ? "ok" : "FAIL", r.check.c_str(), r.lhs,
                    r.rhs, r.slack, r.note.c_str());
    return o.passed() ? 0 : 1;
}

int cmd_audit(const std::string& scenario)
{
    const ScenarioConfig cfg = load_config(resolve_scenario(scenario));
    const Scenario s = build_scenario(cfg);
    const ScenarioAudit a = audit_scenario(cfg, s);
    for (const auto& l : a.lines) std::cout << l << "\n";
    const auto C = StabilityConstants::of(s.model, total_mass(s.initial));
    std::cout << "C=" << C.C << " K=" << C.K << " dt*C=" << s.step.dt * C.C << " courant=" << s.step.courant << "\n";
    if (!a.ok) {
        std::cout << "audit FAILED: " << a.failure << "\n";
        return 1;
    }
    std::cout << "audit ok\n";
    return 0;
}

int cmd_w1(const std::string& a, const std::string& b)
{
    const ParticleMeasure mu = read_measure_csv(a);
    const ParticleMeasure nu = read_measure_csv(b);
    if (mu.dim() != nu.dim()) throw Error("dimension mismatch between the two measures");
    std::printf("%.17g\n", w1(mu, nu));
    return 0;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"nonlocal: particle solver for nonlocal continuity equations"};
    app.require_subcommand(1);

    std::string scenario, out_dir = "out", mode;
    Overrides ov;
    std::size_t n = 0;
    double dt = 0.0, horizon = 0.0, k_override = 0.0;
    std::uint64_t seed = 0;
    auto* run = app.add_subcommand("run", "solve a scenario and write trajectory, reports and plots");
    run->add_option("scenario", scenario, "scenario file or bundled name")->required();
    auto* o_n = run->add_option("--n", n, "particles per density species");
    auto* o_dt = run->add_option("--dt", dt, "time step");
    auto* o_h = run->add_option("--horizon", horizon, "final time");
    auto* o_mode = run->add_option("--mode", mode, "direct or picard")->check(CLI::IsMember({"direct", "picard"}));
    auto* o_seed = run->add_option("--seed", seed, "random seed");
    run->add_option("--out", out_dir, "output directory");
    auto* o_k = run->add_option("--k-override", k_override, "use this K in the stability-initial check");

    auto* suite = app.add_subcommand("suite", "run the acceptance criteria");
    std::vector<std::string> only;
    suite->add_option("--only", only, "criterion ids");

    std::string ma, mb;
    auto* w1c = app.add_subcommand("w1", "W1 distance between two particle CSV files");
    w1c->add_option("measureA", ma)->required()->check(CLI::ExistingFile);
    w1c->add_option("measureB", mb)->required()->check(CLI::ExistingFile);

    auto* audit = app.add_subcommand("audit", "sample declared sup and Lipschitz constants");
    audit->add_option("scenario", scenario)->required();

    CLI11_PARSE(app, argc, argv);

    try {
        parallel::apply_worker_limit_from_env();
        if (run->parsed()) {
            if (*o_n) ov.n = n;
            if (*o_dt) ov.dt = dt;
            if (*o_h) ov.horizon = horizon;
            if (*o_mode) ov.mode = mode;
            if (*o_seed) ov.seed = seed;
            RunOptions opt;
            opt.out_dir = out_dir;
            if (*o_k) opt.k_override = k_override;
            return cmd_run(scenario, ov, opt);
        }
        if (suite->parsed()) {
            const auto res = run_acceptance(std::cout, only);
            for (const auto& r : res)
                if (!r.pass) return 1;
            return 0;
        }
        if (w1c->parsed()) return cmd_w1(ma, mb);
        if (audit->parsed()) return cmd_audit(scenario);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
