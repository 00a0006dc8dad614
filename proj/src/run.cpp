#include <nonlocal/run.hpp>

#include <nonlocal/error.hpp>
#include <nonlocal/output.hpp>
#include <nonlocal/wasserstein.hpp>

#include <algorithm>
#include <filesystem>
#include <sstream>

namespace nonlocal {

bool RunOutcome::passed() const
{
    return std::all_of(reports.begin(), reports.end(), [](const BoundReport& r) { return r.pass; });
}

namespace {

Scenario with_initial(const Scenario& s, const MeasureVector& rho)
{
    Scenario out = s;
    out.initial = rho;
    out.initial_log_density.clear();
    out.density_sup.clear();
    return out;
}

BoundReport stability_reports(const ScenarioConfig& cfg, const Scenario& s, const RunOptions& opt,
                              std::optional<SolutionRecord>* partner)
{
    const std::size_t pairs = std::max<std::size_t>(cfg.stability.pairs, 1);
    BoundReport worst;
    double worst_ratio = -1.0;
    std::size_t failed = 0;
    for (std::size_t p = 0; p < pairs; ++p) {
        const MeasureVector sigma = perturb_positions(s.initial, cfg.stability.amplitude, s.seed * 7919 + p + 1);
        BoundReport r = check_stability_initial(with_initial(s, s.initial), s.initial, sigma, opt.k_override);
        if (!r.pass) ++failed;
        const double ratio = r.rhs > 0.0 ? r.lhs / r.rhs : r.lhs;
        if (ratio > worst_ratio) {
            worst_ratio = ratio;
            worst = r;
        }
        if (p == 0 && partner) *partner = solve(with_initial(s, sigma));
    }
    worst.pass = failed == 0;
    worst.note += ";pairs=" + std::to_string(pairs) + ";failed=" + std::to_string(failed);
    return worst;
}

}  // namespace

std::vector<BoundReport> run_checks(const ScenarioConfig& cfg, const Scenario& s, const SolutionRecord& record,
                                    const RunOptions& opt, std::optional<SolutionRecord>* partner)
{
    std::vector<BoundReport> out;
    for (const auto& check : cfg.checks) {
        if (check == "mass") {
            out.push_back(check_mass_conservation(s, record));
        } else if (check == "linfty") {
            if (!s.tracks_density()) throw Error("check 'linfty' needs track_density");
            out.push_back(check_linfty_growth(s, record));
        } else if (check == "contraction") {
            if (s.mode == SolverMode::picard) {
                out.push_back(check_contraction(s, record));
            } else {
                Scenario p = s;
                p.mode = SolverMode::picard;
                out.push_back(check_contraction(p, solve(p)));
            }
        } else if (check == "agreement") {
            out.push_back(check_method_agreement(s));
        } else if (check == "stability-initial") {
            out.push_back(stability_reports(cfg, s, opt, partner));
        } else {
            throw Error("unknown check '" + check + "'");
        }
    }
    return out;
}

RunOutcome run_scenario(const ScenarioConfig& cfg, const RunOptions& opt)
{
    RunOutcome o;
    o.scenario = build_scenario(cfg);
    const ScenarioAudit audit = audit_scenario(cfg, o.scenario);
    if (!audit.ok) throw Error("audit failed: " + audit.failure);
    o.record = solve(o.scenario);
    o.reports = run_checks(cfg, o.scenario, o.record, opt, &o.perturbed);
    if (opt.out_dir.empty()) return o;

    std::filesystem::create_directories(opt.out_dir);
    write_text(opt.out_dir + "/trajectory.csv", trajectory_csv(o.record));
    write_text(opt.out_dir + "/reports.csv", reports_csv(o.reports));
    emit_plotdata(o.record, PlotKind::particle_cloud, opt.out_dir);
    if (o.scenario.tracks_density() && o.scenario.initial.dim() == 1)
        emit_plotdata(o.record, PlotKind::density_profile, opt.out_dir);
    if (!o.record.windows.empty()) emit_plotdata(o.record, PlotKind::picard_decay, opt.out_dir);
    if (o.perturbed) emit_plotdata(o.record, PlotKind::w1_curve, opt.out_dir, &*o.perturbed);
    return o;
}

std::string resolve_scenario(const std::string& name_or_path)
{
    if (std::filesystem::exists(name_or_path)) return name_or_path;
    const std::string bundled = bundled_scenario_path(name_or_path);
    if (!std::filesystem::exists(bundled))
        throw Error("no scenario file or bundled scenario named '" + name_or_path + "'");
    return bundled;
}

}  // namespace nonlocal
