#pragma once

#include <nonlocal/config.hpp>
#include <nonlocal/harness.hpp>
#include <nonlocal/solver.hpp>

#include <optional>
#include <string>
#include <vector>

namespace nonlocal {

struct RunOptions
{
    std::optional<double> k_override;  // replaces K in stability-initial
    std::string out_dir;               // empty: nothing written
};

struct RunOutcome
{
    Scenario scenario;
    SolutionRecord record;
    std::optional<SolutionRecord> perturbed;  // first stability partner, if any
    std::vector<BoundReport> reports;

    bool passed() const;
};

// Evaluates cfg.checks against a finished solve.
std::vector<BoundReport> run_checks(const ScenarioConfig& cfg, const Scenario& s, const SolutionRecord& record,
                                    const RunOptions& opt, std::optional<SolutionRecord>* partner = nullptr);

// Solve, check, and (with out_dir) write trajectory.csv, reports.csv and plot/.
RunOutcome run_scenario(const ScenarioConfig& cfg, const RunOptions& opt);

// Accepts a file path or the name of a bundled scenario.
std::string resolve_scenario(const std::string& name_or_path);

}  // namespace nonlocal
