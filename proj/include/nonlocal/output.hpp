#pragma once

#include <nonlocal/harness.hpp>
#include <nonlocal/solver.hpp>

#include <string>
#include <vector>

namespace nonlocal {

// t, species, particle, x_1..x_d, weight[, logdensity]
std::string trajectory_csv(const SolutionRecord& record);
// check, lhs, rhs, slack, pass, fingerprint
std::string reports_csv(const std::vector<BoundReport>& reports);

void write_text(const std::string& path, const std::string& text);

enum class PlotKind { particle_cloud, w1_curve, picard_decay, density_profile };

PlotKind parse_plot_kind(const std::string& name);
std::string plot_kind_name(PlotKind kind);

struct PlotFiles
{
    std::string table;  // delimiter-separated data
    std::string svg;
};

// Tables and SVG text for one plot kind. w1-curve compares `record` with
// `partner` snapshot by snapshot and needs both.
PlotFiles render_plot(const SolutionRecord& record, PlotKind kind, const SolutionRecord* partner = nullptr);

// Writes <dir>/plot/<kind>.csv and <dir>/plot/<kind>.svg.
void emit_plotdata(const SolutionRecord& record, PlotKind kind, const std::string& dir,
                   const SolutionRecord* partner = nullptr);

}  // namespace nonlocal
