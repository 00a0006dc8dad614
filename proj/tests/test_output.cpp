#include <doctest.h>

#include <nonlocal/error.hpp>
#include <nonlocal/output.hpp>

#include <algorithm>
#include <filesystem>
#include <sstream>

using namespace nonlocal;

namespace {

Scenario small(bool density)
{
    Scenario s;
    s.name = "small";
    s.initial = MeasureVector({ParticleMeasure(1, {-0.5, 0.0, 0.5}, {0.25, 0.5, 0.25})});
    s.model = VelocityModel({linear_local(1, 1, {-1.0}, {0.0}, 10.0)}, KernelMatrix::diagonal_constant(1, 1, 0.0));
    s.horizon = 0.1;
    s.step = {0.05, 0.1};
    if (density) {
        s.initial_log_density = {{0.0, 0.1, 0.0}};
        s.density_sup = {1.2};
    }
    return s;
}

std::size_t lines(const std::string& s)
{
    return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

std::size_t occurrences(const std::string& s, const std::string& what)
{
    std::size_t n = 0;
    for (auto p = s.find(what); p != std::string::npos; p = s.find(what, p + 1)) ++n;
    return n;
}

}  // namespace

TEST_CASE("trajectory csv has one row per particle and snapshot")
{
    const SolutionRecord r = solve(small(false));
    const std::string csv = trajectory_csv(r);
    CHECK(csv.rfind("t,species,particle,x_1,weight\n", 0) == 0);
    CHECK(lines(csv) == 1 + 3 * 3);
    const std::string tracked = trajectory_csv(solve(small(true)));
    CHECK(tracked.rfind("t,species,particle,x_1,weight,logdensity\n", 0) == 0);
}

TEST_CASE("reports csv")
{
    const std::string csv = reports_csv({BoundReport::make("mass-conservation", 0.0, 0.0, 1.0, "fp")});
    CHECK(csv.rfind("check,lhs,rhs,slack,pass,fingerprint\n", 0) == 0);
    CHECK(csv.find("mass-conservation,0,0,1,1,fp") != std::string::npos);
}

TEST_CASE("plot kinds")
{
    for (const char* name : {"particle-cloud", "w1-curve", "picard-decay", "density-profile"})
        CHECK(plot_kind_name(parse_plot_kind(name)) == name);
    CHECK_THROWS_AS(parse_plot_kind("pie"), Error);
}

TEST_CASE("particle cloud has one frame per snapshot")
{
    const SolutionRecord r = solve(small(false));
    const PlotFiles p = render_plot(r, PlotKind::particle_cloud);
    CHECK(occurrences(p.svg, "class=\"frame\"") == r.snapshots.size());
    CHECK(p.svg.find("<svg") != std::string::npos);
    CHECK_THROWS_AS(render_plot(r, PlotKind::w1_curve), Error);
    CHECK_THROWS_AS(render_plot(r, PlotKind::density_profile), Error);
    CHECK_NOTHROW(render_plot(r, PlotKind::w1_curve, &r));
}

TEST_CASE("emit plotdata writes both files")
{
    const auto dir = (std::filesystem::temp_directory_path() / "nonlocal_plot_test").string();
    std::filesystem::remove_all(dir);
    emit_plotdata(solve(small(true)), PlotKind::density_profile, dir);
    CHECK(std::filesystem::exists(dir + "/plot/density-profile.svg"));
    CHECK(std::filesystem::exists(dir + "/plot/density-profile.csv"));
    std::filesystem::remove_all(dir);
}

TEST_CASE("w1 curve of a run against itself is zero")
{
    const SolutionRecord r = solve(small(false));
    const PlotFiles p = render_plot(r, PlotKind::w1_curve, &r);
    std::istringstream in(p.table);
    std::string line;
    std::getline(in, line);
    CHECK(line == "t,w1");
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        CHECK(line.substr(line.find(',') + 1) == "0");
        ++rows;
    }
    CHECK(rows == r.snapshots.size());
}

TEST_CASE("picard decay decreases after the first iteration")
{
    Scenario s = small(false);
    s.model = sedimentation_field(kernel_library("tent", 1, {1.0, 1.0}), 1.0);
    s.horizon = 0.5;
    s.step.dt = 0.01;
    s.mode = SolverMode::picard;
    const SolutionRecord r = solve(s);
    const PlotFiles p = render_plot(r, PlotKind::picard_decay);
    CHECK(p.table.rfind("window,t0,t1,iteration,distance\n", 0) == 0);
    for (const auto& w : r.windows)
        for (std::size_t n = 1; n < w.distances.size(); ++n)
            if (w.distances[n - 1] > 0.0) CHECK(w.distances[n] < w.distances[n - 1]);
}
