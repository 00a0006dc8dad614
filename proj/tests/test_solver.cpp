#include <doctest.h>

#include <nonlocal/error.hpp>
#include <nonlocal/solver.hpp>
#include <nonlocal/wasserstein.hpp>

#include "lp_oracle.hpp"

#include <cmath>

using namespace nonlocal;

namespace {

Scenario sedimentation(std::size_t n, double dt)
{
    std::vector<double> x, w;
    for (std::size_t i = 0; i < n; ++i) {
        x.push_back(-1.0 + 2.0 * (i + 0.5) / n);
        w.push_back(1.0 / n);
    }
    Scenario s;
    s.name = "sed";
    s.initial = MeasureVector({ParticleMeasure(1, x, w)});
    s.model = sedimentation_field(kernel_library("bump-poly", 1, {0.5, 1.0}), 1.0);
    s.horizon = 0.5;
    s.step = {dt, 0.1};
    return s;
}

}  // namespace

TEST_CASE("step count rounds up and equalizes")
{
    CHECK(step_count(1.0, 0.3) == 4);
    CHECK(step_count(1.0, 0.25) == 4);
    CHECK_THROWS_AS(step_count(0.0, 0.1), Error);
}

TEST_CASE("window length solves C T e^{CT} = sigma")
{
    for (double C : {0.5, 2.0, 7.0})
        for (double sigma : {0.1, 0.5, 0.9})
            CHECK(window_length(C, sigma, 100.0) == doctest::Approx(oracle::lambert_w(sigma) / C).epsilon(1e-9));
    CHECK(window_length(0.0, 0.5, 3.0) == 3.0);
    CHECK(window_length(2.0, 0.5, 0.1) == doctest::Approx(0.1));
    CHECK_THROWS_AS(window_length(1.0, 1.5, 1.0), Error);
}

TEST_CASE("direct solve keeps the time grid and the weights")
{
    const Scenario s = sedimentation(40, 0.03);
    const SolutionRecord r = solve_direct(s);
    CHECK(r.snapshots.size() == step_count(0.5, 0.03) + 1);
    CHECK(r.terminal().time == doctest::Approx(0.5));
    CHECK(r.terminal().state[0].weights() == s.initial[0].weights());
}

TEST_CASE("picard and direct agree")
{
    Scenario s = sedimentation(40, 0.01);
    s.mode = SolverMode::picard;
    const SolutionRecord p = solve(s);
    const SolutionRecord d = solve_direct(s);
    REQUIRE(p.snapshots.size() == d.snapshots.size());
    for (std::size_t n = 0; n < p.snapshots.size(); ++n)
        CHECK(w1_vector(p.snapshots[n].state, d.snapshots[n].state) < 1e-9);
    CHECK_FALSE(p.windows.empty());
    for (const auto& w : p.windows) CHECK(w.contraction_factor <= s.picard.sigma + 1e-12);
}

TEST_CASE("picard reports non-convergence")
{
    Scenario s = sedimentation(20, 0.01);
    s.mode = SolverMode::picard;
    s.picard.max_iter = 1;
    s.picard.tol = 1e-300;
    CHECK_THROWS_AS(solve(s), Error);
}

TEST_CASE("frozen solve with the solution as input reproduces it")
{
    const Scenario s = sedimentation(30, 0.01);
    const SolutionRecord d = solve_direct(s);
    const SolutionRecord f = solve_frozen(s, d.as_trajectory());
    CHECK(w1_vector(d.terminal().state, f.terminal().state) < 1e-9);
}

TEST_CASE("weak form residual shrinks with dt")
{
    SpaceTimeTest phi{"x",
                      [](double, std::span<const double> x) { return x[0] * x[0]; },
                      [](double, std::span<const double>) { return 0.0; },
                      [](double, std::span<const double> x, std::span<double> g) { g[0] = 2.0 * x[0]; }};
    const double r1 = weak_form_residual(solve_direct(sedimentation(30, 0.02)), phi);
    const double r2 = weak_form_residual(solve_direct(sedimentation(30, 0.01)), phi);
    CHECK(r1 / r2 == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("scenario validation names the problem")
{
    Scenario s = sedimentation(10, 0.01);
    s.horizon = -1.0;
    CHECK_THROWS_WITH_AS(s.validate(), doctest::Contains("horizon must be positive"), Error);
}

TEST_CASE("stability constants")
{
    const Scenario s = sedimentation(10, 0.01);
    const auto c = StabilityConstants::of(s.model, 1.0);
    CHECK(c.C == doctest::Approx(lipschitz_bound_b(s.model, 1.0)));
    CHECK(c.K == doctest::Approx(2.0 * c.C));
}

namespace {

Scenario dirac_sedimentation(double p0, double dt)
{
    Scenario s;
    s.name = "dirac";
    s.initial = MeasureVector({ParticleMeasure::dirac(std::span<const double>(&p0, 1))});
    s.model = sedimentation_field(kernel_library("bump-poly", 1, {0.5, 1.0}), 1.0);
    s.horizon = 1.0;
    s.step = {dt, 0.1};
    return s;
}

}  // namespace

TEST_CASE("solver examples")
{
    Scenario z = sedimentation(10, 0.05);
    z.model = VelocityModel({zero_velocity(1, 1)}, KernelMatrix::diagonal_constant(1, 1, 1.0));
    for (const auto& snap : solve_direct(z).snapshots) CHECK(snap.state == z.initial);
    z.mode = SolverMode::picard;
    const SolutionRecord zp = solve(z);
    for (const auto& snap : zp.snapshots) CHECK(snap.state == z.initial);
    for (const auto& w : zp.windows) CHECK(w.distances.front() == 0.0);

    const SolutionRecord d = solve_direct(dirac_sedimentation(0.3, 0.01));
    for (const auto& snap : d.snapshots) CHECK(snap.state[0].position(0)[0] == doctest::Approx(0.3 + snap.time).epsilon(1e-10));

    // Two equal particles at +-a drift rigidly at (eta(0) + eta(2a)) / 2.
    Scenario pair = sedimentation(2, 0.01);
    pair.initial = MeasureVector({ParticleMeasure(1, {-0.2, 0.2}, {0.5, 0.5})});
    const SolutionRecord pr = solve_direct(pair);
    const double eta2a = std::pow(1.0 - 0.16 / 0.25, 2);
    const double speed = 0.5 * (1.0 + eta2a);
    CHECK(pr.terminal().state[0].position(1)[0] - pr.terminal().state[0].position(0)[0] == doctest::Approx(0.4).epsilon(1e-8));
    CHECK(pr.terminal().state[0].position(0)[0] == doctest::Approx(-0.2 + 0.5 * speed).epsilon(1e-8));
}

TEST_CASE("picard window on the sedimentation desk scenario")
{
    Scenario s = sedimentation(50, 0.01);
    s.horizon = 0.1;
    const SolutionRecord d = solve_direct(s);
    const WindowResult w = picard_window(s, d.snapshots.front(), 10, 0.01);
    for (std::size_t n = 1; n < w.distances.size(); ++n) CHECK(w.distances[n] < w.distances[n - 1]);
    CHECK(w1_vector(w.snapshots.back().state, d.terminal().state) <= 1e-6);
}

TEST_CASE("window length is monotone in C")
{
    for (double C : {0.5, 1.0, 3.0}) CHECK(window_length(2.0 * C, 0.5, 100.0) < 0.5 * window_length(C, 0.5, 100.0) + 1e-15);
}

TEST_CASE("weak form residual examples")
{
    const Scenario s = sedimentation(20, 0.02);
    const SpaceTimeTest zero{"0", [](double, std::span<const double>) { return 0.0; },
                             [](double, std::span<const double>) { return 0.0; },
                             [](double, std::span<const double>, std::span<double> g) { g[0] = 0.0; }};
    CHECK(weak_form_residual(solve_direct(s), zero) == 0.0);
    Scenario still = s;
    still.model = VelocityModel({zero_velocity(1, 1)}, KernelMatrix::diagonal_constant(1, 1, 1.0));
    const SpaceTimeTest psi{"psi", [](double, std::span<const double> x) { return std::sin(x[0]); },
                            [](double, std::span<const double>) { return 0.0; },
                            [](double, std::span<const double> x, std::span<double> g) { g[0] = std::cos(x[0]); }};
    CHECK(weak_form_residual(solve_direct(still), psi) <= 1e-15);
}

TEST_CASE("predator-prey conserves every species mass")
{
    const double p = -0.5;
    std::vector<double> x, w;
    for (int i = 0; i < 20; ++i) {
        x.push_back(0.1 * i);
        w.push_back(0.05);
    }
    Scenario s;
    s.initial = MeasureVector({ParticleMeasure(1, x, w), ParticleMeasure::dirac(std::span<const double>(&p, 1))});
    const KernelMatrix km(2, {kernel_library("constant", 1, {1.0, 0.0}), kernel_library("tent", 1, {0.5, 1.0}),
                              kernel_library("bump-poly", 1, {1.0, 1.0}), kernel_library("constant", 1, {1.0, 0.0})});
    s.model = dirac_coupling_field({affine_in_r({0.0}, {0.0, 1.0}, 2, 1.0), affine_in_r({0.5}, {0.5, 0.0}, 2, 1.0)}, km,
                                   {false, true}, s.initial);
    s.mode = SolverMode::picard;
    const SolutionRecord r = solve(s);
    for (const auto& snap : r.snapshots) {
        CHECK(snap.state[0].weights() == w);
        CHECK(snap.state[1].weight(0) == 1.0);
    }
}
