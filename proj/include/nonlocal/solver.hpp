#pragma once

#include <nonlocal/flow.hpp>
#include <nonlocal/measures.hpp>
#include <nonlocal/velocity.hpp>

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace nonlocal {

enum class SolverMode { direct, picard };

struct PicardParams
{
    double tol = 1e-10;     // on sup over snapshots of W1 between iterates
    int max_iter = 60;
    double sigma = 0.5;     // window safety: C T_w e^{C T_w} <= sigma
    FrozenTrajectory::Interpolation interpolation = FrozenTrajectory::Interpolation::hermite;
};

struct Scenario
{
    std::string name = "scenario";
    VelocityModel model;
    MeasureVector initial;
    // Per species log of the initial density at each particle; empty when
    // densities are not tracked. density_sup holds ||rho_bar^i||_inf.
    std::vector<std::vector<double>> initial_log_density;
    std::vector<double> density_sup;
    double horizon = 1.0;
    StepControl step;
    double h_fd = 1e-4;
    SolverMode mode = SolverMode::direct;
    PicardParams picard;
    Execution exec = Execution::parallel;
    std::uint64_t seed = 0;

    bool tracks_density() const noexcept { return !initial_log_density.empty(); }
    void validate() const;
};

struct StabilityConstants
{
    double C = 0.0;
    double K = 0.0;

    static StabilityConstants of(const VelocityModel& model, double mass);
};

struct Snapshot
{
    double time = 0.0;
    MeasureVector state;
    SpeciesVelocities velocity;  // dX/dt at this time
    std::vector<std::vector<double>> log_density;
};

struct PicardWindowLog
{
    double t0 = 0.0;
    double t1 = 0.0;
    double contraction_factor = 0.0;  // C T_w e^{C T_w}
    std::vector<double> distances;    // sup_t W1(rho^{n+1}, rho^n), n = 0, 1, ...
};

struct SolutionRecord
{
    std::vector<Snapshot> snapshots;
    std::vector<double> masses;  // per species, initial
    std::vector<PicardWindowLog> windows;

    std::vector<double> times() const;
    const Snapshot& terminal() const { return snapshots.back(); }
    FrozenTrajectory as_trajectory(FrozenTrajectory::Interpolation interp =
                                       FrozenTrajectory::Interpolation::hermite) const;
};

// Number of steps and the effective step dt_eff = T / ceil(T / dt).
std::size_t step_count(double horizon, double dt);

SolutionRecord solve_direct(const Scenario& s);

// Integrates the frozen-coefficient problem: particles move with the
// nonlocal argument read from r. Used by the fixed-point map and by the
// general stability check.
SolutionRecord solve_frozen(const Scenario& s, const FrozenTrajectory& r);

// Largest T_w with C T_w e^{C T_w} <= sigma (bisection); `horizon` when C = 0.
double window_length(double C, double sigma, double horizon);
double window_length(const Scenario& s);

struct WindowResult
{
    std::vector<Snapshot> snapshots;  // includes the window start
    std::vector<double> distances;
};

// Fixed-point iteration on one window of `steps` steps of size dt, starting
// from `start` at time t0. The initial guess is the constant trajectory.
WindowResult picard_window(const Scenario& s, const Snapshot& start, std::size_t steps, double dt);

SolutionRecord solve_picard(const Scenario& s);

// Dispatches on s.mode.
SolutionRecord solve(const Scenario& s);

// Test function phi(t, x) with its time derivative and spatial gradient.
struct SpaceTimeTest
{
    std::string label;
    std::function<double(double, std::span<const double>)> phi;
    std::function<double(double, std::span<const double>)> dphi_dt;
    std::function<void(double, std::span<const double>, std::span<double>)> grad;
};

// Discrete weak-form residual summed over species (absolute values):
//   int_0^T sum_m w_m [d_t phi + V . grad phi](t, X_m) dt
//     + sum_m w_m phi(0, X_m(0)) - sum_m w_m phi(T, X_m(T))
// with the trapezoid rule over snapshots and the stored velocities.
double weak_form_residual(const SolutionRecord& record, const SpaceTimeTest& test);

// W1 distance between consecutive snapshots.
std::vector<double> consecutive_w1(const SolutionRecord& record);

}  // namespace nonlocal
