#pragma once

#include <nonlocal/measures.hpp>
#include <nonlocal/particle_kernels.hpp>
#include <nonlocal/velocity.hpp>

#include <cstdint>
#include <vector>

namespace nonlocal {

struct StepControl
{
    double dt = 0.01;
    double courant = 0.1;
};

// Throws "dt too large for Lipschitz constant" unless dt * C <= courant,
// C = lipschitz_bound_b(model, mass).
void check_step(const VelocityModel& model, double mass, double dt, double courant);

// A prescribed time-dependent nonlocal argument r_t, stored as particle
// snapshots with their velocities. Between snapshots positions follow a cubic
// Hermite curve (or a straight line).
class FrozenTrajectory
{
public:
    enum class Interpolation { linear, hermite };

    FrozenTrajectory(std::vector<double> times, std::vector<MeasureVector> states,
                     std::vector<SpeciesVelocities> velocities,
                     Interpolation interpolation = Interpolation::hermite);
    // r_t = state for all t in [t0, t1].
    static FrozenTrajectory constant(double t0, double t1, const MeasureVector& state);

    MeasureVector at(double t) const;
    double t_begin() const noexcept { return times_.front(); }
    double t_end() const noexcept { return times_.back(); }
    const std::vector<double>& times() const noexcept { return times_; }
    const std::vector<MeasureVector>& states() const noexcept { return states_; }
    const std::vector<SpeciesVelocities>& velocities() const noexcept { return velocities_; }

private:
    std::vector<double> times_;
    std::vector<MeasureVector> states_;
    std::vector<SpeciesVelocities> velocities_;
    Interpolation interpolation_;
};

// Where the nonlocal argument comes from: the evolving state itself, or a
// frozen trajectory (the map r -> rho of the fixed-point iteration).
struct NonlocalSource
{
    const FrozenTrajectory* frozen = nullptr;

    static NonlocalSource self_consistent() { return {}; }
    static NonlocalSource frozen_by(const FrozenTrajectory& r) { return {&r}; }
};

struct FlowState
{
    double time = 0.0;
    MeasureVector measures;
    // Per species, per particle; empty when densities are not tracked.
    std::vector<std::vector<double>> log_density;
    std::vector<std::vector<double>> divergence_integral;

    bool tracks_density() const noexcept { return !log_density.empty(); }
};

// Starts density tracking: log of the initial density at each particle, zero
// accumulated divergence.
void enable_density_tracking(FlowState& state, std::vector<std::vector<double>> initial_log_density);

// Velocities of all particles at the state's time.
SpeciesVelocities state_velocities(const VelocityModel& model, NonlocalSource source,
                                   const FlowState& state, Execution exec);

// Classical four-stage Runge-Kutta step of every particle. Weights and density
// fields are copied unchanged; see accumulate_divergence for the latter.
// start_velocity, when given, must equal state_velocities(...) and is reused
// as the first stage.
FlowState rk4_step(const VelocityModel& model, NonlocalSource source, const FlowState& state,
                   const StepControl& control, Execution exec,
                   const SpeciesVelocities* start_velocity = nullptr);

// Same step, also carrying passive tracer points per species (flat N*d).
FlowState rk4_step(const VelocityModel& model, NonlocalSource source, const FlowState& state,
                   const StepControl& control, Execution exec,
                   std::vector<std::vector<double>>& tracers,
                   const SpeciesVelocities* start_velocity = nullptr);

// Advances log-densities of `after` along the step before -> after: div V is
// taken by central differences of width h_fd at the Hermite midpoint of each
// characteristic, integrated with the midpoint rule.
void accumulate_divergence(const VelocityModel& model, NonlocalSource source, const FlowState& before,
                           const SpeciesVelocities& v_before, FlowState& after,
                           const SpeciesVelocities& v_after, double h_fd, Execution exec);

// Divergence of species i's velocity at a point, central differences.
double velocity_divergence(const VelocityModel& model, const MeasureVector& source,
                           std::size_t species, double t, std::span<const double> x, double h_fd);

struct ProbeResult
{
    double max_ratio = 0.0;  // max |X_T(x) - X_T(y)| / |x - y|
    double bound = 0.0;      // exp(C T)
};

// Integrates the state self-consistently to time T together with probe pairs
// placed around each species' particles and reports the worst stretching.
ProbeResult flow_map_lipschitz_probe(const VelocityModel& model, const FlowState& state, double horizon,
                                     const StepControl& control, std::size_t pairs_per_species,
                                     double separation, std::uint64_t seed, Execution exec);

}  // namespace nonlocal
