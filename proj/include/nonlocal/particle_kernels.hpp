#pragma once

#include <nonlocal/measures.hpp>
#include <nonlocal/velocity.hpp>

#include <span>
#include <vector>

namespace nonlocal {

// Per-species particle velocities, flat N*d per species.
using SpeciesVelocities = std::vector<std::vector<double>>;

enum class Execution { serial, parallel };

// The serial loops are the reference; the OpenMP versions must reproduce them
// bit for bit (each point is evaluated independently, no reductions).
namespace reference {
void point_velocities(const VelocityModel& model, const MeasureVector& source, std::size_t species,
                      double t, std::span<const double> points, std::span<double> out);
}

namespace parallel {
void point_velocities(const VelocityModel& model, const MeasureVector& source, std::size_t species,
                      double t, std::span<const double> points, std::span<double> out);

// Caps the OpenMP worker count; 0 restores the machine default.
void set_worker_limit(int workers);
// Applies NONLOCAL_THREADS when set. Returns the effective worker count.
int apply_worker_limit_from_env();
int worker_count();
}  // namespace parallel

inline void point_velocities(const VelocityModel& model, const MeasureVector& source,
                             std::size_t species, double t, std::span<const double> points,
                             std::span<double> out, Execution exec)
{
    if (exec == Execution::parallel)
        parallel::point_velocities(model, source, species, t, points, out);
    else
        reference::point_velocities(model, source, species, t, points, out);
}

// Velocities of every particle of `particles` with the nonlocal term taken
// from `source` (the two coincide in self-consistent mode).
SpeciesVelocities particle_velocities(const VelocityModel& model, const MeasureVector& source,
                                      double t, const MeasureVector& particles, Execution exec);

}  // namespace nonlocal
