#include <nonlocal/particle_kernels.hpp>

#include <nonlocal/error.hpp>

#include <cstdint>
#include <cstdlib>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace nonlocal {

namespace parallel {

void point_velocities(const VelocityModel& model, const MeasureVector& source, std::size_t species,
                      double t, std::span<const double> points, std::span<double> out)
{
    const std::size_t d = model.dim();
    const auto n = static_cast<std::int64_t>(points.size() / d);
#pragma omp parallel for schedule(static)
    for (std::int64_t m = 0; m < n; ++m) {
        const auto off = static_cast<std::size_t>(m) * d;
        eval_nonlocal_velocity(model, source, species, t, points.subspan(off, d), out.subspan(off, d));
    }
}

void set_worker_limit(int workers)
{
#ifdef _OPENMP
    omp_set_num_threads(workers > 0 ? workers : omp_get_num_procs());
#else
    (void)workers;
#endif
}

int apply_worker_limit_from_env()
{
    if (const char* env = std::getenv("NONLOCAL_THREADS"); env && *env) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (*end != '\0' || v <= 0)
            throw Error("NONLOCAL_THREADS must be a positive integer, got '" + std::string(env) + "'");
        set_worker_limit(static_cast<int>(v));
    }
    return worker_count();
}

int worker_count()
{
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

}  // namespace parallel

SpeciesVelocities particle_velocities(const VelocityModel& model, const MeasureVector& source,
                                      double t, const MeasureVector& particles, Execution exec)
{
    SpeciesVelocities out(particles.species_count());
    for (std::size_t i = 0; i < particles.species_count(); ++i) {
        out[i].assign(particles[i].positions().size(), 0.0);
        point_velocities(model, source, i, t, particles[i].positions(), out[i], exec);
    }
    return out;
}

}  // namespace nonlocal
