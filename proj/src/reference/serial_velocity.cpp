#include <nonlocal/particle_kernels.hpp>

namespace nonlocal::reference {

void point_velocities(const VelocityModel& model, const MeasureVector& source, std::size_t species,
                      double t, std::span<const double> points, std::span<double> out)
{
    const std::size_t d = model.dim();
    const std::size_t n = points.size() / d;
    for (std::size_t m = 0; m < n; ++m)
        eval_nonlocal_velocity(model, source, species, t, points.subspan(m * d, d),
                               out.subspan(m * d, d));
}

}  // namespace nonlocal::reference
