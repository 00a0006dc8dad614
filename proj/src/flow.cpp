#include <nonlocal/flow.hpp>

#include <nonlocal/error.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <sstream>

namespace nonlocal {

void check_step(const VelocityModel& model, double mass, double dt, double courant)
{
    if (!(dt > 0.0)) throw Error("time step must be positive");
    const double c = lipschitz_bound_b(model, mass);
    if (dt * c > courant * (1.0 + 1e-12)) {
        std::ostringstream os;
        os << "dt too large for Lipschitz constant: dt*C = " << dt * c << " exceeds courant "
           << courant << " (C = " << c << ")";
        throw Error(os.str());
    }
}

FrozenTrajectory::FrozenTrajectory(std::vector<double> times, std::vector<MeasureVector> states,
                                   std::vector<SpeciesVelocities> velocities,
                                   Interpolation interpolation)
    : times_(std::move(times)), states_(std::move(states)), velocities_(std::move(velocities)),
      interpolation_(interpolation)
{
    if (times_.empty() || times_.size() != states_.size() || times_.size() != velocities_.size())
        throw Error("frozen trajectory: times, states and velocities must have equal length");
    for (std::size_t n = 1; n < times_.size(); ++n)
        if (!(times_[n] > times_[n - 1])) throw Error("frozen trajectory: times must increase");
}

FrozenTrajectory FrozenTrajectory::constant(double t0, double t1, const MeasureVector& state)
{
    SpeciesVelocities still(state.species_count());
    for (std::size_t i = 0; i < state.species_count(); ++i)
        still[i].assign(state[i].positions().size(), 0.0);
    if (t1 > t0) return FrozenTrajectory({t0, t1}, {state, state}, {still, still});
    return FrozenTrajectory({t0}, {state}, {still});
}

MeasureVector FrozenTrajectory::at(double t) const
{
    if (times_.size() == 1 || t <= times_.front()) return states_.front();
    if (t >= times_.back()) return states_.back();
    const auto it = std::upper_bound(times_.begin(), times_.end(), t);
    const std::size_t hi = static_cast<std::size_t>(it - times_.begin());
    const std::size_t lo = hi - 1;
    const double span = times_[hi] - times_[lo];
    const double s = (t - times_[lo]) / span;
    if (s == 0.0) return states_[lo];

    // Hermite basis on [0, 1].
    const double h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
    const double h10 = s * (1.0 - s) * (1.0 - s);
    const double h01 = s * s * (3.0 - 2.0 * s);
    const double h11 = s * s * (s - 1.0);

    MeasureVector out = states_[lo];
    for (std::size_t i = 0; i < out.species_count(); ++i) {
        const auto& p0 = states_[lo][i].positions();
        const auto& p1 = states_[hi][i].positions();
        const auto& v0 = velocities_[lo][i];
        const auto& v1 = velocities_[hi][i];
        std::vector<double> p(p0.size());
        if (interpolation_ == Interpolation::linear)
            for (std::size_t c = 0; c < p.size(); ++c) p[c] = (1.0 - s) * p0[c] + s * p1[c];
        else
            for (std::size_t c = 0; c < p.size(); ++c)
                p[c] = h00 * p0[c] + h10 * span * v0[c] + h01 * p1[c] + h11 * span * v1[c];
        out[i].set_positions(std::move(p));
    }
    return out;
}

void enable_density_tracking(FlowState& state, std::vector<std::vector<double>> initial_log_density)
{
    if (initial_log_density.size() != state.measures.species_count())
        throw Error("density tracking: one log-density vector per species required");
    state.divergence_integral.clear();
    for (std::size_t i = 0; i < initial_log_density.size(); ++i) {
        if (initial_log_density[i].size() != state.measures[i].size())
            throw Error("density tracking: log-density count differs from particle count");
        for (double v : initial_log_density[i])
            if (std::isnan(v) || v == std::numeric_limits<double>::infinity())
                throw Error("density tracking: log-density must be finite");
        state.divergence_integral.emplace_back(initial_log_density[i].size(), 0.0);
    }
    state.log_density = std::move(initial_log_density);
}

namespace {

const MeasureVector& source_at(NonlocalSource source, double t, const MeasureVector& self,
                               MeasureVector& scratch)
{
    if (!source.frozen) return self;
    scratch = source.frozen->at(t);
    return scratch;
}

// base + a * k, per species.
MeasureVector advanced(const MeasureVector& base, const SpeciesVelocities& k, double a)
{
    MeasureVector out = base;
    for (std::size_t i = 0; i < base.species_count(); ++i) {
        const auto& p = base[i].positions();
        std::vector<double> q(p.size());
        for (std::size_t c = 0; c < p.size(); ++c) q[c] = p[c] + a * k[i][c];
        out[i].set_positions(std::move(q));
    }
    return out;
}

std::vector<std::vector<double>> advanced_tracers(const std::vector<std::vector<double>>& base,
                                                  const std::vector<std::vector<double>>& k, double a)
{
    auto out = base;
    for (std::size_t i = 0; i < base.size(); ++i)
        for (std::size_t c = 0; c < base[i].size(); ++c) out[i][c] += a * k[i][c];
    return out;
}

std::vector<std::vector<double>> tracer_velocities(const VelocityModel& model,
                                                   const MeasureVector& source, double t,
                                                   const std::vector<std::vector<double>>& tracers,
                                                   Execution exec)
{
    std::vector<std::vector<double>> out(tracers.size());
    for (std::size_t i = 0; i < tracers.size(); ++i) {
        out[i].assign(tracers[i].size(), 0.0);
        if (!tracers[i].empty()) point_velocities(model, source, i, t, tracers[i], out[i], exec);
    }
    return out;
}

FlowState rk4_impl(const VelocityModel& model, NonlocalSource source, const FlowState& state,
                   const StepControl& control, Execution exec,
                   std::vector<std::vector<double>>* tracers, const SpeciesVelocities* start_velocity)
{
    const double dt = control.dt;
    check_step(model, total_mass(state.measures), dt, control.courant);
    const double t = state.time;
    const MeasureVector& x0 = state.measures;
    MeasureVector scratch;

    const MeasureVector& src1 = source_at(source, t, x0, scratch);
    SpeciesVelocities k1 = start_velocity ? *start_velocity : particle_velocities(model, src1, t, x0, exec);
    std::vector<std::vector<double>> q1, q2, q3, q4;
    if (tracers) q1 = tracer_velocities(model, src1, t, *tracers, exec);

    const MeasureVector x2 = advanced(x0, k1, 0.5 * dt);
    const MeasureVector& src2 = source_at(source, t + 0.5 * dt, x2, scratch);
    const SpeciesVelocities k2 = particle_velocities(model, src2, t + 0.5 * dt, x2, exec);
    if (tracers) q2 = tracer_velocities(model, src2, t + 0.5 * dt, advanced_tracers(*tracers, q1, 0.5 * dt), exec);

    const MeasureVector x3 = advanced(x0, k2, 0.5 * dt);
    const MeasureVector& src3 = source_at(source, t + 0.5 * dt, x3, scratch);
    const SpeciesVelocities k3 = particle_velocities(model, src3, t + 0.5 * dt, x3, exec);
    if (tracers) q3 = tracer_velocities(model, src3, t + 0.5 * dt, advanced_tracers(*tracers, q2, 0.5 * dt), exec);

    const MeasureVector x4 = advanced(x0, k3, dt);
    const MeasureVector& src4 = source_at(source, t + dt, x4, scratch);
    const SpeciesVelocities k4 = particle_velocities(model, src4, t + dt, x4, exec);
    if (tracers) q4 = tracer_velocities(model, src4, t + dt, advanced_tracers(*tracers, q3, dt), exec);

    FlowState next = state;
    next.time = t + dt;
    for (std::size_t i = 0; i < x0.species_count(); ++i) {
        const auto& p = x0[i].positions();
        std::vector<double> q(p.size());
        for (std::size_t c = 0; c < p.size(); ++c)
            q[c] = p[c] + dt / 6.0 * (k1[i][c] + 2.0 * k2[i][c] + 2.0 * k3[i][c] + k4[i][c]);
        next.measures[i].set_positions(std::move(q));
    }
    if (tracers)
        for (std::size_t i = 0; i < tracers->size(); ++i)
            for (std::size_t c = 0; c < (*tracers)[i].size(); ++c)
                (*tracers)[i][c] += dt / 6.0 * (q1[i][c] + 2.0 * q2[i][c] + 2.0 * q3[i][c] + q4[i][c]);
    return next;
}

}  // namespace

SpeciesVelocities state_velocities(const VelocityModel& model, NonlocalSource source,
                                   const FlowState& state, Execution exec)
{
    MeasureVector scratch;
    const MeasureVector& src = source_at(source, state.time, state.measures, scratch);
    return particle_velocities(model, src, state.time, state.measures, exec);
}

FlowState rk4_step(const VelocityModel& model, NonlocalSource source, const FlowState& state,
                   const StepControl& control, Execution exec, const SpeciesVelocities* start_velocity)
{
    return rk4_impl(model, source, state, control, exec, nullptr, start_velocity);
}

FlowState rk4_step(const VelocityModel& model, NonlocalSource source, const FlowState& state,
                   const StepControl& control, Execution exec,
                   std::vector<std::vector<double>>& tracers, const SpeciesVelocities* start_velocity)
{
    return rk4_impl(model, source, state, control, exec, &tracers, start_velocity);
}

double velocity_divergence(const VelocityModel& model, const MeasureVector& source,
                           std::size_t species, double t, std::span<const double> x, double h_fd)
{
    const std::size_t d = model.dim();
    std::array<double, kMaxDim> xp{}, xm{}, vp{}, vm{};
    double div = 0.0;
    for (std::size_t a = 0; a < d; ++a) {
        std::copy(x.begin(), x.end(), xp.begin());
        std::copy(x.begin(), x.end(), xm.begin());
        xp[a] += h_fd;
        xm[a] -= h_fd;
        eval_nonlocal_velocity(model, source, species, t, std::span<const double>(xp.data(), d),
                               std::span<double>(vp.data(), d));
        eval_nonlocal_velocity(model, source, species, t, std::span<const double>(xm.data(), d),
                               std::span<double>(vm.data(), d));
        div += (vp[a] - vm[a]) / (2.0 * h_fd);
    }
    return div;
}

void accumulate_divergence(const VelocityModel& model, NonlocalSource source, const FlowState& before,
                           const SpeciesVelocities& v_before, FlowState& after,
                           const SpeciesVelocities& v_after, double h_fd, Execution exec)
{
    if (!after.tracks_density()) return;
    if (!(h_fd > 0.0)) throw Error("finite-difference stencil width must be positive");
    const double dt = after.time - before.time;
    const double tm = before.time + 0.5 * dt;
    const std::size_t d = model.dim();

    MeasureVector mid = before.measures;
    for (std::size_t i = 0; i < mid.species_count(); ++i) {
        const auto& p0 = before.measures[i].positions();
        const auto& p1 = after.measures[i].positions();
        std::vector<double> q(p0.size());
        for (std::size_t c = 0; c < q.size(); ++c)
            q[c] = 0.5 * (p0[c] + p1[c]) + dt / 8.0 * (v_before[i][c] - v_after[i][c]);
        mid[i].set_positions(std::move(q));
    }
    MeasureVector scratch;
    const MeasureVector& src = source_at(source, tm, mid, scratch);

    for (std::size_t i = 0; i < mid.species_count(); ++i) {
        const std::size_t n = mid[i].size();
        // Stencil points: for particle m and axis a, +h then -h.
        std::vector<double> stencil(n * 2 * d * d), vel(n * 2 * d * d);
        for (std::size_t m = 0; m < n; ++m)
            for (std::size_t a = 0; a < d; ++a)
                for (std::size_t side = 0; side < 2; ++side) {
                    double* pt = stencil.data() + ((m * d + a) * 2 + side) * d;
                    const auto x = mid[i].position(m);
                    std::copy(x.begin(), x.end(), pt);
                    pt[a] += side == 0 ? h_fd : -h_fd;
                }
        point_velocities(model, src, i, tm, stencil, vel, exec);
        for (std::size_t m = 0; m < n; ++m) {
            double div = 0.0;
            for (std::size_t a = 0; a < d; ++a) {
                const double* vp = vel.data() + ((m * d + a) * 2 + 0) * d;
                const double* vm = vel.data() + ((m * d + a) * 2 + 1) * d;
                div += (vp[a] - vm[a]) / (2.0 * h_fd);
            }
            after.divergence_integral[i][m] = before.divergence_integral[i][m] + dt * div;
            after.log_density[i][m] = before.log_density[i][m] - dt * div;
        }
    }
}

ProbeResult flow_map_lipschitz_probe(const VelocityModel& model, const FlowState& state, double horizon,
                                     const StepControl& control, std::size_t pairs_per_species,
                                     double separation, std::uint64_t seed, Execution exec)
{
    const std::size_t d = model.dim();
    const std::size_t k = state.measures.species_count();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::uniform_int_distribution<std::size_t> pick;

    std::vector<std::vector<double>> tracers(k);
    std::vector<std::vector<double>> initial_gap(k);
    for (std::size_t i = 0; i < k; ++i) {
        const auto& mu = state.measures[i];
        for (std::size_t p = 0; p < pairs_per_species && !mu.empty(); ++p) {
            const auto anchor = mu.position(pick(rng) % mu.size());
            std::array<double, kMaxDim> dir{};
            double n = 0.0;
            while (n < 1e-3) {
                n = 0.0;
                for (std::size_t a = 0; a < d; ++a) {
                    dir[a] = unit(rng);
                    n += dir[a] * dir[a];
                }
                n = std::sqrt(n);
            }
            for (std::size_t a = 0; a < d; ++a) tracers[i].push_back(anchor[a]);
            for (std::size_t a = 0; a < d; ++a) tracers[i].push_back(anchor[a] + separation * dir[a] / n);
            initial_gap[i].push_back(separation);
        }
    }

    const std::size_t steps = static_cast<std::size_t>(std::ceil(horizon / control.dt - 1e-9));
    StepControl ctl = control;
    ctl.dt = steps ? horizon / static_cast<double>(steps) : control.dt;
    FlowState s = state;
    for (std::size_t n = 0; n < steps; ++n) s = rk4_step(model, NonlocalSource::self_consistent(), s, ctl, exec, tracers);

    ProbeResult res;
    res.bound = std::exp(lipschitz_bound_b(model, total_mass(state.measures)) * horizon);
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t p = 0; p < initial_gap[i].size(); ++p) {
            double g = 0.0;
            for (std::size_t a = 0; a < d; ++a) {
                const double diff = tracers[i][(2 * p) * d + a] - tracers[i][(2 * p + 1) * d + a];
                g += diff * diff;
            }
            res.max_ratio = std::max(res.max_ratio, std::sqrt(g) / initial_gap[i][p]);
        }
    return res;
}

}  // namespace nonlocal
