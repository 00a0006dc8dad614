#include <nonlocal/solver.hpp>

#include <nonlocal/error.hpp>
#include <nonlocal/wasserstein.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace nonlocal {

void Scenario::validate() const
{
    if (!(horizon > 0.0)) throw Error("scenario '" + name + "': horizon must be positive");
    if (!(step.dt > 0.0)) throw Error("scenario '" + name + "': dt must be positive");
    if (!(step.courant > 0.0)) throw Error("scenario '" + name + "': courant must be positive");
    if (!(picard.tol > 0.0)) throw Error("scenario '" + name + "': picard tol must be positive");
    if (picard.max_iter < 1) throw Error("scenario '" + name + "': picard max_iter must be >= 1");
    if (!(picard.sigma > 0.0 && picard.sigma < 1.0))
        throw Error("scenario '" + name + "': picard sigma must lie in (0, 1)");
    if (!(h_fd > 0.0)) throw Error("scenario '" + name + "': h_fd must be positive");
    if (initial.species_count() != model.k())
        throw Error("scenario '" + name + "': species count differs from the model's k");
    for (std::size_t i = 0; i < initial.species_count(); ++i)
        if (initial[i].dim() != model.dim())
            throw Error("scenario '" + name + "': species " + std::to_string(i) + " has the wrong dimension");
    validate_species(model, initial);
    if (tracks_density()) {
        if (initial_log_density.size() != initial.species_count() ||
            density_sup.size() != initial.species_count())
            throw Error("scenario '" + name + "': density tracking needs one entry per species");
        for (std::size_t i = 0; i < initial.species_count(); ++i)
            if (initial_log_density[i].size() != initial[i].size())
                throw Error("scenario '" + name + "': log-density count differs from particle count");
    }
}

StabilityConstants StabilityConstants::of(const VelocityModel& model, double mass)
{
    StabilityConstants c;
    c.C = lipschitz_bound_b(model, mass);
    c.K = 2.0 * c.C;
    return c;
}

std::vector<double> SolutionRecord::times() const
{
    std::vector<double> t;
    t.reserve(snapshots.size());
    for (const auto& s : snapshots) t.push_back(s.time);
    return t;
}

FrozenTrajectory SolutionRecord::as_trajectory(FrozenTrajectory::Interpolation interp) const
{
    std::vector<double> t;
    std::vector<MeasureVector> states;
    std::vector<SpeciesVelocities> vel;
    for (const auto& s : snapshots) {
        t.push_back(s.time);
        states.push_back(s.state);
        vel.push_back(s.velocity);
    }
    return FrozenTrajectory(std::move(t), std::move(states), std::move(vel), interp);
}

std::size_t step_count(double horizon, double dt)
{
    if (!(horizon > 0.0) || !(dt > 0.0)) throw Error("step_count: horizon and dt must be positive");
    return static_cast<std::size_t>(std::max(1.0, std::ceil(horizon / dt - 1e-9)));
}

namespace {

FlowState initial_state(const Scenario& s)
{
    FlowState st;
    st.time = 0.0;
    st.measures = s.initial;
    if (s.tracks_density()) enable_density_tracking(st, s.initial_log_density);
    return st;
}

FlowState to_state(const Snapshot& snap)
{
    FlowState st;
    st.time = snap.time;
    st.measures = snap.state;
    st.log_density = snap.log_density;
    if (!snap.log_density.empty()) {
        // The accumulated integral is only needed as a difference; restart it.
        for (const auto& l : snap.log_density) st.divergence_integral.emplace_back(l.size(), 0.0);
    }
    return st;
}

// Runs `steps` steps of size dt from `state`, keeping a snapshot per step.
std::vector<Snapshot> integrate(const VelocityModel& model, const Scenario& s, NonlocalSource src,
                                FlowState state, std::size_t steps, double dt, double courant)
{
    const StepControl ctl{dt, courant};
    const double t0 = state.time;
    std::vector<Snapshot> out;
    out.reserve(steps + 1);
    SpeciesVelocities v = state_velocities(model, src, state, s.exec);
    out.push_back({state.time, state.measures, v, state.log_density});
    for (std::size_t n = 0; n < steps; ++n) {
        FlowState next = rk4_step(model, src, state, ctl, s.exec, &v);
        next.time = t0 + static_cast<double>(n + 1) * dt;
        SpeciesVelocities v1 = state_velocities(model, src, next, s.exec);
        if (next.tracks_density()) accumulate_divergence(model, src, state, v, next, v1, s.h_fd, s.exec);
        out.push_back({next.time, next.measures, v1, next.log_density});
        state = std::move(next);
        v = std::move(v1);
    }
    return out;
}

std::vector<double> species_masses(const MeasureVector& rho)
{
    std::vector<double> m;
    for (std::size_t i = 0; i < rho.species_count(); ++i) m.push_back(total_mass(rho[i]));
    return m;
}

}  // namespace

SolutionRecord solve_direct(const Scenario& s)
{
    s.validate();
    const std::size_t steps = step_count(s.horizon, s.step.dt);
    const double dt = s.horizon / static_cast<double>(steps);
    SolutionRecord rec;
    rec.masses = species_masses(s.initial);
    rec.snapshots = integrate(s.model, s, NonlocalSource::self_consistent(), initial_state(s), steps, dt,
                              s.step.courant);
    return rec;
}

SolutionRecord solve_frozen(const Scenario& s, const FrozenTrajectory& r)
{
    s.validate();
    const std::size_t steps = step_count(s.horizon, s.step.dt);
    const double dt = s.horizon / static_cast<double>(steps);
    SolutionRecord rec;
    rec.masses = species_masses(s.initial);
    rec.snapshots = integrate(s.model, s, NonlocalSource::frozen_by(r), initial_state(s), steps, dt,
                              s.step.courant);
    return rec;
}

double window_length(double C, double sigma, double horizon)
{
    if (!(sigma > 0.0 && sigma < 1.0)) throw Error("window_length: sigma must lie in (0, 1)");
    if (C <= 0.0) return horizon;
    auto f = [C](double t) { return C * t * std::exp(C * t); };
    double lo = 0.0, hi = 1.0 / C;  // f(1/C) = e > sigma
    while (hi - lo > 1e-12 * std::max(1.0, hi)) {
        const double mid = 0.5 * (lo + hi);
        if (f(mid) <= sigma)
            lo = mid;
        else
            hi = mid;
    }
    return std::min(lo, horizon);
}

double window_length(const Scenario& s)
{
    return window_length(StabilityConstants::of(s.model, total_mass(s.initial)).C, s.picard.sigma, s.horizon);
}

WindowResult picard_window(const Scenario& s, const Snapshot& start, std::size_t steps, double dt)
{
    if (steps == 0) throw Error("picard_window: empty window");
    const double t0 = start.time;
    const double t1 = t0 + static_cast<double>(steps) * dt;
    WindowResult res;
    FrozenTrajectory r = FrozenTrajectory::constant(t0, t1, start.state);
    std::vector<Snapshot> prev;
    for (int iter = 0; iter < s.picard.max_iter; ++iter) {
        auto snaps = integrate(s.model, s, NonlocalSource::frozen_by(r), to_state(start), steps, dt,
                               s.step.courant);
        double d = 0.0;
        for (std::size_t n = 0; n < snaps.size(); ++n)
            d = std::max(d, w1_vector(snaps[n].state, prev.empty() ? start.state : prev[n].state));
        res.distances.push_back(d);
        if (d < s.picard.tol) {
            res.snapshots = std::move(snaps);
            return res;
        }
        std::vector<double> t;
        std::vector<MeasureVector> states;
        std::vector<SpeciesVelocities> vel;
        for (const auto& sn : snaps) {
            t.push_back(sn.time);
            states.push_back(sn.state);
            vel.push_back(sn.velocity);
        }
        r = FrozenTrajectory(std::move(t), std::move(states), std::move(vel), s.picard.interpolation);
        prev = std::move(snaps);
    }
    std::ostringstream os;
    os.precision(3);
    os << "picard window [" << t0 << ", " << t1 << "] did not converge in " << s.picard.max_iter
       << " iterations; distances:";
    for (double d : res.distances) os << ' ' << d;
    throw Error(os.str());
}

SolutionRecord solve_picard(const Scenario& s)
{
    s.validate();
    const std::size_t steps = step_count(s.horizon, s.step.dt);
    const double dt = s.horizon / static_cast<double>(steps);
    const double mass = total_mass(s.initial);
    const StabilityConstants k = StabilityConstants::of(s.model, mass);
    // Step control and window lengths come from the original masses.
    check_step(s.model, mass, dt, s.step.courant);
    const double tw = window_length(k.C, s.picard.sigma, s.horizon);
    const std::size_t per_window =
        std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(tw / dt + 1e-9)));

    auto [unit, scales] = rescale_to_probability(s.initial);
    Scenario inner = s;
    inner.initial = unit;
    inner.model = s.model.with_kernels(s.model.kernels().scale_columns(scales));
    inner.step.courant = std::numeric_limits<double>::infinity();

    SolutionRecord rec;
    rec.masses = species_masses(s.initial);
    const FlowState init = initial_state(inner);
    Snapshot start{0.0, init.measures, {}, init.log_density};
    rec.snapshots.push_back(start);
    std::size_t done = 0;
    while (done < steps) {
        const std::size_t n = std::min(per_window, steps - done);
        start.time = static_cast<double>(done) * dt;
        WindowResult w = picard_window(inner, start, n, dt);
        const double wl = static_cast<double>(n) * dt;
        rec.windows.push_back({start.time, start.time + wl, k.C * wl * std::exp(k.C * wl), w.distances});
        rec.snapshots.back() = w.snapshots.front();
        rec.snapshots.insert(rec.snapshots.end(), w.snapshots.begin() + 1, w.snapshots.end());
        done += n;
        start = rec.snapshots.back();
    }
    // Pin the grid times exactly and restore the original weights.
    for (std::size_t n = 0; n < rec.snapshots.size(); ++n) {
        auto& snap = rec.snapshots[n];
        snap.time = static_cast<double>(n) * dt;
        for (std::size_t i = 0; i < snap.state.species_count(); ++i)
            snap.state[i] = ParticleMeasure(s.initial[i].dim(), snap.state[i].positions(), s.initial[i].weights());
    }
    return rec;
}

SolutionRecord solve(const Scenario& s)
{
    return s.mode == SolverMode::picard ? solve_picard(s) : solve_direct(s);
}

double weak_form_residual(const SolutionRecord& record, const SpaceTimeTest& test)
{
    if (record.snapshots.empty()) return 0.0;
    const auto& first = record.snapshots.front();
    const auto& last = record.snapshots.back();
    const std::size_t k = first.state.species_count();
    const std::size_t d = first.state.dim();
    std::vector<double> grad(d);
    double total = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        auto integrand = [&](const Snapshot& sn) {
            double g = 0.0;
            const auto& mu = sn.state[i];
            for (std::size_t m = 0; m < mu.size(); ++m) {
                const auto x = mu.position(m);
                test.grad(sn.time, x, grad);
                double adv = test.dphi_dt(sn.time, x);
                for (std::size_t a = 0; a < d; ++a) adv += sn.velocity[i][m * d + a] * grad[a];
                g += mu.weight(m) * adv;
            }
            return g;
        };
        double integral = 0.0;
        double g_prev = integrand(first);
        for (std::size_t n = 1; n < record.snapshots.size(); ++n) {
            const double g = integrand(record.snapshots[n]);
            integral += 0.5 * (record.snapshots[n].time - record.snapshots[n - 1].time) * (g_prev + g);
            g_prev = g;
        }
        double boundary = 0.0;
        for (std::size_t m = 0; m < first.state[i].size(); ++m)
            boundary += first.state[i].weight(m) * test.phi(first.time, first.state[i].position(m));
        for (std::size_t m = 0; m < last.state[i].size(); ++m)
            boundary -= last.state[i].weight(m) * test.phi(last.time, last.state[i].position(m));
        total += std::abs(integral + boundary);
    }
    return total;
}

std::vector<double> consecutive_w1(const SolutionRecord& record)
{
    std::vector<double> out;
    for (std::size_t n = 1; n < record.snapshots.size(); ++n)
        out.push_back(w1_vector(record.snapshots[n - 1].state, record.snapshots[n].state));
    return out;
}

}  // namespace nonlocal
