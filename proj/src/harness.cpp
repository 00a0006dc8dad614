#include <nonlocal/harness.hpp>

#include <nonlocal/error.hpp>
#include <nonlocal/wasserstein.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>
#include <sstream>

namespace nonlocal {

BoundReport BoundReport::make(std::string check, double lhs, double rhs, double slack,
                              std::string fingerprint, std::string note)
{
    BoundReport r;
    r.check = std::move(check);
    r.lhs = lhs;
    r.rhs = rhs;
    r.slack = slack;
    r.pass = lhs <= rhs * slack;
    r.fingerprint = std::move(fingerprint);
    r.note = std::move(note);
    return r;
}

std::string fingerprint(const Scenario& s)
{
    std::ostringstream os;
    os << s.name << ";seed=" << s.seed << ";N=" << s.initial.particle_count() << ";T=" << s.horizon
       << ";dt=" << s.step.dt;
    return os.str();
}

namespace {

double radical_inverse(std::size_t index, unsigned base)
{
    double f = 1.0, r = 0.0;
    while (index > 0) {
        f /= base;
        r += f * static_cast<double>(index % base);
        index /= base;
    }
    return r;
}

constexpr unsigned kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37};

// Per-axis [lo, hi] of every particle in the given states.
void extend_box(const MeasureVector& rho, std::vector<double>& lo, std::vector<double>& hi)
{
    const std::size_t d = rho.dim();
    if (lo.empty()) {
        lo.assign(d, std::numeric_limits<double>::infinity());
        hi.assign(d, -std::numeric_limits<double>::infinity());
    }
    for (std::size_t i = 0; i < rho.species_count(); ++i)
        for (std::size_t m = 0; m < rho[i].size(); ++m)
            for (std::size_t a = 0; a < d; ++a) {
                lo[a] = std::min(lo[a], rho[i].position(m)[a]);
                hi[a] = std::max(hi[a], rho[i].position(m)[a]);
            }
}

Scenario with_initial(const Scenario& s, const MeasureVector& rho)
{
    Scenario c = s;
    c.initial = rho;
    c.initial_log_density.clear();
    c.density_sup.clear();
    return c;
}

}  // namespace

MeasureVector perturb_positions(const MeasureVector& rho, double amplitude, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<ParticleMeasure> out;
    for (std::size_t i = 0; i < rho.species_count(); ++i) {
        std::vector<double> p = rho[i].positions();
        for (double& x : p) x += amplitude * u(rng);
        out.emplace_back(rho[i].dim(), std::move(p), rho[i].weights());
    }
    return MeasureVector(std::move(out));
}

std::vector<SamplePoint> sample_points(const std::vector<double>& lo, const std::vector<double>& hi,
                                       double t_max, std::size_t count)
{
    const std::size_t d = lo.size();
    std::vector<SamplePoint> pts;
    pts.reserve(count);
    for (std::size_t n = 1; n <= count; ++n) {
        SamplePoint p;
        p.t = t_max * radical_inverse(n, kPrimes[0]);
        for (std::size_t a = 0; a < d; ++a) p.x.push_back(lo[a] + (hi[a] - lo[a]) * radical_inverse(n, kPrimes[a + 1]));
        pts.push_back(std::move(p));
    }
    return pts;
}

BoundReport check_velocity_gap(const VelocityModel& model, const MeasureVector& r, const MeasureVector& s,
                                  const std::vector<SamplePoint>& samples)
{
    const double w = w1_vector(r, s);
    double worst_ratio = -1.0, lhs_w = 0.0, rhs_w = 0.0;
    for (std::size_t i = 0; i < model.k(); ++i) {
        const double rhs = model.field(i).lip_r() * model.kernels().row_lip(i) * w;
        double lhs = 0.0;
        for (const auto& p : samples) {
            const auto a = eval_nonlocal_velocity(model, r, i, p.t, p.x);
            const auto b = eval_nonlocal_velocity(model, s, i, p.t, p.x);
            double g = 0.0;
            for (std::size_t c = 0; c < a.size(); ++c) g += (a[c] - b[c]) * (a[c] - b[c]);
            lhs = std::max(lhs, std::sqrt(g));
        }
        const double ratio = rhs > 0.0 ? lhs / rhs : (lhs > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
        if (ratio > worst_ratio) {
            worst_ratio = ratio;
            lhs_w = lhs;
            rhs_w = rhs;
        }
    }
    std::ostringstream fp;
    fp << "velocity-gap;N=" << r.particle_count() << ";samples=" << samples.size();
    return BoundReport::make("velocity-gap", lhs_w, rhs_w, 1.0, fp.str());
}

BoundReport check_stability_initial(const Scenario& s, const MeasureVector& rho_bar,
                                    const MeasureVector& sigma_bar, std::optional<double> k_override,
                                    double slack)
{
    const Scenario a = with_initial(s, rho_bar);
    const Scenario b = with_initial(s, sigma_bar);
    const SolutionRecord ra = solve(a);
    const SolutionRecord rb = solve(b);
    const double w0 = w1_vector(rho_bar, sigma_bar);
    const double K = k_override ? *k_override : StabilityConstants::of(s.model, total_mass(rho_bar)).K;

    if (w0 == 0.0) {
        double lhs = 0.0;
        for (std::size_t n = 0; n < ra.snapshots.size(); ++n)
            lhs = std::max(lhs, w1_vector(ra.snapshots[n].state, rb.snapshots[n].state));
        return BoundReport::make("stability-initial", lhs, 1e-9, 1.0, fingerprint(s), "identical data");
    }
    double worst = -1.0, lhs_w = 0.0, rhs_w = 0.0, t_w = 0.0;
    for (std::size_t n = 0; n < ra.snapshots.size(); ++n) {
        const double t = ra.snapshots[n].time;
        const double d = w1_vector(ra.snapshots[n].state, rb.snapshots[n].state);
        const double bound = std::exp(K * t) * w0;
        if (d / bound > worst) {
            worst = d / bound;
            lhs_w = d;
            rhs_w = bound;
            t_w = t;
        }
    }
    std::ostringstream note;
    note << "K=" << K << ";W0=" << w0 << ";t=" << t_w;
    return BoundReport::make("stability-initial", lhs_w, rhs_w, slack, fingerprint(s), note.str());
}

double general_stability_constant(const VelocityModel& model, double mass_r, double mass_s, double plan_mass)
{
    const double lip_eta = model.kernels().lip_x();
    const double a = model.lip_x() + model.lip_r() * lip_eta * std::max(mass_r, mass_s);
    const double b = plan_mass * std::max({model.lip_r() * lip_eta, model.lip_r() * mass_s, 1.0});
    return std::max(a, b);
}

BoundReport check_stability_general(const Scenario& a, const Scenario& b, const FrozenTrajectory& r,
                                    const FrozenTrajectory& s, const MeasureVector& rho_bar,
                                    const MeasureVector& sigma_bar, std::size_t sup_samples, double slack,
                                    GeneralStabilityInputs* inputs)
{
    if (a.model.dim() != b.model.dim() || a.model.k() != b.model.k())
        throw Error("check_stability_general: models differ in shape");
    const SolutionRecord ra = solve_frozen(with_initial(a, rho_bar), r);
    const SolutionRecord rb = solve_frozen(with_initial(b, sigma_bar), s);
    if (ra.snapshots.size() != rb.snapshots.size())
        throw Error("check_stability_general: the two problems use different time grids");

    const std::size_t d = a.model.dim();
    const std::size_t k = a.model.k();
    const double horizon = ra.terminal().time;
    GeneralStabilityInputs in;

    const double w0 = w1_vector(rho_bar, sigma_bar);
    const double mass_r = total_mass(r.at(0.0));
    const double mass_s = total_mass(s.at(0.0));
    in.C = general_stability_constant(a.model, mass_r, mass_s, total_mass(rho_bar));

    std::vector<double> lo, hi;
    extend_box(rho_bar, lo, hi);
    extend_box(sigma_bar, lo, hi);
    for (const auto& snap : ra.snapshots) {
        const MeasureVector rt = r.at(snap.time);
        const MeasureVector st = s.at(snap.time);
        in.rs_gap = std::max(in.rs_gap, w1_vector(rt, st));
        extend_box(rt, lo, hi);
        extend_box(st, lo, hi);
    }
    const double grow = std::max(a.model.sup_bound(), b.model.sup_bound()) * horizon;
    for (std::size_t c = 0; c < d; ++c) {
        lo[c] -= grow;
        hi[c] += grow;
    }

    // Kernel gap over differences of box points, origin included.
    std::vector<double> zlo(d), zhi(d);
    for (std::size_t c = 0; c < d; ++c) {
        zhi[c] = hi[c] - lo[c];
        zlo[c] = -zhi[c];
    }
    auto zs = sample_points(zlo, zhi, horizon, sup_samples);
    zs.push_back({0.0, std::vector<double>(d, 0.0)});
    for (const auto& z : zs)
        for (std::size_t i = 0; i < k; ++i)
            for (std::size_t j = 0; j < k; ++j)
                in.eta_gap = std::max(in.eta_gap, std::abs(a.model.kernels()(i, j)(z.t, z.x) -
                                                           b.model.kernels()(i, j)(z.t, z.x)));

    // Velocity gap on the box times the r-ball.
    const double ball = std::max(mass_r, mass_s) *
                        std::max(a.model.kernels().sup_bound(), b.model.kernels().sup_bound());
    const auto xs = sample_points(lo, hi, horizon, sup_samples);
    std::vector<double> rv(k), va(d), vb(d);
    for (std::size_t n = 0; n < xs.size(); ++n) {
        double l1 = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            rv[j] = 2.0 * radical_inverse(n + 1, kPrimes[d + 1 + j]) - 1.0;
            l1 += std::abs(rv[j]);
        }
        const double scale = n == 0 ? 0.0 : ball / std::max(1.0, l1);
        for (double& v : rv) v *= scale;
        for (std::size_t i = 0; i < k; ++i) {
            a.model.field(i)(xs[n].t, xs[n].x, rv, va);
            b.model.field(i)(xs[n].t, xs[n].x, rv, vb);
            double g = 0.0;
            for (std::size_t c = 0; c < d; ++c) g += (va[c] - vb[c]) * (va[c] - vb[c]);
            in.v_gap = std::max(in.v_gap, std::sqrt(g));
        }
    }

    const double forcing = in.rs_gap + in.eta_gap + in.v_gap;
    double worst = -1.0, lhs_w = 0.0, rhs_w = 0.0;
    for (std::size_t n = 0; n < ra.snapshots.size(); ++n) {
        const double t = ra.snapshots[n].time;
        const double lhs = w1_vector(ra.snapshots[n].state, rb.snapshots[n].state);
        const double e = std::exp(in.C * t);
        const double rhs = e * w0 + in.C * t * e * forcing;
        const double ratio = rhs > 0.0 ? lhs / rhs : (lhs > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
        if (ratio > worst) {
            worst = ratio;
            lhs_w = lhs;
            rhs_w = rhs;
        }
    }
    if (inputs) *inputs = in;
    std::ostringstream note;
    note << "C=" << in.C << ";eta_gap=" << in.eta_gap << ";v_gap=" << in.v_gap << ";rs_gap=" << in.rs_gap;
    return BoundReport::make("stability-general", lhs_w, rhs_w, slack, fingerprint(a), note.str());
}

BoundReport check_linfty_growth(const Scenario& s, const SolutionRecord& record, double slack)
{
    if (!s.tracks_density()) throw Error("check_linfty_growth: scenario does not track densities");
    const double rate = static_cast<double>(s.model.dim()) *
                        StabilityConstants::of(s.model, total_mass(s.initial)).C;
    double worst = -1.0, lhs_w = 0.0, rhs_w = 0.0;
    for (const auto& snap : record.snapshots) {
        if (snap.log_density.empty()) throw Error("check_linfty_growth: record carries no densities");
        for (std::size_t i = 0; i < snap.log_density.size(); ++i) {
            double top = 0.0;
            for (double l : snap.log_density[i]) top = std::max(top, std::exp(l));
            const double bound = s.density_sup[i] * std::exp(rate * snap.time);
            if (top / bound > worst) {
                worst = top / bound;
                lhs_w = top;
                rhs_w = bound;
            }
        }
    }
    std::ostringstream note;
    note << "rate=" << rate << ";saturation=" << worst;
    return BoundReport::make("linfty-growth", lhs_w, rhs_w, slack, fingerprint(s), note.str());
}

BoundReport check_linfty_growth(const Scenario& s, double slack)
{
    return check_linfty_growth(s, solve(s), slack);
}

BoundReport check_mass_conservation(const Scenario& s, const SolutionRecord& record)
{
    double drift = 0.0;
    for (const auto& snap : record.snapshots)
        for (std::size_t i = 0; i < snap.state.species_count(); ++i)
            drift = std::max(drift, std::abs(total_mass(snap.state[i]) - record.masses[i]));
    return BoundReport::make("mass-conservation", drift, 0.0, 1.0, fingerprint(s));
}

BoundReport check_contraction(const Scenario& s, const SolutionRecord& picard_record, double margin,
                              double noise_floor)
{
    double worst = -1.0, lhs_w = 0.0, rhs_w = 0.0;
    std::size_t counted = 0;
    for (const auto& w : picard_record.windows)
        for (std::size_t n = 0; n + 1 < w.distances.size(); ++n) {
            if (!(w.distances[n] > noise_floor && w.distances[n + 1] > noise_floor)) continue;
            const double ratio = w.distances[n + 1] / w.distances[n];
            const double bound = w.contraction_factor + margin;
            ++counted;
            if (ratio - bound > worst) {
                worst = ratio - bound;
                lhs_w = ratio;
                rhs_w = bound;
            }
        }
    if (counted == 0) {
        const double bound = picard_record.windows.empty() ? margin : picard_record.windows.front().contraction_factor + margin;
        return BoundReport::make("picard-contraction", 0.0, bound, 1.0, fingerprint(s), "no ratios above noise floor");
    }
    return BoundReport::make("picard-contraction", lhs_w, rhs_w, 1.0, fingerprint(s),
                             "ratios=" + std::to_string(counted));
}

BoundReport check_method_agreement(const Scenario& s, double tolerance)
{
    Scenario a = s;
    a.mode = SolverMode::direct;
    Scenario b = s;
    b.mode = SolverMode::picard;
    const SolutionRecord ra = solve(a);
    const SolutionRecord rb = solve(b);
    if (ra.snapshots.size() != rb.snapshots.size())
        throw Error("check_method_agreement: snapshot grids differ");
    double sup = 0.0;
    for (std::size_t n = 0; n < ra.snapshots.size(); ++n)
        sup = std::max(sup, w1_vector(ra.snapshots[n].state, rb.snapshots[n].state));
    return BoundReport::make("method-agreement", sup, tolerance, 1.0, fingerprint(s));
}

std::vector<double> weak_form_ratios(const ScenarioFactory& factory, std::size_t n, double dt,
                                     const std::vector<SpaceTimeTest>& tests)
{
    Scenario coarse = factory(n, dt);
    Scenario fine = factory(n, dt / 2.0);
    coarse.mode = fine.mode = SolverMode::direct;
    const SolutionRecord rc = solve(coarse);
    const SolutionRecord rf = solve(fine);
    std::vector<double> ratios;
    for (const auto& t : tests) ratios.push_back(weak_form_residual(rc, t) / weak_form_residual(rf, t));
    return ratios;
}

namespace {

// psi(x) = (1 - |x - c|^2 / R^2)_+^4
struct Bump
{
    std::vector<double> c;
    double R;

    double value(std::span<const double> x) const
    {
        double q = 0.0;
        for (std::size_t a = 0; a < c.size(); ++a) q += (x[a] - c[a]) * (x[a] - c[a]);
        q /= R * R;
        return q >= 1.0 ? 0.0 : std::pow(1.0 - q, 4);
    }
    void grad(std::span<const double> x, std::span<double> g) const
    {
        double q = 0.0;
        for (std::size_t a = 0; a < c.size(); ++a) q += (x[a] - c[a]) * (x[a] - c[a]);
        q /= R * R;
        const double f = q >= 1.0 ? 0.0 : -8.0 * std::pow(1.0 - q, 3) / (R * R);
        for (std::size_t a = 0; a < c.size(); ++a) g[a] = f * (x[a] - c[a]);
    }
};

SpaceTimeTest make_test(std::string label, Bump b, std::function<double(double)> g,
                        std::function<double(double)> dg)
{
    SpaceTimeTest t;
    t.label = std::move(label);
    t.phi = [b, g](double s, std::span<const double> x) { return g(s) * b.value(x); };
    t.dphi_dt = [b, dg](double s, std::span<const double> x) { return dg(s) * b.value(x); };
    t.grad = [b, g](double s, std::span<const double> x, std::span<double> out) {
        b.grad(x, out);
        for (double& v : out) v *= g(s);
    };
    return t;
}

}  // namespace

std::vector<SpaceTimeTest> default_test_battery(const std::vector<double>& center, double radius)
{
    auto shifted = [&](double dx) {
        auto c = center;
        c[0] += dx * radius;
        return c;
    };
    std::vector<SpaceTimeTest> tests;
    tests.push_back(make_test("bump", {center, radius}, [](double) { return 1.0; }, [](double) { return 0.0; }));
    tests.push_back(make_test("bump-linear-t", {shifted(0.25), radius}, [](double t) { return 1.0 + t; },
                              [](double) { return 1.0; }));
    tests.push_back(make_test("bump-cos-t", {shifted(-0.25), 0.8 * radius}, [](double t) { return std::cos(2.0 * t); },
                              [](double t) { return -2.0 * std::sin(2.0 * t); }));
    tests.push_back(make_test("bump-exp-t", {center, 1.5 * radius}, [](double t) { return std::exp(-t); },
                              [](double t) { return -std::exp(-t); }));
    tests.push_back(make_test("bump-quad-t", {shifted(0.5), radius}, [](double t) { return 1.0 + 0.5 * t * t; },
                              [](double t) { return t; }));
    return tests;
}

std::vector<RefinementRow> refinement_study(const ScenarioFactory& factory,
                                            const std::vector<std::size_t>& particle_counts,
                                            const std::vector<double>& time_steps)
{
    std::vector<RefinementRow> rows;
    if (particle_counts.empty() || time_steps.empty()) return rows;
    const double finest_dt = *std::min_element(time_steps.begin(), time_steps.end());
    const std::size_t coarsest_n = *std::min_element(particle_counts.begin(), particle_counts.end());

    std::vector<MeasureVector> terminal;
    for (std::size_t n : particle_counts) terminal.push_back(solve(factory(n, finest_dt)).terminal().state);
    for (std::size_t q = 0; q + 1 < terminal.size(); ++q) {
        RefinementRow r{"N", static_cast<double>(particle_counts[q]), w1_vector(terminal[q], terminal[q + 1]), 0.0};
        if (!rows.empty() && r.value > 0.0) r.ratio = rows.back().value / r.value;
        rows.push_back(r);
    }

    auto dts = time_steps;
    std::sort(dts.rbegin(), dts.rend());
    double prev = -1.0;
    for (double dt : dts) {
        const auto a = solve(factory(coarsest_n, dt)).terminal().state;
        const auto b = solve(factory(coarsest_n, dt / 2.0)).terminal().state;
        RefinementRow r{"dt", dt, w1_vector(a, b), 0.0};
        if (prev > 0.0 && r.value > 0.0) r.ratio = prev / r.value;
        prev = r.value;
        rows.push_back(r);
    }
    return rows;
}

std::string refinement_csv(const std::vector<RefinementRow>& rows)
{
    std::string out = "kind,parameter,value,ratio\n";
    char buf[160];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%s,%.17g,%.17g,%.17g\n", r.kind.c_str(), r.parameter, r.value, r.ratio);
        out += buf;
    }
    return out;
}

}  // namespace nonlocal
