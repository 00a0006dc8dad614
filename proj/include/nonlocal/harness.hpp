#pragma once

#include <nonlocal/solver.hpp>

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace nonlocal {

inline constexpr double kDefaultSlack = 1.05;

struct BoundReport
{
    std::string check;
    double lhs = 0.0;
    double rhs = 0.0;
    double slack = 1.0;
    bool pass = false;
    std::string fingerprint;
    std::string note;

    // pass = lhs <= rhs * slack
    static BoundReport make(std::string check, double lhs, double rhs, double slack,
                            std::string fingerprint, std::string note = {});
};

std::string fingerprint(const Scenario& s);

// Every position shifted by amplitude * U(-1, 1) per coordinate; weights kept.
MeasureVector perturb_positions(const MeasureVector& rho, double amplitude, std::uint64_t seed);

struct SamplePoint
{
    double t = 0.0;
    std::vector<double> x;
};

// Halton points over [lo, hi] x [0, t_max].
std::vector<SamplePoint> sample_points(const std::vector<double>& lo, const std::vector<double>& hi,
                                       double t_max, std::size_t count);

// Velocity gap |V^i(t,x,r*eta^i) - V^i(t,x,s*eta^i)| against
// Lip_r(V^i) Lip_x(eta^i) W1(r, s); reports the worst species.
BoundReport check_velocity_gap(const VelocityModel& model, const MeasureVector& r, const MeasureVector& s,
                                  const std::vector<SamplePoint>& samples);

// Solves from rho_bar and sigma_bar with the scenario's model and compares
// W1(rho_t, sigma_t) with e^{Kt} W1(rho_bar, sigma_bar) at every snapshot.
BoundReport check_stability_initial(const Scenario& s, const MeasureVector& rho_bar,
                                    const MeasureVector& sigma_bar,
                                    std::optional<double> k_override = std::nullopt,
                                    double slack = kDefaultSlack);

struct GeneralStabilityInputs
{
    double C = 0.0;
    double eta_gap = 0.0;  // sampled ||eta - nu||_inf
    double v_gap = 0.0;    // sampled ||V - U||_inf on the r-ball
    double rs_gap = 0.0;   // sup_t W1(r_t, s_t) over the snapshots
};

// Constant for the two-problem estimate: with A = Lip_x(V) +
// Lip_r(V) Lip_x(eta) max(|r|, |s|) and plan mass |gamma_0|,
// C = max(A, |gamma_0| max(Lip_r(V) Lip_x(eta), Lip_r(V) |s|, 1)).
double general_stability_constant(const VelocityModel& model, double mass_r, double mass_s,
                                  double plan_mass);

// Estimate of the frozen-coefficient problems
//   rho: (a.model) frozen on r from rho_bar, sigma: (b.model) frozen on s from sigma_bar
// W1(rho_t, sigma_t) <= e^{Ct} W1(rho_bar, sigma_bar)
//                       + C t e^{Ct} [sup W1(r, s) + ||eta - nu|| + ||V - U||].
BoundReport check_stability_general(const Scenario& a, const Scenario& b, const FrozenTrajectory& r,
                                    const FrozenTrajectory& s, const MeasureVector& rho_bar,
                                    const MeasureVector& sigma_bar, std::size_t sup_samples = 10000,
                                    double slack = kDefaultSlack,
                                    GeneralStabilityInputs* inputs = nullptr);

// Max transported density against ||rho_bar||_inf e^{d C t}.
BoundReport check_linfty_growth(const Scenario& s, const SolutionRecord& record,
                                double slack = kDefaultSlack);
BoundReport check_linfty_growth(const Scenario& s, double slack = kDefaultSlack);

// Exact mass drift across every snapshot (must be 0).
BoundReport check_mass_conservation(const Scenario& s, const SolutionRecord& record);

// Iterate distance ratios against C T_w e^{C T_w} + margin for every window,
// counting only distances above the noise floor.
BoundReport check_contraction(const Scenario& s, const SolutionRecord& picard_record,
                              double margin = 0.05, double noise_floor = 1e-9);

// sup over snapshots of W1(direct, picard).
BoundReport check_method_agreement(const Scenario& s, double tolerance = 1e-6);

// Ratio of residuals at dt and dt/2 for each test function.
using ScenarioFactory = std::function<Scenario(std::size_t n, double dt)>;
std::vector<double> weak_form_ratios(const ScenarioFactory& factory, std::size_t n, double dt,
                                     const std::vector<SpaceTimeTest>& tests);

// Five smooth test functions centred at `center` with support radius
// `radius` in space and varied time dependence.
std::vector<SpaceTimeTest> default_test_battery(const std::vector<double>& center, double radius);

struct RefinementRow
{
    std::string kind;       // "N" or "dt"
    double parameter = 0.0;
    double value = 0.0;     // N: W1(term_N, term_next); dt: W1(term_dt, term_dt/2)
    double ratio = 0.0;     // previous value / value (0 for the first row)
};

std::vector<RefinementRow> refinement_study(const ScenarioFactory& factory,
                                            const std::vector<std::size_t>& particle_counts,
                                            const std::vector<double>& time_steps);

std::string refinement_csv(const std::vector<RefinementRow>& rows);

}  // namespace nonlocal
