#pragma once

#include <nonlocal/measures.hpp>

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace nonlocal {

// Relative mass tolerance under which two measures count as equal-mass.
inline constexpr double kMassTolerance = 1e-9;
inline constexpr std::size_t kDefaultPairCap = 4'000'000;

struct TransportEntry
{
    std::size_t source = 0;
    std::size_t target = 0;
    double mass = 0.0;
};

struct TransportPlan
{
    std::vector<TransportEntry> pairs;
    double cost = 0.0;
};

// Dual potentials u (sources), v (targets) with u_i + v_j <= |x_i - y_j|.
struct OptimalityCertificate
{
    std::vector<double> u;
    std::vector<double> v;
    double dual_objective = 0.0;
    double max_dual_violation = 0.0;      // max(0, u_i + v_j - c_ij)
    double complementary_slackness = 0.0; // sum gamma_ij (c_ij - u_i - v_j)
};

struct W1Result
{
    double distance = 0.0;
    TransportPlan plan;
    OptimalityCertificate certificate;
};

// Throws "W1 undefined for unequal masses" beyond the relative tolerance.
void require_equal_mass(const ParticleMeasure& mu, const ParticleMeasure& nu);

double w1_1d(const ParticleMeasure& mu, const ParticleMeasure& nu);

// Transportation problem with Euclidean costs, successive shortest paths with
// potentials on the complete bipartite graph.
W1Result w1_exact(const ParticleMeasure& mu, const ParticleMeasure& nu,
                  std::size_t pair_cap = kDefaultPairCap);

// Cheapest exact distance: w1_1d in one dimension, w1_exact otherwise.
double w1(const ParticleMeasure& mu, const ParticleMeasure& nu);

struct TestFunction
{
    std::string label;
    std::function<double(std::span<const double>)> phi;  // 1-Lipschitz
};

// Coordinate projections (both signs), distances to the support points of
// both measures, and `random_count` maxima of affine maps with slopes of
// Euclidean norm <= 1.
std::vector<TestFunction> lipschitz_test_family(const ParticleMeasure& mu, const ParticleMeasure& nu,
                                                std::size_t random_count, std::uint64_t seed);

struct DualBound
{
    double value = 0.0;
    std::string witness;
};

DualBound w1_dual_lower_bound(const ParticleMeasure& mu, const ParticleMeasure& nu,
                              const std::vector<TestFunction>& family);

// Sum over species; errors name the offending species.
double w1_vector(const MeasureVector& rho, const MeasureVector& sigma);

// sum_m w_m |a_m - b_m| for two images of one ensemble (a plan's cost, hence
// an upper bound on W1 between the two images).
double coupling_cost(const ParticleMeasure& a, const ParticleMeasure& b);

// Merges coincident particles and sorts lexicographically.
ParticleMeasure canonicalize(const ParticleMeasure& mu);

}  // namespace nonlocal
