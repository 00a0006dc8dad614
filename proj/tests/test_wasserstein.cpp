#include <doctest.h>

#include <nonlocal/error.hpp>
#include <nonlocal/wasserstein.hpp>

#include "lp_oracle.hpp"

#include <cmath>
#include <random>

using namespace nonlocal;

TEST_CASE("two diracs are at their distance")
{
    const double a[2] = {0.0, 0.0}, b[2] = {3.0, 4.0};
    const ParticleMeasure mu = ParticleMeasure::dirac(a, 2.0), nu = ParticleMeasure::dirac(b, 2.0);
    CHECK(w1(mu, nu) == doctest::Approx(10.0));
    CHECK(w1_exact(mu, nu).distance == doctest::Approx(10.0));
}

TEST_CASE("one dimensional W1 by hand")
{
    // Uniform on {0, 1} against a dirac at 1: half the mass moves by 1.
    ParticleMeasure mu(1, {0.0, 1.0}, {0.5, 0.5}), nu(1, {1.0}, {1.0});
    CHECK(w1_1d(mu, nu) == doctest::Approx(0.5));
    CHECK(w1_exact(mu, nu).distance == doctest::Approx(0.5));
    CHECK(w1_1d(mu, mu) == 0.0);
}

TEST_CASE("unequal masses are rejected")
{
    ParticleMeasure mu(1, {0.0}, {1.0}), nu(1, {0.0}, {1.5});
    CHECK_THROWS_WITH_AS(w1(mu, nu), doctest::Contains("W1 undefined for unequal masses"), Error);
    const MeasureVector a({mu, mu}), b({mu, nu});
    CHECK_THROWS_WITH_AS(w1_vector(a, b), doctest::Contains("species 1"), Error);
}

TEST_CASE("exact W1 matches the simplex oracle on random 2-D instances")
{
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(-1.0, 1.0), w(0.2, 1.0);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t n = 2 + trial % 5, m = 1 + trial % 4;
        std::vector<double> xp(2 * n), yp(2 * m), xw(n), yw(m);
        for (double& v : xp) v = u(rng);
        for (double& v : yp) v = u(rng);
        double sx = 0.0, sy = 0.0;
        for (double& v : xw) sx += (v = w(rng));
        for (double& v : yw) sy += (v = w(rng));
        for (double& v : xw) v /= sx;
        for (double& v : yw) v /= sy;
        const ParticleMeasure mu(2, xp, xw), nu(2, yp, yw);
        const W1Result r = w1_exact(mu, nu);
        CHECK(r.distance == doctest::Approx(oracle::transport_lp(2, xp, xw, yp, yw)).epsilon(1e-12));
        CHECK(r.certificate.max_dual_violation <= 1e-12);
        CHECK(r.certificate.dual_objective == doctest::Approx(r.distance).epsilon(1e-12));
    }
}

TEST_CASE("pair cap gives a helpful error")
{
    ParticleMeasure mu(1, {0.0, 1.0, 2.0}, {1.0, 1.0, 1.0});
    CHECK_THROWS_WITH_AS(w1_exact(mu, mu, 4), doctest::Contains("w1_1d"), Error);
}

TEST_CASE("dual lower bound never exceeds W1")
{
    ParticleMeasure mu(2, {0.0, 0.0, 1.0, 0.0}, {0.5, 0.5}), nu(2, {0.0, 1.0, 2.0, 1.0}, {0.5, 0.5});
    const double exact = w1_exact(mu, nu).distance;
    const DualBound lb = w1_dual_lower_bound(mu, nu, lipschitz_test_family(mu, nu, 8, 1));
    CHECK(lb.value <= exact + 1e-12);
    CHECK(lb.value > 0.5 * exact);
    CHECK_FALSE(lb.witness.empty());
}

TEST_CASE("coupling cost bounds W1 from above")
{
    ParticleMeasure a(1, {0.0, 1.0, 2.0}, {0.2, 0.3, 0.5});
    ParticleMeasure b(1, {2.0, 1.0, 0.0}, {0.2, 0.3, 0.5});
    CHECK(coupling_cost(a, b) >= w1(a, b));
    CHECK(coupling_cost(a, b) == doctest::Approx(0.2 * 2 + 0.5 * 2));
}

TEST_CASE("canonicalize merges coincident particles")
{
    ParticleMeasure mu(1, {1.0, 0.0, 1.0}, {0.25, 0.5, 0.25});
    const ParticleMeasure c = canonicalize(mu);
    CHECK(c.size() == 2);
    CHECK(c.position(0)[0] == 0.0);
    CHECK(c.weight(1) == doctest::Approx(0.5));
}

TEST_CASE("W1 examples")
{
    const double z = 0.0, three = 3.0;
    const ParticleMeasure d0 = ParticleMeasure::dirac(std::span<const double>(&z, 1));
    const ParticleMeasure d3 = ParticleMeasure::dirac(std::span<const double>(&three, 1));
    CHECK(w1_1d(d0, d3) == doctest::Approx(3.0));
    const ParticleMeasure split(1, {0.0, 2.0}, {0.5, 0.5});
    const double one = 1.0;
    CHECK(w1_1d(split, ParticleMeasure::dirac(std::span<const double>(&one, 1))) == doctest::Approx(1.0));
    CHECK(w1_1d(split, split) == 0.0);

    const ParticleMeasure a(2, {0.0, 0.0, 1.0, 0.0}, {0.5, 0.5}), b(2, {0.0, 0.5, 1.0, 0.5}, {0.5, 0.5});
    CHECK(w1_exact(a, b).distance == doctest::Approx(0.5));

    // Dual bound with phi(x) = x is tight for two Diracs.
    const DualBound lb = w1_dual_lower_bound(d0, d3, lipschitz_test_family(d0, d3, 0, 1));
    CHECK(lb.value == doctest::Approx(3.0));
    CHECK(w1_dual_lower_bound(split, split, lipschitz_test_family(split, split, 4, 1)).value == 0.0);
}

TEST_CASE("dilation doubles the distance to the original")
{
    const ParticleMeasure mu(1, {-1.0, 1.0}, {0.5, 0.5});
    const ParticleMeasure nu = push_forward(mu, [](std::span<const double> in, std::span<double> out) { out[0] = 2.0 * in[0]; });
    CHECK(w1(mu, nu) == doctest::Approx(1.0));
}

TEST_CASE("vector W1 adds species")
{
    const MeasureVector a({ParticleMeasure(1, {0.0}, {1.0}), ParticleMeasure(1, {0.0}, {1.0})});
    const MeasureVector b({ParticleMeasure(1, {1.0}, {1.0}), ParticleMeasure(1, {2.0}, {1.0})});
    CHECK(w1_vector(a, b) == doctest::Approx(3.0));
    CHECK(w1_vector(a, a) == 0.0);
    CHECK(w1_vector(MeasureVector({a[0]}), MeasureVector({b[0]})) == doctest::Approx(w1(a[0], b[0])));
}

TEST_CASE("quantile particles are close to the uniform density")
{
    // Oracle: a dense quantile discretization of the same density.
    auto uniform = [](std::size_t cells) {
        const double h = 1.0 / static_cast<double>(cells);
        return GridDensity::sample({GridAxis{0.5 * h, h, cells}}, [](std::span<const double>) { return 1.0; });
    };
    const GridDensity g = uniform(2000);
    const ParticleMeasure dense = particles_from_density(g, 20000, DiscretizationScheme::quantile_1d);
    for (std::size_t n : {5, 20, 100}) {
        const ParticleMeasure p = particles_from_density(g, n, DiscretizationScheme::quantile_1d);
        CHECK(w1_1d(p, dense) <= 1.0 / (2.0 * static_cast<double>(n)));
    }
}
