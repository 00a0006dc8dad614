#include <doctest.h>

#include <nonlocal/error.hpp>
#include <nonlocal/measures.hpp>

#include <cmath>

using namespace nonlocal;

TEST_CASE("particle measure stores flat positions")
{
    ParticleMeasure mu(2, {0.0, 1.0, 2.0, 3.0}, {0.25, 0.75});
    CHECK(mu.size() == 2);
    CHECK(mu.position(1)[0] == 2.0);
    CHECK(mu.position(1)[1] == 3.0);
    CHECK(total_mass(mu) == doctest::Approx(1.0));
}

TEST_CASE("particle measure rejects bad input")
{
    CHECK_THROWS_AS(ParticleMeasure(2, {0.0, 1.0, 2.0}, {1.0, 1.0}), Error);
    CHECK_THROWS_AS(ParticleMeasure(1, {0.0}, {0.0}), Error);
    CHECK_THROWS_AS(ParticleMeasure(1, {NAN}, {1.0}), Error);
    CHECK_THROWS_AS(ParticleMeasure(4), Error);
    ParticleMeasure mu(1, {0.0, 1.0}, {1.0, 1.0});
    CHECK_THROWS_AS(mu.set_positions({0.0}), Error);
}

TEST_CASE("push forward keeps weights")
{
    ParticleMeasure mu(1, {0.0, 1.0, 2.0}, {0.1, 0.2, 0.3});
    const ParticleMeasure nu = push_forward(mu, [](std::span<const double> in, std::span<double> out) {
        out[0] = 2.0 * in[0] + 1.0;
    });
    CHECK(nu.weights() == mu.weights());
    CHECK(nu.position(2)[0] == 5.0);
}

TEST_CASE("rescale to probability is undone by the masses")
{
    MeasureVector rho({ParticleMeasure(1, {0.0, 1.0}, {2.0, 2.0}), ParticleMeasure(1, {3.0}, {0.5})});
    const auto [p, masses] = rescale_to_probability(rho);
    CHECK(total_mass(p[0]) == doctest::Approx(1.0));
    CHECK(total_mass(p[1]) == doctest::Approx(1.0));
    CHECK(masses[0] == doctest::Approx(4.0));
    CHECK(masses[1] == doctest::Approx(0.5));
}

TEST_CASE("grid density integral, sup and interpolation")
{
    // f(x) = x on [0, 1] with 100 cells: rectangle rule on cell centres is exact.
    const GridAxis ax{0.005, 0.01, 100};
    const GridDensity g = GridDensity::sample({ax}, [](std::span<const double> x) { return x[0]; });
    CHECK(g.integral() == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(g.sup() == doctest::Approx(0.995));
    const double mid = 0.5;
    CHECK(g.interpolate(std::span<const double>(&mid, 1)) == doctest::Approx(0.5));
    const double outside = 2.0;
    CHECK(g.interpolate(std::span<const double>(&outside, 1)) == 0.0);
}

TEST_CASE("quantile discretization matches mass and mean")
{
    const GridAxis ax{0.0005, 0.001, 1000};
    const GridDensity g = GridDensity::sample({ax}, [](std::span<const double> x) { return 2.0 * x[0]; });
    const ParticleMeasure mu = particles_from_density(g, 200, DiscretizationScheme::quantile_1d);
    CHECK(mu.size() == 200);
    CHECK(total_mass(mu) == doctest::Approx(g.integral()).epsilon(1e-12));
    double mean = 0.0;
    for (std::size_t m = 0; m < mu.size(); ++m) mean += mu.weight(m) * mu.position(m)[0];
    // E[x] for density 2x on [0, 1] is 2/3.
    CHECK(mean == doctest::Approx(2.0 / 3.0).epsilon(1e-3));
}

TEST_CASE("cell midpoint discretization in two dimensions")
{
    const GridAxis ax{0.05, 0.1, 10};
    const GridDensity g = GridDensity::sample({ax, ax}, [](std::span<const double>) { return 1.0; });
    const ParticleMeasure mu = particles_from_density(g, 25, DiscretizationScheme::cell_midpoint);
    CHECK(total_mass(mu) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_THROWS_AS(particles_from_density(g, 10, DiscretizationScheme::quantile_1d), Error);
}

TEST_CASE("concatenate scales weights")
{
    ParticleMeasure a(1, {0.0}, {1.0}), b(1, {1.0, 2.0}, {1.0, 1.0});
    const ParticleMeasure c = concatenate(a, b, 2.0, 0.5);
    CHECK(c.size() == 3);
    CHECK(total_mass(c) == doctest::Approx(3.0));
}

TEST_CASE("measure vector needs consistent species")
{
    CHECK_THROWS_AS(MeasureVector(std::vector<ParticleMeasure>{}), Error);
    CHECK_THROWS_AS(MeasureVector({ParticleMeasure(1, {0.0}, {1.0}), ParticleMeasure(2, {0.0, 0.0}, {1.0})}), Error);
}

TEST_CASE("total mass examples")
{
    CHECK(total_mass(ParticleMeasure(1)) == 0.0);
    const double one = 1.0;
    CHECK(total_mass(ParticleMeasure::dirac(std::span<const double>(&one, 1))) == 1.0);
}

TEST_CASE("push forward examples")
{
    const ParticleMeasure mu(2, {0.0, 1.0, 2.0, 3.0}, {0.5, 1.5});
    const ParticleMeasure same = push_forward(mu, [](std::span<const double> in, std::span<double> out) {
        std::copy(in.begin(), in.end(), out.begin());
    });
    CHECK(same == mu);
    const ParticleMeasure moved = push_forward(mu, [](std::span<const double> in, std::span<double> out) {
        out[0] = in[0] + 1.0;
        out[1] = in[1] - 2.0;
    });
    CHECK(moved.position(1)[0] == 3.0);
    CHECK(moved.position(1)[1] == 1.0);
    CHECK(total_mass(moved) == total_mass(mu));
}

TEST_CASE("rescale examples")
{
    const double p = 0.0;
    const auto [a, sa] = rescale_to_probability(MeasureVector({ParticleMeasure::dirac(std::span<const double>(&p, 1), 3.0)}));
    CHECK(a[0].weight(0) == 1.0);
    CHECK(sa[0] == 3.0);
    const MeasureVector prob({ParticleMeasure(1, {0.0, 1.0}, {0.5, 0.5})});
    const auto [b, sb] = rescale_to_probability(prob);
    CHECK(b == prob);
    CHECK(sb[0] == 1.0);
}

namespace {

GridDensity uniform_unit(std::size_t cells)
{
    const double h = 1.0 / static_cast<double>(cells);
    return GridDensity::sample({GridAxis{0.5 * h, h, cells}}, [](std::span<const double>) { return 1.0; });
}

}  // namespace

TEST_CASE("quantile discretization of the uniform density")
{
    const ParticleMeasure two = particles_from_density(uniform_unit(1000), 2, DiscretizationScheme::quantile_1d);
    CHECK(two.position(0)[0] == doctest::Approx(0.25));
    CHECK(two.position(1)[0] == doctest::Approx(0.75));
    CHECK(two.weight(0) == doctest::Approx(0.5));

    const GridDensity sym = GridDensity::sample({GridAxis{-0.995, 0.01, 200}},
                                                [](std::span<const double> x) { return 1.0 - std::abs(x[0]); });
    const ParticleMeasure median = particles_from_density(sym, 1, DiscretizationScheme::quantile_1d);
    CHECK(median.position(0)[0] == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(median.weight(0) == doctest::Approx(sym.integral()));
}
