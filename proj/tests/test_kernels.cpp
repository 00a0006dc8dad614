#include <doctest.h>

#include <nonlocal/error.hpp>
#include <nonlocal/kernels.hpp>

#include <cmath>
#include <numbers>
#include <random>

using namespace nonlocal;

namespace {

// Largest difference quotient of a radial profile on a fine grid.
double sampled_slope(const Kernel& k, double range)
{
    double best = 0.0;
    const int n = 200000;
    double prev_x = -range, prev = k(0.0, std::span<const double>(&prev_x, 1));
    for (int i = 1; i <= n; ++i) {
        const double x = -range + 2.0 * range * i / n;
        const double v = k(0.0, std::span<const double>(&x, 1));
        best = std::max(best, std::abs(v - prev) / (x - prev_x));
        prev = v;
        prev_x = x;
    }
    return best;
}

}  // namespace

TEST_CASE("library kernel values")
{
    const double zero = 0.0, half = 0.5;
    const Kernel tent = kernel_library("tent", 1, {1.0, 2.0});
    CHECK(tent(0.0, std::span<const double>(&zero, 1)) == 2.0);
    CHECK(tent(0.0, std::span<const double>(&half, 1)) == doctest::Approx(1.0));
    const Kernel bump = kernel_library("bump-poly", 1, {1.0, 1.0});
    CHECK(bump(0.0, std::span<const double>(&half, 1)) == doctest::Approx(0.5625));
    const Kernel lobe = kernel_library("cosine-lobe", 1, {1.0, 1.0});
    CHECK(lobe(0.0, std::span<const double>(&half, 1)) == doctest::Approx(0.5));
    CHECK_THROWS_AS(kernel_library("nope", 1, {}), Error);
    CHECK_THROWS_AS(kernel_library("tent", 1, {0.0, 1.0}), Error);
}

TEST_CASE("declared Lipschitz constants are tight")
{
    for (const char* name : {"tent", "bump-poly", "cosine-lobe"}) {
        const Kernel k = kernel_library(name, 1, {0.5, 1.5});
        const double slope = sampled_slope(k, 1.0);
        CHECK(slope <= k.lip_x() * (1.0 + 1e-9));
        CHECK(slope >= k.lip_x() * 0.999);
    }
    const Kernel bump = kernel_library("bump-poly", 1, {2.0, 1.0});
    CHECK(bump.lip_x() == doctest::Approx(8.0 / (3.0 * std::sqrt(3.0) * 2.0)));
}

TEST_CASE("scaled and summed kernels carry metadata")
{
    const Kernel a = kernel_library("tent", 1, {1.0, 1.0});
    const Kernel b = kernel_library("constant", 1, {1.0, 0.5});
    const Kernel s = a.scaled(-2.0) + b;
    CHECK(s.sup_bound() == doctest::Approx(2.5));
    CHECK(s.lip_x() == doctest::Approx(2.0));
    const double x = 0.25;
    CHECK(s(0.0, std::span<const double>(&x, 1)) == doctest::Approx(-1.5 + 0.5));
}

TEST_CASE("convolution is a weighted sum")
{
    const Kernel k = kernel_library("tent", 1, {1.0, 1.0});
    ParticleMeasure mu(1, {0.0, 0.5}, {2.0, 1.0});
    const double x = 0.25;
    CHECK(convolve(mu, k, 0.0, std::span<const double>(&x, 1)) == doctest::Approx(2.0 * 0.75 + 0.75));
}

TEST_CASE("kernel matrix row constants and column scaling")
{
    const KernelMatrix m(2, {kernel_library("tent", 1, {1.0, 1.0}), kernel_library("tent", 1, {0.5, 1.0}),
                             kernel_library("constant", 1, {1.0, 3.0}), kernel_library("tent", 1, {1.0, 2.0})});
    CHECK(m.row_lip(0) == doctest::Approx(3.0));
    CHECK(m.row_lip(1) == doctest::Approx(2.0));
    CHECK(m.lip_x() == doctest::Approx(3.0));
    CHECK(m.row_sup(1) == doctest::Approx(3.0));
    const std::vector<double> scales{2.0, 0.5};
    const KernelMatrix s = m.scale_columns(scales);
    CHECK(s.row_lip(0) == doctest::Approx(2.0 + 1.0));
    CHECK(s(1, 0).sup_bound() == doctest::Approx(6.0));
    CHECK_THROWS_AS(KernelMatrix(2, {kernel_library("tent", 1, {})}), Error);
}

TEST_CASE("two dimensional kernels are radial")
{
    const Kernel k = kernel_library("cosine-lobe", 2, {1.0, 1.0});
    const double p[2] = {0.3, 0.4}, q[2] = {0.5, 0.0};
    CHECK(k(0.0, p) == doctest::Approx(k(0.0, q)));
    CHECK(k.lip_x() == doctest::Approx(std::numbers::pi / 2.0));
}

TEST_CASE("convolution examples")
{
    const Kernel tent = kernel_library("tent", 1, {1.0, 1.0});
    const double p = 0.5, x = 1.0, half = 0.5;
    CHECK(convolve(ParticleMeasure::dirac(std::span<const double>(&p, 1)), tent, 0.0, std::span<const double>(&x, 1)) ==
          doctest::Approx(0.5));
    const ParticleMeasure mu(1, {0.0, 1.0}, {0.25, 0.75});
    CHECK(convolve(mu, tent, 0.0, std::span<const double>(&half, 1)) == doctest::Approx(0.25 * 0.5 + 0.75 * 0.5));
    const Kernel c = kernel_library("constant", 1, {1.0, 2.5});
    CHECK(c.lip_x() == 0.0);
    for (double y : {-3.0, 0.0, 7.0}) CHECK(convolve(mu, c, 0.0, std::span<const double>(&y, 1)) == doctest::Approx(2.5));
    const double one = 1.0, zero = 0.0;
    CHECK(tent(0.0, std::span<const double>(&zero, 1)) == 1.0);
    CHECK(tent(0.0, std::span<const double>(&one, 1)) == 0.0);
}

TEST_CASE("vector convolution examples")
{
    const MeasureVector rho({ParticleMeasure(1, {0.0, 1.0}, {0.5, 0.5}), ParticleMeasure(1, {2.0}, {1.0})});
    const double x = 0.3;
    const KernelMatrix consts(2, {kernel_library("constant", 1, {1.0, 2.0}), kernel_library("constant", 1, {1.0, 5.0}),
                                  kernel_library("constant", 1, {1.0, 0.0}), kernel_library("constant", 1, {1.0, 0.0})});
    auto r = convolve_vector(rho, consts, 0, 0.0, std::span<const double>(&x, 1));
    CHECK(r[0] == doctest::Approx(2.0));
    CHECK(r[1] == doctest::Approx(5.0));
    r = convolve_vector(rho, consts, 1, 0.0, std::span<const double>(&x, 1));
    CHECK(r[0] == 0.0);
    CHECK(r[1] == 0.0);
    const Kernel tent = kernel_library("tent", 1, {1.0, 1.0});
    const MeasureVector single({rho[0]});
    CHECK(convolve_vector(single, KernelMatrix(1, {tent}), 0, 0.0, std::span<const double>(&x, 1))[0] ==
          doctest::Approx(convolve(rho[0], tent, 0.0, std::span<const double>(&x, 1))));
}

TEST_CASE("random property checks for library kernels")
{
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(-2.0, 2.0), w(0.1, 1.0);
    for (const char* name : {"tent", "bump-poly", "cosine-lobe", "constant"}) {
        const Kernel k = kernel_library(name, 2, {0.7, 1.3});
        for (int trial = 0; trial < 500; ++trial) {
            const double x[2] = {u(rng), u(rng)}, y[2] = {u(rng), u(rng)};
            const double dist = std::hypot(x[0] - y[0], x[1] - y[1]);
            CHECK(std::abs(k(0.0, x) - k(0.0, y)) <= k.lip_x() * dist + 1e-12);
            CHECK(std::abs(k(0.0, x)) <= k.sup_bound() + 1e-12);
        }
        // Linearity in the measure and Lipschitz propagation through convolution.
        std::vector<double> pa(8), pb(6), wa(4), wb(3);
        for (double& v : pa) v = u(rng);
        for (double& v : pb) v = u(rng);
        for (double& v : wa) v = w(rng);
        for (double& v : wb) v = w(rng);
        const ParticleMeasure a(2, pa, wa), b(2, pb, wb);
        const double x[2] = {0.1, -0.2}, y[2] = {0.3, 0.1};
        const double lhs = convolve(concatenate(a, b, 0.3, 1.7), k, 0.0, x);
        const double rhs = 0.3 * convolve(a, k, 0.0, x) + 1.7 * convolve(b, k, 0.0, x);
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
        CHECK(std::abs(convolve(a, k, 0.0, x) - convolve(a, k, 0.0, y)) <=
              k.lip_x() * total_mass(a) * std::hypot(x[0] - y[0], x[1] - y[1]) + 1e-12);
    }
}
