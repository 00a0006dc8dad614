#include <doctest.h>

#include <nonlocal/error.hpp>
#include <nonlocal/particle_kernels.hpp>
#include <nonlocal/velocity.hpp>

#include <cmath>
#include <cstdlib>
#include <random>

using namespace nonlocal;

TEST_CASE("affine field: values and constants")
{
    // d = 2, k = 2, columns (3, 4) and (1, 0).
    const VelocityField v = affine_in_r({1.0, 0.0}, {3.0, 1.0, 4.0, 0.0}, 2, 2.0);
    const double x[2] = {0.0, 0.0}, r[2] = {1.0, -1.0};
    double out[2];
    v(0.0, x, r, out);
    CHECK(out[0] == doctest::Approx(3.0));
    CHECK(out[1] == doctest::Approx(4.0));
    CHECK(v.lip_r() == doctest::Approx(5.0));
    CHECK(v.lip_x() == 0.0);
    CHECK(v.sup_bound() == doctest::Approx(1.0 + 5.0 * 2.0));
    CHECK_THROWS_AS(affine_in_r({0.0}, {1.0, 2.0, 3.0}, 2, 1.0), Error);
}

TEST_CASE("sedimentation velocity sums r")
{
    const VelocityField v = sedimentation_velocity(2, 3.0);
    const double x = 5.0, r[2] = {0.25, 0.5};
    double out = 0.0;
    v(0.0, std::span<const double>(&x, 1), r, std::span<double>(&out, 1));
    CHECK(out == doctest::Approx(0.75));
    CHECK(v.lip_r() == doctest::Approx(1.0));
}

TEST_CASE("pedestrian speed law saturates")
{
    const ScalarLaw law = linear_speed_law(2.0, 4.0);
    CHECK(law.f(0.0) == 2.0);
    CHECK(law.f(2.0) == doctest::Approx(1.0));
    CHECK(law.f(8.0) == 0.0);
    CHECK(law.lip == doctest::Approx(0.5));
    const DirectionField dir = target_direction({1.0, 0.0}, 0.5);
    const double far[2] = {-3.0, 0.0}, near[2] = {0.75, 0.0};
    double out[2];
    dir.f(far, out);
    CHECK(out[0] == doctest::Approx(1.0));
    dir.f(near, out);
    CHECK(out[0] == doctest::Approx(0.5));
}

TEST_CASE("lipschitz bound combines field and kernel constants")
{
    CHECK(lipschitz_bound_b(1.0, 2.0, 3.0, 0.5) == doctest::Approx(1.0 + 2.0 * 3.0 * 0.5));
    const VelocityModel m = sedimentation_field(kernel_library("tent", 1, {0.5, 1.0}), 2.0);
    CHECK(lipschitz_bound_b(m, 2.0) == doctest::Approx(0.0 + 1.0 * 2.0 * 2.0));
}

TEST_CASE("nonlocal velocity evaluates the convolution")
{
    const VelocityModel m = sedimentation_field(kernel_library("tent", 1, {1.0, 1.0}), 1.0);
    const MeasureVector rho({ParticleMeasure(1, {0.0, 0.5}, {0.5, 0.5})});
    const double x = 0.25;
    const auto v = eval_nonlocal_velocity(m, rho, 0, 0.0, std::span<const double>(&x, 1));
    CHECK(v[0] == doctest::Approx(0.75));
}

TEST_CASE("audit flags an understated constant")
{
    const AuditBox box{{-1.0}, {1.0}, 1.0, 1.0};
    const VelocityField honest = linear_local(1, 1, {-2.0}, {0.0}, 5.0);
    CHECK(audit_velocity(honest, box, 2000, 3).ok);
    const VelocityField lying = honest.with_metadata(honest.sup_bound(), 0.5, 0.0);
    const AuditResult a = audit_velocity(lying, box, 2000, 3);
    CHECK_FALSE(a.ok);
    CHECK(a.observed > a.declared);
    const Kernel k = kernel_library("tent", 1, {0.5, 1.0});
    CHECK(audit_kernel(k, box, 2000, 3).ok);
    CHECK_FALSE(audit_kernel(k.with_metadata(0.5, 2.0), box, 2000, 3).ok);
}

TEST_CASE("dirac species must hold one unit particle")
{
    const KernelMatrix km = KernelMatrix::diagonal_constant(1, 1, 1.0);
    const MeasureVector bad({ParticleMeasure(1, {0.0, 1.0}, {0.5, 0.5})});
    CHECK_THROWS_AS(dirac_coupling_field({zero_velocity(1, 1)}, km, {true}, bad), Error);
}

TEST_CASE("parallel kernel reproduces the serial reference bit for bit")
{
    const VelocityModel m = pedestrian_field(linear_speed_law(1.0, 2.0), target_direction({3.0, 0.0}, 0.5),
                                             kernel_library("cosine-lobe", 2, {0.6, 1.0}));
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> pos(2 * 300), w(300, 1.0 / 300);
    for (double& p : pos) p = u(rng);
    const MeasureVector rho({ParticleMeasure(2, pos, w)});
    std::vector<double> a(pos.size()), b(pos.size());
    reference::point_velocities(m, rho, 0, 0.0, pos, a);
    for (int threads : {1, 2, 4}) {
        parallel::set_worker_limit(threads);
        parallel::point_velocities(m, rho, 0, 0.0, pos, b);
        CHECK(a == b);
    }
    parallel::set_worker_limit(0);
}

TEST_CASE("NONLOCAL_THREADS caps the worker count")
{
    setenv("NONLOCAL_THREADS", "3", 1);
    CHECK(parallel::apply_worker_limit_from_env() == 3);
    setenv("NONLOCAL_THREADS", "zero", 1);
    CHECK_THROWS_AS(parallel::apply_worker_limit_from_env(), Error);
    unsetenv("NONLOCAL_THREADS");
    parallel::set_worker_limit(0);
}

TEST_CASE("gallery examples")
{
    const double x[2] = {0.3, -0.7};
    double out[2];
    const double r0[1] = {0.0}, r1[1] = {1.0}, rq[1] = {0.25};
    zero_velocity(2, 1)(0.0, x, r0, out);
    CHECK(out[0] == 0.0);
    CHECK(out[1] == 0.0);

    // v(s) = max(0, 1 - s) with a fixed direction (1, 0).
    const VelocityField ped = pedestrian_velocity(1, linear_speed_law(1.0, 1.0), constant_direction({1.0, 0.0}));
    ped(0.0, x, r1, out);
    CHECK(out[0] == 0.0);
    ped(0.0, x, r0, out);
    CHECK(out[0] == 1.0);
    ped(0.0, x, rq, out);
    CHECK(out[0] == doctest::Approx(0.75));
    CHECK(out[1] == 0.0);

    const VelocityField sed = sedimentation_velocity(1, 1.0);
    const double r3[1] = {0.3};
    sed(0.0, x, r3, out);
    CHECK(out[0] == doctest::Approx(0.3));
}

TEST_CASE("sedimentation model on Diracs")
{
    const Kernel eta = kernel_library("bump-poly", 1, {1.0, 1.0});
    const VelocityModel m = sedimentation_field(eta, 1.0);
    const double p = 0.4;
    const MeasureVector dirac({ParticleMeasure::dirac(std::span<const double>(&p, 1))});
    CHECK(eval_nonlocal_velocity(m, dirac, 0, 0.0, std::span<const double>(&p, 1))[0] == doctest::Approx(1.0));
    // Two equal particles at +-a see the same velocity.
    const double a = 0.3, ma = -0.3;
    const MeasureVector pair({ParticleMeasure(1, {-a, a}, {0.5, 0.5})});
    CHECK(eval_nonlocal_velocity(m, pair, 0, 0.0, std::span<const double>(&a, 1))[0] ==
          doctest::Approx(eval_nonlocal_velocity(m, pair, 0, 0.0, std::span<const double>(&ma, 1))[0]));
}

TEST_CASE("constant kernels reduce to a local field")
{
    const VelocityModel m({affine_in_r({0.0}, {1.0, -2.0}, 2, 10.0), zero_velocity(1, 2)},
                          KernelMatrix(2, {kernel_library("constant", 1, {1.0, 2.0}), kernel_library("constant", 1, {1.0, 3.0}),
                                           kernel_library("constant", 1, {1.0, 0.0}), kernel_library("constant", 1, {1.0, 0.0})}));
    const MeasureVector rho({ParticleMeasure(1, {5.0}, {0.5}), ParticleMeasure(1, {-4.0, 1.0}, {1.0, 1.0})});
    const double x = 0.7;
    // r = (2 * 0.5, 3 * 2) = (1, 6), V = 1 - 12.
    CHECK(eval_nonlocal_velocity(m, rho, 0, 0.0, std::span<const double>(&x, 1))[0] == doctest::Approx(-11.0));
}

TEST_CASE("dirac coupling: prey outside the predator's reach is unaffected")
{
    // Prey pushed by lambda(x - p) with lambda a tent of radius 0.5; predator still.
    const KernelMatrix km(2, {kernel_library("constant", 1, {1.0, 0.0}), kernel_library("tent", 1, {0.5, 1.0}),
                              kernel_library("constant", 1, {1.0, 0.0}), kernel_library("constant", 1, {1.0, 0.0})});
    const double p = 0.0;
    const MeasureVector rho({ParticleMeasure(1, {0.2, 2.0}, {0.5, 0.5}), ParticleMeasure::dirac(std::span<const double>(&p, 1))});
    const VelocityModel m = dirac_coupling_field({affine_in_r({0.0}, {0.0, 1.0}, 2, 1.0), zero_velocity(1, 2)}, km,
                                                 {false, true}, rho);
    const double near = 0.2, far = 2.0;
    CHECK(eval_nonlocal_velocity(m, rho, 0, 0.0, std::span<const double>(&near, 1))[0] == doctest::Approx(0.6));
    CHECK(eval_nonlocal_velocity(m, rho, 0, 0.0, std::span<const double>(&far, 1))[0] == 0.0);
}

TEST_CASE("lipschitz bound examples")
{
    CHECK(lipschitz_bound_b(1.0, 2.0, 0.5, 1.0) == doctest::Approx(2.0));
    CHECK(lipschitz_bound_b(1.5, 0.0, 0.5, 1.0) == 1.5);
    CHECK(lipschitz_bound_b(1.5, 3.0, 0.0, 1.0) == 1.5);
}
