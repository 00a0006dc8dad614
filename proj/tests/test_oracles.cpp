#include <doctest.h>

#include "lp_oracle.hpp"

#include <cmath>

TEST_CASE("simplex solves a small LP")
{
    // min -x - y  s.t. x + 2y + s1 = 4, 3x + y + s2 = 6: optimum at (1.6, 1.2).
    const auto r = oracle::solve_lp(2, 4, {1, 2, 1, 0, 3, 1, 0, 1}, {4, 6}, {-1, -1, 0, 0});
    REQUIRE(r.feasible);
    CHECK(r.objective == doctest::Approx(-2.8));
    CHECK(r.x[0] == doctest::Approx(1.6));
    CHECK(r.x[1] == doctest::Approx(1.2));
}

TEST_CASE("simplex detects infeasibility")
{
    const auto r = oracle::solve_lp(2, 1, {1, 1}, {1, 2}, {1});
    CHECK_FALSE(r.feasible);
}

TEST_CASE("transport LP on a known instance")
{
    // Points 0, 1 against 0.5 in 1-D: every unit moves 0.5.
    CHECK(oracle::transport_lp(1, {0.0, 1.0}, {0.5, 0.5}, {0.5}, {1.0}) == doctest::Approx(0.5));
}

TEST_CASE("lambert w")
{
    CHECK(oracle::lambert_w(0.0) == 0.0);
    CHECK(oracle::lambert_w(std::exp(1.0)) == doctest::Approx(1.0));
    for (double z : {0.1, 0.5, 3.0, 100.0}) {
        const double w = oracle::lambert_w(z);
        CHECK(w * std::exp(w) == doctest::Approx(z).epsilon(1e-13));
    }
}
