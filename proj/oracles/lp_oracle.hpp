#pragma once

#include <cstddef>
#include <vector>

namespace oracle {

// Dense two-phase simplex with Bland's rule for
//   min c.x  s.t.  A x = b, x >= 0   (A row-major, rows x cols).
// Only meant for tiny problems in tests.
struct LpResult
{
    bool feasible = false;
    double objective = 0.0;
    std::vector<double> x;
};

LpResult solve_lp(std::size_t rows, std::size_t cols, std::vector<double> a, std::vector<double> b,
                  const std::vector<double>& c);

// W1 between weighted point sets (flat positions, dimension d) through the
// transportation LP.
double transport_lp(std::size_t d, const std::vector<double>& xs, const std::vector<double>& wx,
                    const std::vector<double>& ys, const std::vector<double>& wy);

// Principal branch of Lambert W for w >= 0 (Newton on w e^w = z).
double lambert_w(double z);

}  // namespace oracle
