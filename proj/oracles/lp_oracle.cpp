#include "lp_oracle.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace oracle {

namespace {

constexpr double kEps = 1e-12;

struct Tableau
{
    std::size_t rows, cols;  // constraint rows, columns excluding rhs
    std::vector<double> t;   // (rows + 1) x (cols + 1), last row = objective
    std::vector<std::size_t> basis;

    double& at(std::size_t r, std::size_t c) { return t[r * (cols + 1) + c]; }

    void pivot(std::size_t pr, std::size_t pc)
    {
        const double p = at(pr, pc);
        for (std::size_t c = 0; c <= cols; ++c) at(pr, c) /= p;
        for (std::size_t r = 0; r <= rows; ++r) {
            if (r == pr) continue;
            const double f = at(r, pc);
            if (f == 0.0) continue;
            for (std::size_t c = 0; c <= cols; ++c) at(r, c) -= f * at(pr, c);
        }
        basis[pr] = pc;
    }

    // Bland: smallest entering index with negative reduced cost, ratio test
    // ties broken by smallest basic index. Columns >= limit never enter.
    bool run(std::size_t limit)
    {
        for (int guard = 0; guard < 100000; ++guard) {
            std::size_t enter = cols;
            for (std::size_t c = 0; c < limit; ++c)
                if (at(rows, c) < -kEps) {
                    enter = c;
                    break;
                }
            if (enter == cols) return true;
            std::size_t leave = rows;
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t r = 0; r < rows; ++r) {
                const double a = at(r, enter);
                if (a <= kEps) continue;
                const double ratio = at(r, cols) / a;
                if (ratio < best - kEps || (std::abs(ratio - best) <= kEps && leave < rows && basis[r] < basis[leave])) {
                    best = ratio;
                    leave = r;
                }
            }
            if (leave == rows) throw std::runtime_error("lp oracle: unbounded");
            pivot(leave, enter);
        }
        throw std::runtime_error("lp oracle: iteration limit");
    }
};

}  // namespace

LpResult solve_lp(std::size_t rows, std::size_t cols, std::vector<double> a, std::vector<double> b,
                  const std::vector<double>& c)
{
    for (std::size_t r = 0; r < rows; ++r)
        if (b[r] < 0.0) {
            b[r] = -b[r];
            for (std::size_t j = 0; j < cols; ++j) a[r * cols + j] = -a[r * cols + j];
        }
    // Phase 1 over [x | artificials].
    Tableau tab{rows, cols + rows, {}, {}};
    tab.t.assign((rows + 1) * (tab.cols + 1), 0.0);
    tab.basis.resize(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t j = 0; j < cols; ++j) tab.at(r, j) = a[r * cols + j];
        tab.at(r, cols + r) = 1.0;
        tab.at(r, tab.cols) = b[r];
        tab.basis[r] = cols + r;
    }
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t j = 0; j <= tab.cols; ++j)
            if (j < cols || j == tab.cols) tab.at(rows, j) -= tab.at(r, j);
    tab.run(tab.cols);
    LpResult res;
    if (-tab.at(rows, tab.cols) > 1e-9) return res;
    res.feasible = true;

    // Drive artificials out of the basis; rows where that fails are redundant.
    for (std::size_t r = 0; r < rows; ++r) {
        if (tab.basis[r] < cols) continue;
        for (std::size_t j = 0; j < cols; ++j)
            if (std::abs(tab.at(r, j)) > 1e-9) {
                tab.pivot(r, j);
                break;
            }
    }

    // Phase 2 objective.
    for (std::size_t j = 0; j <= tab.cols; ++j) tab.at(rows, j) = 0.0;
    for (std::size_t j = 0; j < cols; ++j) tab.at(rows, j) = c[j];
    for (std::size_t r = 0; r < rows; ++r) {
        const std::size_t bj = tab.basis[r];
        if (bj >= cols) continue;
        const double f = tab.at(rows, bj);
        if (f == 0.0) continue;
        for (std::size_t j = 0; j <= tab.cols; ++j) tab.at(rows, j) -= f * tab.at(r, j);
    }
    tab.run(cols);
    res.x.assign(cols, 0.0);
    for (std::size_t r = 0; r < rows; ++r)
        if (tab.basis[r] < cols) res.x[tab.basis[r]] = tab.at(r, tab.cols);
    res.objective = 0.0;
    for (std::size_t j = 0; j < cols; ++j) res.objective += c[j] * res.x[j];
    return res;
}

double transport_lp(std::size_t d, const std::vector<double>& xs, const std::vector<double>& wx,
                    const std::vector<double>& ys, const std::vector<double>& wy)
{
    const std::size_t n = wx.size(), m = wy.size();
    const std::size_t rows = n + m, cols = n * m;
    std::vector<double> a(rows * cols, 0.0), b(rows), c(cols);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < d; ++k) {
                const double diff = xs[i * d + k] - ys[j * d + k];
                s += diff * diff;
            }
            c[i * m + j] = std::sqrt(s);
            a[i * cols + i * m + j] = 1.0;
            a[(n + j) * cols + i * m + j] = 1.0;
        }
    for (std::size_t i = 0; i < n; ++i) b[i] = wx[i];
    for (std::size_t j = 0; j < m; ++j) b[n + j] = wy[j];
    const LpResult r = solve_lp(rows, cols, std::move(a), std::move(b), c);
    if (!r.feasible) throw std::runtime_error("transport lp infeasible");
    return r.objective;
}

double lambert_w(double z)
{
    if (z < 0.0) throw std::domain_error("lambert_w: z must be nonnegative");
    double w = std::log1p(z);
    for (int it = 0; it < 100; ++it) {
        const double e = std::exp(w);
        const double f = w * e - z;
        const double step = f / (e * (w + 1.0));
        w -= step;
        if (std::abs(step) < 1e-16 * std::max(1.0, std::abs(w))) break;
    }
    return w;
}

}  // namespace oracle
