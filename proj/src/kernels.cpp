#include <nonlocal/kernels.hpp>

#include <nonlocal/error.hpp>

#include <array>
#include <cmath>
#include <numbers>

namespace nonlocal {

namespace {

double norm(std::span<const double> x) noexcept
{
    double s = 0.0;
    for (double v : x) s += v * v;
    return std::sqrt(s);
}

}  // namespace

Kernel::Kernel(std::size_t dim, Function f, double sup_bound, double lip_x, std::string label)
    : dim_(dim), f_(std::move(f)), sup_(sup_bound), lip_(lip_x), label_(std::move(label))
{
    if (!f_) throw Error("kernel: empty function");
    if (!(sup_bound >= 0.0) || !(lip_x >= 0.0))
        throw Error("kernel: sup bound and Lipschitz constant must be nonnegative");
}

Kernel Kernel::scaled(double c) const
{
    auto f = f_;
    return Kernel(dim_, [f, c](double t, std::span<const double> x) { return c * f(t, x); },
                  std::abs(c) * sup_, std::abs(c) * lip_, label_);
}

Kernel Kernel::with_metadata(double sup_bound, double lip_x) const
{
    Kernel k = *this;
    k.sup_ = sup_bound;
    k.lip_ = lip_x;
    return k;
}

Kernel operator+(const Kernel& a, const Kernel& b)
{
    if (a.dim() != b.dim()) throw Error("kernel sum: dimension mismatch");
    return Kernel(
        a.dim(), [a, b](double t, std::span<const double> x) { return a(t, x) + b(t, x); },
        a.sup_bound() + b.sup_bound(), a.lip_x() + b.lip_x(), a.label() + "+" + b.label());
}

KernelMatrix::KernelMatrix(std::size_t k, std::vector<Kernel> entries)
    : k_(k), entries_(std::move(entries))
{
    if (k == 0 || entries_.size() != k * k)
        throw Error("kernel matrix: expected " + std::to_string(k * k) + " entries");
    for (const auto& e : entries_)
        if (e.dim() != entries_.front().dim()) throw Error("kernel matrix: mixed dimensions");
}

KernelMatrix KernelMatrix::diagonal_constant(std::size_t k, std::size_t dim, double c)
{
    std::vector<Kernel> entries;
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j)
            entries.push_back(kernel_library("constant", dim, {1.0, i == j ? c : 0.0}));
    return KernelMatrix(k, std::move(entries));
}

double KernelMatrix::row_lip(std::size_t i) const noexcept
{
    double s = 0.0;
    for (std::size_t j = 0; j < k_; ++j) s += (*this)(i, j).lip_x();
    return s;
}

double KernelMatrix::lip_x() const noexcept
{
    double m = 0.0;
    for (std::size_t i = 0; i < k_; ++i) m = std::max(m, row_lip(i));
    return m;
}

double KernelMatrix::row_sup(std::size_t i) const noexcept
{
    double m = 0.0;
    for (std::size_t j = 0; j < k_; ++j) m = std::max(m, (*this)(i, j).sup_bound());
    return m;
}

double KernelMatrix::sup_bound() const noexcept
{
    double m = 0.0;
    for (std::size_t i = 0; i < k_; ++i) m = std::max(m, row_sup(i));
    return m;
}

KernelMatrix KernelMatrix::scale_columns(std::span<const double> scales) const
{
    if (scales.size() != k_) throw Error("kernel matrix: scale vector has wrong length");
    std::vector<Kernel> out;
    out.reserve(entries_.size());
    for (std::size_t i = 0; i < k_; ++i)
        for (std::size_t j = 0; j < k_; ++j)
            out.push_back(scales[j] == 1.0 ? (*this)(i, j) : (*this)(i, j).scaled(scales[j]));
    return KernelMatrix(k_, std::move(out));
}

Kernel kernel_library(const std::string& name, std::size_t dim, const KernelParams& params)
{
    const double s = params.scale;
    const double h = params.height;
    if (name == "constant") {
        // A zero constant is allowed so that block matrices can switch off couplings.
        if (!(h >= 0.0)) throw Error("kernel 'constant': height must be nonnegative");
        return Kernel(dim, [h](double, std::span<const double>) { return h; }, h, 0.0, "constant");
    }
    if (!(s > 0.0) || !(h > 0.0))
        throw Error("kernel '" + name + "': scale and height must be positive");
    if (name == "tent") {
        return Kernel(
            dim,
            [s, h](double, std::span<const double> x) { return h * std::max(0.0, 1.0 - norm(x) / s); },
            h, h / s, "tent");
    }
    if (name == "bump-poly") {
        // |d/du (1-u^2)^2| = 4u(1-u^2), maximal at u = 1/sqrt(3).
        const double lip = 8.0 * h / (3.0 * std::sqrt(3.0) * s);
        return Kernel(
            dim,
            [s, h](double, std::span<const double> x) {
                double q = 0.0;
                for (double v : x) q += v * v;
                const double u = 1.0 - q / (s * s);
                return u > 0.0 ? h * u * u : 0.0;
            },
            h, lip, "bump-poly");
    }
    if (name == "cosine-lobe") {
        return Kernel(
            dim,
            [s, h](double, std::span<const double> x) {
                const double r = norm(x);
                return r < s ? 0.5 * h * (1.0 + std::cos(std::numbers::pi * r / s)) : 0.0;
            },
            h, std::numbers::pi * h / (2.0 * s), "cosine-lobe");
    }
    throw Error("unknown kernel '" + name + "'");
}

double convolve(const ParticleMeasure& mu, const Kernel& eta, double t, std::span<const double> x)
{
    const std::size_t d = mu.dim();
    std::array<double, kMaxDim> diff{};
    std::span<const double> dspan(diff.data(), d);
    double acc = 0.0;
    for (std::size_t m = 0; m < mu.size(); ++m) {
        const auto p = mu.position(m);
        for (std::size_t a = 0; a < d; ++a) diff[a] = x[a] - p[a];
        acc += mu.weight(m) * eta(t, dspan);
    }
    return acc;
}

void convolve_vector(const MeasureVector& rho, std::span<const Kernel* const> row, double t,
                     std::span<const double> x, std::span<double> out)
{
    for (std::size_t j = 0; j < rho.species_count(); ++j) out[j] = convolve(rho[j], *row[j], t, x);
}

std::vector<double> convolve_vector(const MeasureVector& rho, const KernelMatrix& eta,
                                    std::size_t row, double t, std::span<const double> x)
{
    if (eta.size() != rho.species_count()) throw Error("convolve_vector: species count mismatch");
    std::vector<double> out(eta.size());
    for (std::size_t j = 0; j < eta.size(); ++j) out[j] = convolve(rho[j], eta(row, j), t, x);
    return out;
}

}  // namespace nonlocal
