#pragma once

#include <nonlocal/measures.hpp>

#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace nonlocal {

// Convolution kernel eta(t, x) with its certified sup norm and Lipschitz
// constant in x. The constants are part of the type; every stability constant
// downstream is built from them.
class Kernel
{
public:
    using Function = std::function<double(double t, std::span<const double> x)>;

    Kernel() = default;
    Kernel(std::size_t dim, Function f, double sup_bound, double lip_x, std::string label = "custom");

    std::size_t dim() const noexcept { return dim_; }
    double operator()(double t, std::span<const double> x) const { return f_(t, x); }
    double sup_bound() const noexcept { return sup_; }
    double lip_x() const noexcept { return lip_; }
    const std::string& label() const noexcept { return label_; }

    // c * eta with metadata scaled by |c|.
    Kernel scaled(double c) const;
    // Overrides the declared constants (used by configs and audit tests).
    Kernel with_metadata(double sup_bound, double lip_x) const;

private:
    std::size_t dim_ = 1;
    Function f_;
    double sup_ = 0.0;
    double lip_ = 0.0;
    std::string label_;
};

Kernel operator+(const Kernel& a, const Kernel& b);

// Row-major k x k matrix of kernels eta^{ij}.
class KernelMatrix
{
public:
    KernelMatrix() = default;
    KernelMatrix(std::size_t k, std::vector<Kernel> entries);
    static KernelMatrix diagonal_constant(std::size_t k, std::size_t dim, double c);

    std::size_t size() const noexcept { return k_; }
    std::size_t dim() const noexcept { return entries_.front().dim(); }
    const Kernel& operator()(std::size_t i, std::size_t j) const noexcept { return entries_[i * k_ + j]; }
    Kernel& operator()(std::size_t i, std::size_t j) noexcept { return entries_[i * k_ + j]; }

    // sum_j Lip(eta^{ij}); with the norm 1 on R^k this bounds the Lipschitz
    // constant of x -> eta^i * rho per unit total mass.
    double row_lip(std::size_t i) const noexcept;
    // max_i row_lip(i).
    double lip_x() const noexcept;
    // max_j sup(eta^{ij}); times the total mass it bounds |eta^i * rho|_1.
    double row_sup(std::size_t i) const noexcept;
    double sup_bound() const noexcept;

    // Kernel column j multiplied by scales[j].
    KernelMatrix scale_columns(std::span<const double> scales) const;

private:
    std::size_t k_ = 0;
    std::vector<Kernel> entries_;
};

// Library kernels. Radial profiles in |x| with scale s and height h:
//   tent        h * max(0, 1 - |x|/s)                 lip = h/s
//   bump-poly   h * max(0, 1 - |x|^2/s^2)^2           lip = 8h / (3 sqrt(3) s)
//   cosine-lobe h * (1 + cos(pi |x|/s))/2 on |x| < s  lip = pi h / (2 s)
//   constant    h                                     lip = 0
struct KernelParams
{
    double scale = 1.0;
    double height = 1.0;
};

Kernel kernel_library(const std::string& name, std::size_t dim, const KernelParams& params);

// Sum_m w_m eta(t, x - x_m).
double convolve(const ParticleMeasure& mu, const Kernel& eta, double t, std::span<const double> x);

// Component j is convolve(rho^j, row[j], t, x).
void convolve_vector(const MeasureVector& rho, std::span<const Kernel* const> row, double t,
                     std::span<const double> x, std::span<double> out);
std::vector<double> convolve_vector(const MeasureVector& rho, const KernelMatrix& eta,
                                    std::size_t row, double t, std::span<const double> x);

}  // namespace nonlocal
