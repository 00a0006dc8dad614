#pragma once

#include <nonlocal/kernels.hpp>
#include <nonlocal/measures.hpp>

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace nonlocal {

// V(t, x, r) : R+ x R^d x R^k -> R^d with declared sup norm (valid on the
// r-ball |r|_1 <= r_ball) and Lipschitz constants in x (Euclidean) and r (norm 1).
class VelocityField
{
public:
    using Function = std::function<void(double t, std::span<const double> x,
                                        std::span<const double> r, std::span<double> out)>;

    VelocityField() = default;
    VelocityField(std::size_t dim, std::size_t k, Function f, double sup_bound, double lip_x,
                  double lip_r, std::string label = "custom");

    std::size_t dim() const noexcept { return dim_; }
    std::size_t k() const noexcept { return k_; }
    void operator()(double t, std::span<const double> x, std::span<const double> r,
                    std::span<double> out) const
    {
        f_(t, x, r, out);
    }
    std::vector<double> operator()(double t, std::span<const double> x, std::span<const double> r) const;

    double sup_bound() const noexcept { return sup_; }
    double lip_x() const noexcept { return lip_x_; }
    double lip_r() const noexcept { return lip_r_; }
    const std::string& label() const noexcept { return label_; }

    VelocityField with_metadata(double sup_bound, double lip_x, double lip_r) const;

private:
    std::size_t dim_ = 1;
    std::size_t k_ = 1;
    Function f_;
    double sup_ = 0.0;
    double lip_x_ = 0.0;
    double lip_r_ = 0.0;
    std::string label_;
};

VelocityField operator+(const VelocityField& a, const VelocityField& b);

// Scalar law with its sup norm and Lipschitz constant, e.g. a speed law v(s).
struct ScalarLaw
{
    std::function<double(double)> f;
    double sup = 0.0;
    double lip = 0.0;
};

// Bounded Lipschitz direction field x -> vdir(x).
struct DirectionField
{
    std::function<void(std::span<const double>, std::span<double>)> f;
    std::size_t dim = 1;
    double sup = 0.0;
    double lip = 0.0;
};

// v(s) = vmax * clamp(1 - s / rho_max, 0, 1).
ScalarLaw linear_speed_law(double vmax, double rho_max);
DirectionField constant_direction(std::vector<double> direction);
// (target - x) / max(|target - x|, smoothing): unit speed towards the target,
// slowing linearly inside the smoothing radius.
DirectionField target_direction(std::vector<double> target, double smoothing);

// Gallery primitives. Each is one species' field with an r-argument in R^k.
VelocityField zero_velocity(std::size_t dim, std::size_t k);
VelocityField constant_drift(std::vector<double> drift, std::size_t k);
// A x + b, with x radially clamped to the ball of the given radius so that the
// field stays bounded; exact inside the ball. matrix is d x d row-major.
VelocityField linear_local(std::size_t dim, std::size_t k, std::vector<double> matrix,
                           std::vector<double> offset, double radius);
// V(r) = sum_j r_j in one dimension; sup bound is declared on |r|_1 <= r_ball.
VelocityField sedimentation_velocity(std::size_t k, double r_ball);
// V = v(sum_j r_j) * vdir(x).
// V = drift + M r with M a d x k row-major matrix; Lip_r is the largest
// Euclidean column norm (r carries the norm 1).
VelocityField affine_in_r(std::vector<double> drift, std::vector<double> coupling, std::size_t k,
                          double r_ball);
VelocityField pedestrian_velocity(std::size_t k, const ScalarLaw& speed, const DirectionField& dir);

// Right-hand side of the full system: one field per species plus the kernel
// matrix. Species flagged as Dirac carry exactly one unit-weight particle.
class VelocityModel
{
public:
    VelocityModel() = default;
    VelocityModel(std::vector<VelocityField> fields, KernelMatrix kernels,
                  std::vector<bool> dirac = {});

    std::size_t dim() const noexcept { return fields_.front().dim(); }
    std::size_t k() const noexcept { return fields_.size(); }
    const VelocityField& field(std::size_t i) const noexcept { return fields_[i]; }
    const std::vector<VelocityField>& fields() const noexcept { return fields_; }
    const KernelMatrix& kernels() const noexcept { return kernels_; }
    bool is_dirac(std::size_t i) const noexcept { return dirac_[i]; }
    const std::vector<bool>& dirac_mask() const noexcept { return dirac_; }

    // Max over species of the declared constants.
    double lip_x() const noexcept;
    double lip_r() const noexcept;
    double sup_bound() const noexcept;

    VelocityModel with_kernels(KernelMatrix kernels) const;
    VelocityModel with_fields(std::vector<VelocityField> fields) const;

private:
    std::vector<VelocityField> fields_;
    KernelMatrix kernels_;
    std::vector<bool> dirac_;
};

// V^i(t, x, eta^i * rho(x)).
std::vector<double> eval_nonlocal_velocity(const VelocityModel& model, const MeasureVector& rho,
                                           std::size_t species, double t, std::span<const double> x);
// Allocation-free form used by the particle kernels.
void eval_nonlocal_velocity(const VelocityModel& model, const MeasureVector& rho,
                            std::size_t species, double t, std::span<const double> x,
                            std::span<double> out);

VelocityModel pedestrian_field(const ScalarLaw& speed, const DirectionField& dir, const Kernel& eta);
// mass is the total mass the model will transport; it fixes the r-ball.
VelocityModel sedimentation_field(const Kernel& eta, double mass);

// Couples density species with Dirac species (single unit particles). fields
// holds V^i for density species and Phi^j for Dirac species; the kernel
// column of a Dirac species j plays the role of lambda^{.j}, so that
// lambda^{ij}(x - p^j) enters the r-argument of every field.
VelocityModel dirac_coupling_field(std::vector<VelocityField> fields, KernelMatrix kernels,
                                   std::vector<bool> dirac, const MeasureVector& initial);
void validate_species(const VelocityModel& model, const MeasureVector& rho);

// Lip_x(V) + Lip_r(V) Lip_x(eta) mass.
double lipschitz_bound_b(double lip_x_v, double lip_r_v, double lip_x_eta, double mass) noexcept;
// Max over species i of the same expression with the row-i kernel constant.
double lipschitz_bound_b(const VelocityModel& model, double mass) noexcept;

struct AuditBox
{
    std::vector<double> lo;
    std::vector<double> hi;
    double r_ball = 1.0;
    double t_max = 1.0;
};

struct AuditResult
{
    bool ok = true;
    std::string what;     // which declaration failed
    std::string witness;  // the sampled arguments that exceeded it
    double declared = 0.0;
    double observed = 0.0;
};

// Samples the declared sup / Lipschitz constants of a field or kernel. Both
// well separated and nearby pairs are drawn so local slopes are seen.
AuditResult audit_velocity(const VelocityField& field, const AuditBox& box, std::size_t samples,
                           std::uint64_t seed);
AuditResult audit_kernel(const Kernel& kernel, const AuditBox& box, std::size_t samples,
                         std::uint64_t seed);

}  // namespace nonlocal
