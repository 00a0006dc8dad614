#include <nonlocal/velocity.hpp>

#include <nonlocal/error.hpp>

#include <Eigen/SVD>

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <sstream>

namespace nonlocal {

namespace {

double norm2(std::span<const double> x) noexcept
{
    double s = 0.0;
    for (double v : x) s += v * v;
    return std::sqrt(s);
}

double norm1(std::span<const double> x) noexcept
{
    double s = 0.0;
    for (double v : x) s += std::abs(v);
    return s;
}

// Largest singular value of a d x d row-major matrix.
double spectral_norm(std::span<const double> a, std::size_t d)
{
    Eigen::MatrixXd m(d, d);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) m(i, j) = a[i * d + j];
    const double sigma = Eigen::JacobiSVD<Eigen::MatrixXd>(m).singularValues()(0);
    // Rounding guard so the declared constant stays an upper bound.
    return sigma * (1.0 + 1e-12);
}

std::string format_point(std::span<const double> x)
{
    std::ostringstream os;
    os.precision(10);
    os << '(';
    for (std::size_t i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
    os << ')';
    return os.str();
}

}  // namespace

VelocityField::VelocityField(std::size_t dim, std::size_t k, Function f, double sup_bound,
                             double lip_x, double lip_r, std::string label)
    : dim_(dim), k_(k), f_(std::move(f)), sup_(sup_bound), lip_x_(lip_x), lip_r_(lip_r),
      label_(std::move(label))
{
    if (dim == 0 || dim > kMaxDim) throw Error("velocity field: unsupported dimension");
    if (k == 0) throw Error("velocity field: r-argument must have at least one component");
    if (!f_) throw Error("velocity field: empty function");
    if (!(sup_bound >= 0.0) || !(lip_x >= 0.0) || !(lip_r >= 0.0))
        throw Error("velocity field: metadata must be nonnegative");
}

std::vector<double> VelocityField::operator()(double t, std::span<const double> x,
                                              std::span<const double> r) const
{
    std::vector<double> out(dim_);
    f_(t, x, r, out);
    return out;
}

VelocityField VelocityField::with_metadata(double sup_bound, double lip_x, double lip_r) const
{
    VelocityField v = *this;
    v.sup_ = sup_bound;
    v.lip_x_ = lip_x;
    v.lip_r_ = lip_r;
    return v;
}

VelocityField operator+(const VelocityField& a, const VelocityField& b)
{
    if (a.dim() != b.dim() || a.k() != b.k()) throw Error("velocity sum: shape mismatch");
    const std::size_t d = a.dim();
    return VelocityField(
        d, a.k(),
        [a, b, d](double t, std::span<const double> x, std::span<const double> r,
                  std::span<double> out) {
            std::array<double, kMaxDim> tmp{};
            a(t, x, r, out);
            b(t, x, r, std::span<double>(tmp.data(), d));
            for (std::size_t i = 0; i < d; ++i) out[i] += tmp[i];
        },
        a.sup_bound() + b.sup_bound(), a.lip_x() + b.lip_x(), a.lip_r() + b.lip_r(),
        a.label() + "+" + b.label());
}

ScalarLaw linear_speed_law(double vmax, double rho_max)
{
    if (!(vmax > 0.0) || !(rho_max > 0.0)) throw Error("speed law: vmax and rho_max must be positive");
    return {[vmax, rho_max](double s) { return vmax * std::clamp(1.0 - s / rho_max, 0.0, 1.0); },
            vmax, vmax / rho_max};
}

DirectionField constant_direction(std::vector<double> direction)
{
    const std::size_t d = direction.size();
    const double sup = norm2(direction);
    return {[direction](std::span<const double>, std::span<double> out) {
                std::copy(direction.begin(), direction.end(), out.begin());
            },
            d, sup, 0.0};
}

DirectionField target_direction(std::vector<double> target, double smoothing)
{
    if (!(smoothing > 0.0)) throw Error("target direction: smoothing radius must be positive");
    const std::size_t d = target.size();
    return {[target, smoothing, d](std::span<const double> x, std::span<double> out) {
                double n = 0.0;
                for (std::size_t a = 0; a < d; ++a) {
                    out[a] = target[a] - x[a];
                    n += out[a] * out[a];
                }
                const double scale = 1.0 / std::max(std::sqrt(n), smoothing);
                for (std::size_t a = 0; a < d; ++a) out[a] *= scale;
            },
            d, 1.0, 1.0 / smoothing};
}

VelocityField zero_velocity(std::size_t dim, std::size_t k)
{
    return VelocityField(
        dim, k,
        [](double, std::span<const double>, std::span<const double>, std::span<double> out) {
            std::fill(out.begin(), out.end(), 0.0);
        },
        0.0, 0.0, 0.0, "zero");
}

VelocityField constant_drift(std::vector<double> drift, std::size_t k)
{
    const double sup = norm2(drift);
    const std::size_t d = drift.size();
    return VelocityField(
        d, k,
        [drift](double, std::span<const double>, std::span<const double>, std::span<double> out) {
            std::copy(drift.begin(), drift.end(), out.begin());
        },
        sup, 0.0, 0.0, "constant-drift");
}

VelocityField linear_local(std::size_t dim, std::size_t k, std::vector<double> matrix,
                           std::vector<double> offset, double radius)
{
    if (matrix.size() != dim * dim) throw Error("linear-local: matrix must be d x d");
    if (offset.empty()) offset.assign(dim, 0.0);
    if (offset.size() != dim) throw Error("linear-local: offset must have d components");
    if (!(radius > 0.0)) throw Error("linear-local: radius must be positive");
    const double op = spectral_norm(matrix, dim);
    const double sup = op * radius + norm2(offset);
    return VelocityField(
        dim, k,
        [matrix, offset, radius, dim](double, std::span<const double> x, std::span<const double>,
                                      std::span<double> out) {
            const double n = norm2(x);
            const double clamp = n > radius ? radius / n : 1.0;
            for (std::size_t i = 0; i < dim; ++i) {
                double acc = offset[i];
                for (std::size_t j = 0; j < dim; ++j) acc += matrix[i * dim + j] * (x[j] * clamp);
                out[i] = acc;
            }
        },
        sup, op, 0.0, "linear-local");
}

VelocityField sedimentation_velocity(std::size_t k, double r_ball)
{
    return VelocityField(
        1, k,
        [](double, std::span<const double>, std::span<const double> r, std::span<double> out) {
            double s = 0.0;
            for (double v : r) s += v;
            out[0] = s;
        },
        r_ball, 0.0, 1.0, "sedimentation");
}

VelocityField affine_in_r(std::vector<double> drift, std::vector<double> coupling, std::size_t k,
                          double r_ball)
{
    const std::size_t d = drift.size();
    if (d == 0 || coupling.size() != d * k) throw Error("affine-r: coupling must be d x k");
    double lip_r = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
        double c = 0.0;
        for (std::size_t a = 0; a < d; ++a) c += coupling[a * k + j] * coupling[a * k + j];
        lip_r = std::max(lip_r, std::sqrt(c));
    }
    return VelocityField(
        d, k,
        [drift, coupling, d, k](double, std::span<const double>, std::span<const double> r,
                                std::span<double> out) {
            for (std::size_t a = 0; a < d; ++a) {
                double acc = drift[a];
                for (std::size_t j = 0; j < k; ++j) acc += coupling[a * k + j] * r[j];
                out[a] = acc;
            }
        },
        norm2(drift) + lip_r * r_ball, 0.0, lip_r, "affine-r");
}

VelocityField pedestrian_velocity(std::size_t k, const ScalarLaw& speed, const DirectionField& dir)
{
    const std::size_t d = dir.dim;
    return VelocityField(
        d, k,
        [speed, dir](double, std::span<const double> x, std::span<const double> r,
                     std::span<double> out) {
            double s = 0.0;
            for (double v : r) s += v;
            const double v = speed.f(s);
            dir.f(x, out);
            for (double& o : out) o *= v;
        },
        speed.sup * dir.sup, speed.sup * dir.lip, speed.lip * dir.sup, "pedestrian");
}

VelocityModel::VelocityModel(std::vector<VelocityField> fields, KernelMatrix kernels,
                             std::vector<bool> dirac)
    : fields_(std::move(fields)), kernels_(std::move(kernels)), dirac_(std::move(dirac))
{
    if (fields_.empty()) throw Error("velocity model: no species");
    if (kernels_.size() != fields_.size())
        throw Error("velocity model: kernel matrix size does not match species count");
    if (dirac_.empty()) dirac_.assign(fields_.size(), false);
    if (dirac_.size() != fields_.size()) throw Error("velocity model: dirac mask has wrong length");
    for (const auto& f : fields_) {
        if (f.dim() != fields_.front().dim()) throw Error("velocity model: mixed dimensions");
        if (f.k() != fields_.size())
            throw Error("velocity model: field '" + f.label() + "' expects r in R^"
                        + std::to_string(f.k()) + " but the system has "
                        + std::to_string(fields_.size()) + " species");
    }
    if (kernels_.dim() != fields_.front().dim())
        throw Error("velocity model: kernel dimension differs from field dimension");
}

double VelocityModel::lip_x() const noexcept
{
    double m = 0.0;
    for (const auto& f : fields_) m = std::max(m, f.lip_x());
    return m;
}

double VelocityModel::lip_r() const noexcept
{
    double m = 0.0;
    for (const auto& f : fields_) m = std::max(m, f.lip_r());
    return m;
}

double VelocityModel::sup_bound() const noexcept
{
    double m = 0.0;
    for (const auto& f : fields_) m = std::max(m, f.sup_bound());
    return m;
}

VelocityModel VelocityModel::with_kernels(KernelMatrix kernels) const
{
    return VelocityModel(fields_, std::move(kernels), dirac_);
}

VelocityModel VelocityModel::with_fields(std::vector<VelocityField> fields) const
{
    return VelocityModel(std::move(fields), kernels_, dirac_);
}

void eval_nonlocal_velocity(const VelocityModel& model, const MeasureVector& rho,
                            std::size_t species, double t, std::span<const double> x,
                            std::span<double> out)
{
    const std::size_t k = model.k();
    const std::size_t d = model.dim();
    std::array<double, kMaxDim> diff{};
    const std::span<const double> dspan(diff.data(), d);
    // Small fixed buffer covers desk-scale systems; larger k falls back to the heap.
    std::array<double, 16> rbuf{};
    std::vector<double> rheap;
    std::span<double> r(rbuf.data(), k);
    if (k > rbuf.size()) {
        rheap.assign(k, 0.0);
        r = rheap;
    }
    for (std::size_t j = 0; j < k; ++j) {
        const Kernel& eta = model.kernels()(species, j);
        const ParticleMeasure& mu = rho[j];
        double acc = 0.0;
        for (std::size_t m = 0; m < mu.size(); ++m) {
            const auto p = mu.position(m);
            for (std::size_t a = 0; a < d; ++a) diff[a] = x[a] - p[a];
            acc += mu.weight(m) * eta(t, dspan);
        }
        r[j] = acc;
    }
    model.field(species)(t, x, r, out);
}

std::vector<double> eval_nonlocal_velocity(const VelocityModel& model, const MeasureVector& rho,
                                           std::size_t species, double t, std::span<const double> x)
{
    if (rho.species_count() != model.k()) throw Error("velocity: species count mismatch");
    if (rho.dim() != model.dim() || x.size() != model.dim()) throw Error("velocity: dimension mismatch");
    std::vector<double> out(model.dim());
    eval_nonlocal_velocity(model, rho, species, t, x, out);
    return out;
}

VelocityModel pedestrian_field(const ScalarLaw& speed, const DirectionField& dir, const Kernel& eta)
{
    if (eta.dim() != dir.dim) throw Error("pedestrian field: kernel and direction dimensions differ");
    return VelocityModel({pedestrian_velocity(1, speed, dir)}, KernelMatrix(1, {eta}));
}

VelocityModel sedimentation_field(const Kernel& eta, double mass)
{
    if (eta.dim() != 1) throw Error("sedimentation field requires d = 1");
    return VelocityModel({sedimentation_velocity(1, mass * eta.sup_bound())}, KernelMatrix(1, {eta}));
}

void validate_species(const VelocityModel& model, const MeasureVector& rho)
{
    if (rho.species_count() != model.k())
        throw Error("model has " + std::to_string(model.k()) + " species but initial data has "
                    + std::to_string(rho.species_count()));
    if (rho.dim() != model.dim()) throw Error("model and initial data dimensions differ");
    for (std::size_t i = 0; i < model.k(); ++i) {
        if (!model.is_dirac(i)) continue;
        if (rho[i].size() != 1)
            throw Error("Dirac species " + std::to_string(i) + " must hold exactly one particle, has "
                        + std::to_string(rho[i].size()));
        if (rho[i].weight(0) != 1.0)
            throw Error("Dirac species " + std::to_string(i) + " must have unit weight");
    }
}

VelocityModel dirac_coupling_field(std::vector<VelocityField> fields, KernelMatrix kernels,
                                   std::vector<bool> dirac, const MeasureVector& initial)
{
    VelocityModel model(std::move(fields), std::move(kernels), std::move(dirac));
    validate_species(model, initial);
    return model;
}

double lipschitz_bound_b(double lip_x_v, double lip_r_v, double lip_x_eta, double mass) noexcept
{
    return lip_x_v + lip_r_v * lip_x_eta * mass;
}

double lipschitz_bound_b(const VelocityModel& model, double mass) noexcept
{
    double m = 0.0;
    for (std::size_t i = 0; i < model.k(); ++i) {
        const auto& f = model.field(i);
        m = std::max(m, lipschitz_bound_b(f.lip_x(), f.lip_r(), model.kernels().row_lip(i), mass));
    }
    return m;
}

namespace {

constexpr double kAuditRelTol = 1e-8;
constexpr double kAuditAbsTol = 1e-12;

struct Sampler
{
    std::mt19937_64 rng;
    std::uniform_real_distribution<double> unit{0.0, 1.0};

    double uniform(double lo, double hi) { return lo + (hi - lo) * unit(rng); }

    void point(const AuditBox& box, std::span<double> x)
    {
        for (std::size_t a = 0; a < x.size(); ++a) x[a] = uniform(box.lo[a], box.hi[a]);
    }

    // Uniform direction scaled into the l1 ball of the given radius.
    void r_vector(double radius, std::span<double> r)
    {
        double s = 0.0;
        for (double& v : r) {
            v = uniform(-1.0, 1.0);
            s += std::abs(v);
        }
        const double target = radius * unit(rng);
        for (double& v : r) v = s > 0.0 ? v * target / s : 0.0;
    }
};

double box_scale(const AuditBox& box)
{
    double s = 0.0;
    for (std::size_t a = 0; a < box.lo.size(); ++a) s = std::max(s, box.hi[a] - box.lo[a]);
    return s > 0.0 ? s : 1.0;
}

bool exceeds(double observed, double declared)
{
    return observed > declared * (1.0 + kAuditRelTol) + kAuditAbsTol;
}

}  // namespace

AuditResult audit_velocity(const VelocityField& field, const AuditBox& box, std::size_t samples,
                           std::uint64_t seed)
{
    const std::size_t d = field.dim();
    const std::size_t k = field.k();
    if (box.lo.size() != d || box.hi.size() != d) throw Error("audit: box dimension mismatch");
    Sampler s{std::mt19937_64(seed)};
    const double near = 1e-3 * box_scale(box);
    std::vector<double> x(d), y(d), r(k), q(k), vx(d), vy(d), diff(d), dr(k);
    AuditResult res;
    auto fail = [&](std::string what, double declared, double observed, std::string witness) {
        if (!res.ok) return;
        res = {false, std::move(what), std::move(witness), declared, observed};
    };

    for (std::size_t n = 0; n < samples && res.ok; ++n) {
        const double t = s.uniform(0.0, box.t_max);
        s.point(box, x);
        s.r_vector(box.r_ball, r);
        field(t, x, r, vx);
        const double speed = norm2(vx);
        if (exceeds(speed, field.sup_bound()))
            fail("sup_bound", field.sup_bound(), speed,
                 "t=" + std::to_string(t) + " x=" + format_point(x) + " r=" + format_point(r));

        // Lipschitz in x at fixed (t, r).
        if (n % 2 == 0) s.point(box, y);
        else
            for (std::size_t a = 0; a < d; ++a) y[a] = x[a] + s.uniform(-near, near);
        field(t, y, r, vy);
        for (std::size_t a = 0; a < d; ++a) diff[a] = vx[a] - vy[a];
        for (std::size_t a = 0; a < d; ++a) vy[a] = x[a] - y[a];
        const double dx = norm2(vy);
        if (dx > 0.0) {
            const double slope = norm2(diff) / dx;
            if (exceeds(slope, field.lip_x()))
                fail("lip_x", field.lip_x(), slope,
                     "t=" + std::to_string(t) + " x=" + format_point(x) + " y=" + format_point(y)
                         + " r=" + format_point(r));
        }

        // Lipschitz in r at fixed (t, x).
        if (n % 2 == 0) s.r_vector(box.r_ball, q);
        else
            for (std::size_t j = 0; j < k; ++j) q[j] = r[j] + s.uniform(-near, near) * box.r_ball;
        field(t, x, q, vy);
        for (std::size_t a = 0; a < d; ++a) diff[a] = vx[a] - vy[a];
        for (std::size_t j = 0; j < k; ++j) dr[j] = r[j] - q[j];
        const double drn = norm1(dr);
        if (drn > 0.0) {
            const double slope = norm2(diff) / drn;
            if (exceeds(slope, field.lip_r()))
                fail("lip_r", field.lip_r(), slope,
                     "t=" + std::to_string(t) + " x=" + format_point(x) + " r=" + format_point(r)
                         + " r'=" + format_point(q));
        }
    }
    return res;
}

AuditResult audit_kernel(const Kernel& kernel, const AuditBox& box, std::size_t samples,
                         std::uint64_t seed)
{
    const std::size_t d = kernel.dim();
    if (box.lo.size() != d || box.hi.size() != d) throw Error("audit: box dimension mismatch");
    Sampler s{std::mt19937_64(seed)};
    const double near = 1e-3 * box_scale(box);
    std::vector<double> x(d), y(d), diff(d);
    AuditResult res;
    for (std::size_t n = 0; n < samples && res.ok; ++n) {
        const double t = s.uniform(0.0, box.t_max);
        s.point(box, x);
        const double fx = kernel(t, x);
        if (exceeds(std::abs(fx), kernel.sup_bound())) {
            res = {false, "sup_bound", "t=" + std::to_string(t) + " x=" + format_point(x),
                   kernel.sup_bound(), std::abs(fx)};
            break;
        }
        if (n % 2 == 0) s.point(box, y);
        else
            for (std::size_t a = 0; a < d; ++a) y[a] = x[a] + s.uniform(-near, near);
        for (std::size_t a = 0; a < d; ++a) diff[a] = x[a] - y[a];
        const double dx = norm2(diff);
        if (dx == 0.0) continue;
        const double slope = std::abs(fx - kernel(t, y)) / dx;
        if (exceeds(slope, kernel.lip_x())) {
            res = {false, "lip_x",
                   "t=" + std::to_string(t) + " x=" + format_point(x) + " y=" + format_point(y),
                   kernel.lip_x(), slope};
            break;
        }
    }
    return res;
}

}  // namespace nonlocal
