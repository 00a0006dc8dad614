#include <nonlocal/measures.hpp>

#include <nonlocal/error.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <string>

namespace nonlocal {

namespace {

void check_dim(std::size_t dim)
{
    if (dim == 0 || dim > kMaxDim)
        throw Error("spatial dimension must be in [1, " + std::to_string(kMaxDim) + "], got "
                    + std::to_string(dim));
}

// Sequential sum, the same order total_mass() uses.
double sequential_sum(const std::vector<double>& v) noexcept
{
    double s = 0.0;
    for (double x : v) s += x;
    return s;
}

// Adjusts the last weight so that the sequential sum reproduces `target`
// exactly. The loop walks at most a handful of ulps.
void close_mass_exactly(std::vector<double>& w, double target)
{
    if (w.empty()) return;
    double head = 0.0;
    for (std::size_t m = 0; m + 1 < w.size(); ++m) head += w[m];
    double last = target - head;
    for (int attempt = 0; attempt < 256 && head + last != target; ++attempt)
        last = std::nextafter(last, head + last < target ? target : 0.0);
    if (last <= 0.0) throw Error("cannot close particle mass exactly");
    w.back() = last;
}

}  // namespace

ParticleMeasure::ParticleMeasure(std::size_t dim) : dim_(dim) { check_dim(dim); }

ParticleMeasure::ParticleMeasure(std::size_t dim, std::vector<double> positions,
                                 std::vector<double> weights)
    : dim_(dim), positions_(std::move(positions)), weights_(std::move(weights))
{
    check_dim(dim);
    if (positions_.size() != weights_.size() * dim_)
        throw Error("particle measure: " + std::to_string(positions_.size())
                    + " coordinates do not match " + std::to_string(weights_.size())
                    + " weights in dimension " + std::to_string(dim_));
    for (double w : weights_)
        if (!(w > 0.0) || !std::isfinite(w))
            throw Error("particle measure: weights must be strictly positive and finite");
    for (double x : positions_)
        if (!std::isfinite(x)) throw Error("particle measure: non-finite position");
}

ParticleMeasure ParticleMeasure::dirac(std::span<const double> point, double weight)
{
    return ParticleMeasure(point.size(), std::vector<double>(point.begin(), point.end()), {weight});
}

void ParticleMeasure::set_positions(std::vector<double> positions)
{
    if (positions.size() != positions_.size())
        throw Error("particle measure: position update changes particle count");
    positions_ = std::move(positions);
}

MeasureVector::MeasureVector(std::vector<ParticleMeasure> species) : species_(std::move(species))
{
    if (species_.empty()) throw Error("measure vector needs at least one species");
    for (const auto& s : species_)
        if (s.dim() != species_.front().dim())
            throw Error("measure vector: species have different spatial dimensions");
}

std::size_t MeasureVector::particle_count() const noexcept
{
    std::size_t n = 0;
    for (const auto& s : species_) n += s.size();
    return n;
}

GridDensity::GridDensity(std::vector<GridAxis> axes, std::vector<double> values)
    : axes_(std::move(axes)), values_(std::move(values))
{
    check_dim(axes_.size());
    std::size_t n = 1;
    for (const auto& a : axes_) {
        if (!(a.spacing > 0.0)) throw Error("grid density: spacing must be positive");
        if (a.count == 0) throw Error("grid density: empty axis");
        n *= a.count;
    }
    if (values_.size() != n)
        throw Error("grid density: expected " + std::to_string(n) + " values, got "
                    + std::to_string(values_.size()));
    for (double v : values_)
        if (!(v >= 0.0) || !std::isfinite(v))
            throw Error("grid density: values must be finite and nonnegative");
}

GridDensity GridDensity::sample(std::vector<GridAxis> axes,
                                const std::function<double(std::span<const double>)>& f)
{
    check_dim(axes.size());
    std::size_t n = 1;
    for (const auto& a : axes) n *= a.count;
    std::vector<double> values(n);
    std::array<double, kMaxDim> x{};
    for (std::size_t flat = 0; flat < n; ++flat) {
        std::size_t rest = flat;
        for (std::size_t a = 0; a < axes.size(); ++a) {
            x[a] = axes[a].node(rest % axes[a].count);
            rest /= axes[a].count;
        }
        values[flat] = f(std::span<const double>(x.data(), axes.size()));
    }
    return GridDensity(std::move(axes), std::move(values));
}

double GridDensity::cell_volume() const noexcept
{
    double v = 1.0;
    for (const auto& a : axes_) v *= a.spacing;
    return v;
}

double GridDensity::integral() const noexcept
{
    const double vol = cell_volume();
    double s = 0.0;
    for (double v : values_)
        if (v > 0.0) s += v * vol;
    return s;
}

double GridDensity::sup() const noexcept
{
    return values_.empty() ? 0.0 : *std::max_element(values_.begin(), values_.end());
}

double GridDensity::interpolate(std::span<const double> x) const noexcept
{
    const std::size_t d = axes_.size();
    std::array<std::size_t, kMaxDim> lo{};
    std::array<double, kMaxDim> frac{};
    for (std::size_t a = 0; a < d; ++a) {
        const double u = (x[a] - axes_[a].origin) / axes_[a].spacing;
        if (u < 0.0 || u > static_cast<double>(axes_[a].count - 1)) return 0.0;
        auto i = static_cast<std::size_t>(std::floor(u));
        if (i + 1 >= axes_[a].count) i = axes_[a].count >= 2 ? axes_[a].count - 2 : 0;
        lo[a] = i;
        frac[a] = axes_[a].count >= 2 ? u - static_cast<double>(i) : 0.0;
    }
    double acc = 0.0;
    for (std::size_t corner = 0; corner < (std::size_t{1} << d); ++corner) {
        double wgt = 1.0;
        std::size_t flat = 0, stride = 1;
        bool valid = true;
        for (std::size_t a = 0; a < d; ++a) {
            const bool up = (corner >> a) & 1U;
            const std::size_t idx = lo[a] + (up ? 1 : 0);
            if (idx >= axes_[a].count) { valid = false; break; }
            wgt *= up ? frac[a] : 1.0 - frac[a];
            flat += idx * stride;
            stride *= axes_[a].count;
        }
        if (valid && wgt != 0.0) acc += wgt * values_[flat];
    }
    return acc;
}

double total_mass(const ParticleMeasure& mu) noexcept { return sequential_sum(mu.weights()); }

double total_mass(const MeasureVector& rho) noexcept
{
    double s = 0.0;
    for (const auto& sp : rho.species()) s += total_mass(sp);
    return s;
}

ParticleMeasure push_forward(const ParticleMeasure& mu, const PointMap& map)
{
    const std::size_t d = mu.dim();
    std::vector<double> out(mu.positions().size());
    for (std::size_t m = 0; m < mu.size(); ++m)
        map(mu.position(m), std::span<double>(out.data() + m * d, d));
    ParticleMeasure result = mu;
    result.set_positions(std::move(out));
    return result;
}

std::pair<MeasureVector, std::vector<double>> rescale_to_probability(const MeasureVector& rho)
{
    std::vector<ParticleMeasure> species;
    std::vector<double> scales;
    species.reserve(rho.species_count());
    for (std::size_t i = 0; i < rho.species_count(); ++i) {
        const auto& sp = rho[i];
        const double mass = total_mass(sp);
        if (!(mass > 0.0)) throw Error("empty species " + std::to_string(i));
        std::vector<double> w = sp.weights();
        if (mass != 1.0)
            for (double& x : w) x /= mass;
        species.emplace_back(sp.dim(), sp.positions(), std::move(w));
        scales.push_back(mass);
    }
    return {MeasureVector(std::move(species)), std::move(scales)};
}

namespace {

ParticleMeasure quantile_particles(const GridDensity& f, std::size_t n, double mass)
{
    const GridAxis& ax = f.axes().front();
    const double h = ax.spacing;
    const auto& v = f.values();
    // Piecewise-constant density on cells [x_i - h/2, x_i + h/2].
    std::vector<double> cdf(v.size() + 1, 0.0);
    for (std::size_t i = 0; i < v.size(); ++i) cdf[i + 1] = cdf[i] + (v[i] > 0.0 ? v[i] * h : 0.0);
    const double scale = cdf.back();

    std::vector<double> positions(n), weights(n, mass / static_cast<double>(n));
    std::size_t cell = 0;
    for (std::size_t m = 0; m < n; ++m) {
        const double target = scale * (static_cast<double>(m) + 0.5) / static_cast<double>(n);
        while (cell + 1 < v.size() && cdf[cell + 1] < target) ++cell;
        while (cell + 1 < v.size() && v[cell] <= 0.0) ++cell;
        const double in_cell = v[cell] > 0.0 ? (target - cdf[cell]) / (v[cell] * h) : 0.5;
        positions[m] = ax.node(cell) - 0.5 * h + std::clamp(in_cell, 0.0, 1.0) * h;
    }
    close_mass_exactly(weights, mass);
    return ParticleMeasure(1, std::move(positions), std::move(weights));
}

ParticleMeasure block_particles(const GridDensity& f, std::size_t n)
{
    const std::size_t d = f.dim();
    const double vol = f.cell_volume();
    std::array<std::size_t, kMaxDim> blocks{};
    std::size_t total_blocks = 1;
    for (std::size_t a = 0; a < d; ++a) {
        blocks[a] = std::min(n, f.axes()[a].count);
        total_blocks *= blocks[a];
    }
    // Node index -> block index along each axis, groups as equal as possible.
    auto block_of = [&](std::size_t a, std::size_t i) { return i * blocks[a] / f.axes()[a].count; };
    auto block_lo = [&](std::size_t a, std::size_t b) {
        return (b * f.axes()[a].count + blocks[a] - 1) / blocks[a];
    };

    std::vector<double> block_mass(total_blocks, 0.0);
    const auto& values = f.values();
    for (std::size_t flat = 0; flat < values.size(); ++flat) {
        if (!(values[flat] > 0.0)) continue;
        std::size_t rest = flat, bflat = 0, stride = 1;
        for (std::size_t a = 0; a < d; ++a) {
            bflat += block_of(a, rest % f.axes()[a].count) * stride;
            rest /= f.axes()[a].count;
            stride *= blocks[a];
        }
        block_mass[bflat] += values[flat] * vol;
    }

    std::vector<double> positions, weights;
    for (std::size_t b = 0; b < total_blocks; ++b) {
        if (!(block_mass[b] > 0.0)) continue;
        std::size_t rest = b;
        for (std::size_t a = 0; a < d; ++a) {
            const auto& ax = f.axes()[a];
            const std::size_t bi = rest % blocks[a];
            rest /= blocks[a];
            const std::size_t first = block_lo(a, bi);
            const std::size_t last = block_lo(a, bi + 1) - 1;
            const double lo = ax.node(first) - 0.5 * ax.spacing;
            const double hi = ax.node(last) + 0.5 * ax.spacing;
            positions.push_back(0.5 * (lo + hi));
        }
        weights.push_back(block_mass[b]);
    }
    close_mass_exactly(weights, f.integral());
    return ParticleMeasure(d, std::move(positions), std::move(weights));
}

}  // namespace

ParticleMeasure particles_from_density(const GridDensity& f, std::size_t n,
                                       DiscretizationScheme scheme)
{
    if (n == 0) throw Error("particles_from_density: particle count must be positive");
    const double mass = f.integral();
    if (!(mass > 0.0)) throw Error("particles_from_density: density has nonpositive integral");
    switch (scheme) {
    case DiscretizationScheme::quantile_1d:
        if (f.dim() != 1) throw Error("quantile-1d discretization requires dim = 1");
        return quantile_particles(f, n, mass);
    case DiscretizationScheme::cell_midpoint:
        return block_particles(f, n);
    }
    throw Error("unknown discretization scheme");
}

ParticleMeasure concatenate(const ParticleMeasure& a, const ParticleMeasure& b, double alpha,
                            double beta)
{
    if (a.dim() != b.dim()) throw Error("concatenate: dimension mismatch");
    std::vector<double> pos = a.positions();
    pos.insert(pos.end(), b.positions().begin(), b.positions().end());
    std::vector<double> w;
    w.reserve(a.size() + b.size());
    for (double x : a.weights()) w.push_back(alpha * x);
    for (double x : b.weights()) w.push_back(beta * x);
    return ParticleMeasure(a.dim(), std::move(pos), std::move(w));
}

}  // namespace nonlocal
