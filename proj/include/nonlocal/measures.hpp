#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <utility>
#include <vector>

namespace nonlocal {

// Spatial dimensions above this are rejected; it lets hot loops keep
// difference vectors on the stack.
inline constexpr std::size_t kMaxDim = 3;

using PointMap = std::function<void(std::span<const double> in, std::span<double> out)>;

// A bounded positive measure stored as N weighted point masses in R^d.
// Positions are kept flat, particle m occupying [m*d, (m+1)*d).
class ParticleMeasure
{
public:
    ParticleMeasure() = default;
    explicit ParticleMeasure(std::size_t dim);
    ParticleMeasure(std::size_t dim, std::vector<double> positions, std::vector<double> weights);

    static ParticleMeasure dirac(std::span<const double> point, double weight = 1.0);

    std::size_t dim() const noexcept { return dim_; }
    std::size_t size() const noexcept { return weights_.size(); }
    bool empty() const noexcept { return weights_.empty(); }

    std::span<const double> position(std::size_t m) const noexcept
    {
        return {positions_.data() + m * dim_, dim_};
    }
    double weight(std::size_t m) const noexcept { return weights_[m]; }

    const std::vector<double>& positions() const noexcept { return positions_; }
    const std::vector<double>& weights() const noexcept { return weights_; }

    // Replaces positions; weights are never touched after construction.
    void set_positions(std::vector<double> positions);

    friend bool operator==(const ParticleMeasure&, const ParticleMeasure&) = default;

private:
    std::size_t dim_ = 1;
    std::vector<double> positions_;
    std::vector<double> weights_;
};

// The k-species state (rho^1, ..., rho^k) at one time.
class MeasureVector
{
public:
    MeasureVector() = default;
    explicit MeasureVector(std::vector<ParticleMeasure> species);

    std::size_t species_count() const noexcept { return species_.size(); }
    std::size_t dim() const noexcept { return species_.front().dim(); }
    const ParticleMeasure& operator[](std::size_t i) const noexcept { return species_[i]; }
    ParticleMeasure& operator[](std::size_t i) noexcept { return species_[i]; }
    const std::vector<ParticleMeasure>& species() const noexcept { return species_; }

    std::size_t particle_count() const noexcept;

    friend bool operator==(const MeasureVector&, const MeasureVector&) = default;

private:
    std::vector<ParticleMeasure> species_;
};

// Node-centred uniform grid density. Values are stored with the first axis
// varying fastest.
struct GridAxis
{
    double origin = 0.0;
    double spacing = 1.0;
    std::size_t count = 0;

    double node(std::size_t i) const noexcept { return origin + spacing * static_cast<double>(i); }
};

class GridDensity
{
public:
    GridDensity(std::vector<GridAxis> axes, std::vector<double> values);

    // Samples f at every node.
    static GridDensity sample(std::vector<GridAxis> axes,
                              const std::function<double(std::span<const double>)>& f);

    std::size_t dim() const noexcept { return axes_.size(); }
    const std::vector<GridAxis>& axes() const noexcept { return axes_; }
    const std::vector<double>& values() const noexcept { return values_; }
    double cell_volume() const noexcept;
    // Rectangle rule: sum of node values times cell volume.
    double integral() const noexcept;
    double sup() const noexcept;
    // Multilinear interpolation; zero outside the grid.
    double interpolate(std::span<const double> x) const noexcept;

private:
    std::vector<GridAxis> axes_;
    std::vector<double> values_;
};

enum class DiscretizationScheme { quantile_1d, cell_midpoint };

double total_mass(const ParticleMeasure& mu) noexcept;
double total_mass(const MeasureVector& rho) noexcept;

ParticleMeasure push_forward(const ParticleMeasure& mu, const PointMap& map);

// Divides every species by its mass. Returns the rescaled vector and the
// per-species masses that undo it.
std::pair<MeasureVector, std::vector<double>> rescale_to_probability(const MeasureVector& rho);

ParticleMeasure particles_from_density(const GridDensity& f, std::size_t n,
                                       DiscretizationScheme scheme);

// Concatenation of two ensembles with optional weight multipliers.
ParticleMeasure concatenate(const ParticleMeasure& a, const ParticleMeasure& b,
                            double alpha = 1.0, double beta = 1.0);

}  // namespace nonlocal
