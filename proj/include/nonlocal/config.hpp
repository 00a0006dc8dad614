#pragma once

#include <nonlocal/solver.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace nonlocal {

inline constexpr const char* kScenarioSchema = "nonlocal-scenario/1";

struct DirectionSpec
{
    std::string type = "constant";  // constant | target
    std::vector<double> vector;
    std::vector<double> target;
    double smoothing = 0.1;

    friend bool operator==(const DirectionSpec&, const DirectionSpec&) = default;
};

struct VelocitySpec
{
    // zero | constant-drift | linear-local | sedimentation | affine-r |
    // pedestrian | sum
    std::string type = "zero";
    std::vector<double> drift;
    std::vector<double> matrix;    // linear-local: d x d row-major
    std::vector<double> offset;
    double radius = 1.0;
    std::vector<double> coupling;  // affine-r: d x k row-major
    double vmax = 1.0;
    double rho_max = 1.0;
    DirectionSpec direction;
    std::vector<VelocitySpec> terms;
    std::optional<double> sup;
    std::optional<double> lip_x;
    std::optional<double> lip_r;

    friend bool operator==(const VelocitySpec&, const VelocitySpec&) = default;
};

struct KernelSpec
{
    std::string type = "constant";  // tent | bump-poly | cosine-lobe | constant
    double scale = 1.0;
    double height = 0.0;
    std::optional<double> sup;
    std::optional<double> lip_x;

    friend bool operator==(const KernelSpec&, const KernelSpec&) = default;
};

struct InitialSpec
{
    // particles | dirac | density | random-cloud
    std::string type = "particles";
    std::vector<double> positions;  // flat
    std::vector<double> weights;
    std::vector<double> lo;
    std::vector<double> hi;
    std::string profile = "uniform";  // uniform | bump | gaussian
    std::size_t nodes = 0;            // grid cells per axis
    std::size_t n = 0;
    std::string scheme = "quantile-1d";
    double mass = 1.0;

    friend bool operator==(const InitialSpec&, const InitialSpec&) = default;
};

struct SpeciesSpec
{
    std::string name;
    bool dirac = false;
    InitialSpec initial;

    friend bool operator==(const SpeciesSpec&, const SpeciesSpec&) = default;
};

struct PicardSpec
{
    double tol = 1e-10;
    int max_iter = 60;
    double sigma = 0.5;
    std::string interpolation = "hermite";

    friend bool operator==(const PicardSpec&, const PicardSpec&) = default;
};

struct StabilitySpec
{
    std::size_t pairs = 0;
    double amplitude = 0.05;
    std::optional<double> k_override;

    friend bool operator==(const StabilitySpec&, const StabilitySpec&) = default;
};

struct ScenarioConfig
{
    std::string schema = kScenarioSchema;
    std::string name;
    std::size_t dim = 1;
    double horizon = 1.0;
    double dt = 0.01;
    double courant = 0.1;
    double h_fd = 1e-4;
    std::string mode = "direct";
    std::uint64_t seed = 0;
    bool track_density = false;
    PicardSpec picard;
    std::vector<SpeciesSpec> species;
    std::vector<std::vector<KernelSpec>> kernels;
    std::vector<VelocitySpec> velocity;
    // mass | linfty | contraction | agreement | stability-initial
    std::vector<std::string> checks;
    StabilitySpec stability;

    friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;
};

ScenarioConfig parse_config(const std::string& json_text);
std::string config_to_json(const ScenarioConfig& cfg);

ScenarioConfig load_config(const std::string& path);
void save_config(const ScenarioConfig& cfg, const std::string& path);

// Builds the scenario (kernels, fields, discretized initial data).
Scenario build_scenario(const ScenarioConfig& cfg);

struct ScenarioAudit
{
    bool ok = true;
    std::vector<std::string> lines;  // one per audited object
    std::string failure;
};

// Samples every declared sup / Lipschitz constant over the scenario's box.
ScenarioAudit audit_scenario(const ScenarioConfig& cfg, const Scenario& s, std::size_t samples = 4000);

// load_config + build_scenario + audit; an audit failure throws.
Scenario load_scenario(const std::string& path, ScenarioConfig* cfg_out = nullptr);

struct Overrides
{
    std::optional<std::size_t> n;
    std::optional<double> dt;
    std::optional<double> horizon;
    std::optional<std::string> mode;
    std::optional<std::uint64_t> seed;
};

void apply_overrides(ScenarioConfig& cfg, const Overrides& o);

// Directory holding the bundled scenario files.
std::string bundled_scenario_dir();
std::vector<std::string> bundled_scenarios();
std::string bundled_scenario_path(const std::string& name);

}  // namespace nonlocal
