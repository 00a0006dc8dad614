#include <nonlocal/config.hpp>

#include <nonlocal/error.hpp>

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#ifndef NONLOCAL_SCENARIO_DIR
#define NONLOCAL_SCENARIO_DIR "scenarios"
#endif

namespace nonlocal {

using json = nlohmann::ordered_json;

namespace {

[[noreturn]] void field_error(const std::string& path, const std::string& what)
{
    throw Error("scenario field '" + path + "': " + what);
}

void check_keys(const json& obj, const std::string& path, std::initializer_list<const char*> allowed)
{
    if (!obj.is_object()) field_error(path, "expected an object");
    for (const auto& [key, _] : obj.items()) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || key == a;
        if (!ok) field_error(path + "." + key, "unknown field");
    }
}

double get_number(const json& obj, const char* key, const std::string& path, std::optional<double> def = {})
{
    if (!obj.contains(key)) {
        if (def) return *def;
        field_error(path + "." + key, "missing");
    }
    const auto& v = obj.at(key);
    if (!v.is_number()) field_error(path + "." + key, "expected a number");
    return v.get<double>();
}

std::optional<double> get_optional(const json& obj, const char* key, const std::string& path)
{
    if (!obj.contains(key) || obj.at(key).is_null()) return std::nullopt;
    return get_number(obj, key, path);
}

std::size_t get_count(const json& obj, const char* key, const std::string& path, std::optional<std::size_t> def = {})
{
    if (!obj.contains(key)) {
        if (def) return *def;
        field_error(path + "." + key, "missing");
    }
    const auto& v = obj.at(key);
    if (!v.is_number_integer() || v.get<long long>() < 0) field_error(path + "." + key, "expected a nonnegative integer");
    return v.get<std::size_t>();
}

std::string get_string(const json& obj, const char* key, const std::string& path, std::optional<std::string> def = {})
{
    if (!obj.contains(key)) {
        if (def) return *def;
        field_error(path + "." + key, "missing");
    }
    const auto& v = obj.at(key);
    if (!v.is_string()) field_error(path + "." + key, "expected a string");
    return v.get<std::string>();
}

bool get_bool(const json& obj, const char* key, const std::string& path, bool def)
{
    if (!obj.contains(key)) return def;
    const auto& v = obj.at(key);
    if (!v.is_boolean()) field_error(path + "." + key, "expected true or false");
    return v.get<bool>();
}

// Accepts a flat list of numbers or a list of equal-length lists (flattened).
std::vector<double> get_numbers(const json& obj, const char* key, const std::string& path, bool required = false)
{
    if (!obj.contains(key)) {
        if (required) field_error(path + "." + key, "missing");
        return {};
    }
    const auto& v = obj.at(key);
    if (!v.is_array()) field_error(path + "." + key, "expected an array");
    std::vector<double> out;
    for (std::size_t n = 0; n < v.size(); ++n) {
        const auto& e = v[n];
        const std::string p = path + "." + key + "[" + std::to_string(n) + "]";
        if (e.is_number())
            out.push_back(e.get<double>());
        else if (e.is_array()) {
            for (const auto& x : e) {
                if (!x.is_number()) field_error(p, "expected numbers");
                out.push_back(x.get<double>());
            }
        } else
            field_error(p, "expected a number or an array of numbers");
    }
    return out;
}

DirectionSpec parse_direction(const json& j, const std::string& path)
{
    check_keys(j, path, {"type", "vector", "target", "smoothing"});
    DirectionSpec d;
    d.type = get_string(j, "type", path, std::string("constant"));
    if (d.type != "constant" && d.type != "target") field_error(path + ".type", "unknown direction '" + d.type + "'");
    d.vector = get_numbers(j, "vector", path);
    d.target = get_numbers(j, "target", path);
    d.smoothing = get_number(j, "smoothing", path, 0.1);
    return d;
}

const std::set<std::string> kVelocityTypes = {"zero",     "constant-drift", "linear-local", "sedimentation",
                                              "affine-r", "pedestrian",     "sum"};

VelocitySpec parse_velocity(const json& j, const std::string& path)
{
    check_keys(j, path, {"type", "drift", "matrix", "offset", "radius", "coupling", "vmax", "rho_max",
                         "direction", "terms", "sup", "lip_x", "lip_r"});
    VelocitySpec v;
    v.type = get_string(j, "type", path);
    if (!kVelocityTypes.count(v.type)) field_error(path + ".type", "unknown velocity model '" + v.type + "'");
    v.drift = get_numbers(j, "drift", path);
    v.matrix = get_numbers(j, "matrix", path);
    v.offset = get_numbers(j, "offset", path);
    v.radius = get_number(j, "radius", path, 1.0);
    v.coupling = get_numbers(j, "coupling", path);
    v.vmax = get_number(j, "vmax", path, 1.0);
    v.rho_max = get_number(j, "rho_max", path, 1.0);
    if (j.contains("direction")) v.direction = parse_direction(j.at("direction"), path + ".direction");
    if (j.contains("terms")) {
        const auto& t = j.at("terms");
        if (!t.is_array()) field_error(path + ".terms", "expected an array");
        for (std::size_t n = 0; n < t.size(); ++n)
            v.terms.push_back(parse_velocity(t[n], path + ".terms[" + std::to_string(n) + "]"));
    }
    v.sup = get_optional(j, "sup", path);
    v.lip_x = get_optional(j, "lip_x", path);
    v.lip_r = get_optional(j, "lip_r", path);
    return v;
}

const std::set<std::string> kKernelTypes = {"tent", "bump-poly", "cosine-lobe", "constant"};

KernelSpec parse_kernel(const json& j, const std::string& path)
{
    check_keys(j, path, {"type", "scale", "height", "sup", "lip_x"});
    KernelSpec k;
    k.type = get_string(j, "type", path);
    if (!kKernelTypes.count(k.type)) field_error(path + ".type", "unknown kernel '" + k.type + "'");
    k.scale = get_number(j, "scale", path, 1.0);
    k.height = get_number(j, "height", path, 0.0);
    k.sup = get_optional(j, "sup", path);
    k.lip_x = get_optional(j, "lip_x", path);
    return k;
}

InitialSpec parse_initial(const json& j, const std::string& path)
{
    check_keys(j, path, {"type", "positions", "weights", "lo", "hi", "profile", "nodes", "n", "scheme", "mass"});
    InitialSpec s;
    s.type = get_string(j, "type", path);
    if (s.type != "particles" && s.type != "dirac" && s.type != "density" && s.type != "random-cloud")
        field_error(path + ".type", "unknown initial data '" + s.type + "'");
    s.positions = get_numbers(j, "positions", path);
    s.weights = get_numbers(j, "weights", path);
    s.lo = get_numbers(j, "lo", path);
    s.hi = get_numbers(j, "hi", path);
    s.profile = get_string(j, "profile", path, std::string("uniform"));
    if (s.profile != "uniform" && s.profile != "bump" && s.profile != "gaussian")
        field_error(path + ".profile", "unknown profile '" + s.profile + "'");
    s.nodes = get_count(j, "nodes", path, std::size_t{0});
    s.n = get_count(j, "n", path, std::size_t{0});
    s.scheme = get_string(j, "scheme", path, std::string("quantile-1d"));
    if (s.scheme != "quantile-1d" && s.scheme != "cell-midpoint")
        field_error(path + ".scheme", "unknown scheme '" + s.scheme + "'");
    s.mass = get_number(j, "mass", path, 1.0);
    return s;
}

json direction_json(const DirectionSpec& d)
{
    json j;
    j["type"] = d.type;
    if (!d.vector.empty()) j["vector"] = d.vector;
    if (!d.target.empty()) j["target"] = d.target;
    j["smoothing"] = d.smoothing;
    return j;
}

json velocity_json(const VelocitySpec& v)
{
    json j;
    j["type"] = v.type;
    if (!v.drift.empty()) j["drift"] = v.drift;
    if (!v.matrix.empty()) j["matrix"] = v.matrix;
    if (!v.offset.empty()) j["offset"] = v.offset;
    j["radius"] = v.radius;
    if (!v.coupling.empty()) j["coupling"] = v.coupling;
    j["vmax"] = v.vmax;
    j["rho_max"] = v.rho_max;
    j["direction"] = direction_json(v.direction);
    if (!v.terms.empty()) {
        json t = json::array();
        for (const auto& term : v.terms) t.push_back(velocity_json(term));
        j["terms"] = t;
    }
    if (v.sup) j["sup"] = *v.sup;
    if (v.lip_x) j["lip_x"] = *v.lip_x;
    if (v.lip_r) j["lip_r"] = *v.lip_r;
    return j;
}

json kernel_json(const KernelSpec& k)
{
    json j;
    j["type"] = k.type;
    j["scale"] = k.scale;
    j["height"] = k.height;
    if (k.sup) j["sup"] = *k.sup;
    if (k.lip_x) j["lip_x"] = *k.lip_x;
    return j;
}

json initial_json(const InitialSpec& s)
{
    json j;
    j["type"] = s.type;
    if (!s.positions.empty()) j["positions"] = s.positions;
    if (!s.weights.empty()) j["weights"] = s.weights;
    if (!s.lo.empty()) j["lo"] = s.lo;
    if (!s.hi.empty()) j["hi"] = s.hi;
    j["profile"] = s.profile;
    j["nodes"] = s.nodes;
    j["n"] = s.n;
    j["scheme"] = s.scheme;
    j["mass"] = s.mass;
    return j;
}

std::size_t line_of(const std::string& text, std::size_t byte)
{
    const auto end = text.begin() + static_cast<std::ptrdiff_t>(std::min(byte, text.size()));
    return static_cast<std::size_t>(std::count(text.begin(), end, '\n')) + 1;
}

}  // namespace

ScenarioConfig parse_config(const std::string& text)
{
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error("scenario parse error at line " + std::to_string(line_of(text, e.byte)) + ": " + e.what());
    }
    const std::string p = "scenario";
    check_keys(root, p, {"schema", "name", "dim", "horizon", "dt", "courant", "h_fd", "mode", "seed",
                         "track_density", "picard", "species", "kernels", "velocity", "checks", "stability"});
    ScenarioConfig c;
    c.schema = get_string(root, "schema", p);
    if (c.schema != kScenarioSchema)
        field_error("schema", "expected '" + std::string(kScenarioSchema) + "', got '" + c.schema + "'");
    c.name = get_string(root, "name", p);
    c.dim = get_count(root, "dim", p);
    if (c.dim < 1 || c.dim > kMaxDim) field_error("dim", "must be between 1 and " + std::to_string(kMaxDim));
    c.horizon = get_number(root, "horizon", p);
    c.dt = get_number(root, "dt", p);
    c.courant = get_number(root, "courant", p, 0.1);
    c.h_fd = get_number(root, "h_fd", p, 1e-4);
    c.mode = get_string(root, "mode", p, std::string("direct"));
    if (c.mode != "direct" && c.mode != "picard") field_error("mode", "expected 'direct' or 'picard'");
    c.seed = static_cast<std::uint64_t>(get_count(root, "seed", p, std::size_t{0}));
    c.track_density = get_bool(root, "track_density", p, false);

    if (root.contains("picard")) {
        const auto& pj = root.at("picard");
        check_keys(pj, "picard", {"tol", "max_iter", "sigma", "interpolation"});
        c.picard.tol = get_number(pj, "tol", "picard", 1e-10);
        c.picard.max_iter = static_cast<int>(get_count(pj, "max_iter", "picard", std::size_t{60}));
        c.picard.sigma = get_number(pj, "sigma", "picard", 0.5);
        c.picard.interpolation = get_string(pj, "interpolation", "picard", std::string("hermite"));
        if (c.picard.interpolation != "hermite" && c.picard.interpolation != "linear")
            field_error("picard.interpolation", "expected 'hermite' or 'linear'");
    }

    if (!root.contains("species") || !root.at("species").is_array() || root.at("species").empty())
        field_error("species", "expected a nonempty array");
    const auto& sp = root.at("species");
    for (std::size_t i = 0; i < sp.size(); ++i) {
        const std::string path = "species[" + std::to_string(i) + "]";
        check_keys(sp[i], path, {"name", "dirac", "initial"});
        SpeciesSpec s;
        s.name = get_string(sp[i], "name", path, "species" + std::to_string(i));
        s.dirac = get_bool(sp[i], "dirac", path, false);
        if (!sp[i].contains("initial")) field_error(path + ".initial", "missing");
        s.initial = parse_initial(sp[i].at("initial"), path + ".initial");
        c.species.push_back(std::move(s));
    }
    const std::size_t k = c.species.size();

    if (!root.contains("kernels") || !root.at("kernels").is_array() || root.at("kernels").size() != k)
        field_error("kernels", "expected a " + std::to_string(k) + " x " + std::to_string(k) + " array");
    for (std::size_t i = 0; i < k; ++i) {
        const auto& row = root.at("kernels")[i];
        if (!row.is_array() || row.size() != k)
            field_error("kernels[" + std::to_string(i) + "]", "expected " + std::to_string(k) + " entries");
        std::vector<KernelSpec> r;
        for (std::size_t j = 0; j < k; ++j)
            r.push_back(parse_kernel(row[j], "kernels[" + std::to_string(i) + "][" + std::to_string(j) + "]"));
        c.kernels.push_back(std::move(r));
    }

    if (!root.contains("velocity") || !root.at("velocity").is_array() || root.at("velocity").size() != k)
        field_error("velocity", "expected one entry per species");
    for (std::size_t i = 0; i < k; ++i)
        c.velocity.push_back(parse_velocity(root.at("velocity")[i], "velocity[" + std::to_string(i) + "]"));

    if (root.contains("checks")) {
        const auto& ch = root.at("checks");
        if (!ch.is_array()) field_error("checks", "expected an array");
        static const std::set<std::string> known = {"mass", "linfty", "contraction", "agreement", "stability-initial"};
        for (std::size_t n = 0; n < ch.size(); ++n) {
            if (!ch[n].is_string() || !known.count(ch[n].get<std::string>()))
                field_error("checks[" + std::to_string(n) + "]", "unknown check");
            c.checks.push_back(ch[n].get<std::string>());
        }
    }
    if (root.contains("stability")) {
        const auto& sj = root.at("stability");
        check_keys(sj, "stability", {"pairs", "amplitude", "k_override"});
        c.stability.pairs = get_count(sj, "pairs", "stability", std::size_t{0});
        c.stability.amplitude = get_number(sj, "amplitude", "stability", 0.05);
        c.stability.k_override = get_optional(sj, "k_override", "stability");
    }
    return c;
}

std::string config_to_json(const ScenarioConfig& c)
{
    json j;
    j["schema"] = c.schema;
    j["name"] = c.name;
    j["dim"] = c.dim;
    j["horizon"] = c.horizon;
    j["dt"] = c.dt;
    j["courant"] = c.courant;
    j["h_fd"] = c.h_fd;
    j["mode"] = c.mode;
    j["seed"] = c.seed;
    j["track_density"] = c.track_density;
    j["picard"] = {{"tol", c.picard.tol},
                   {"max_iter", c.picard.max_iter},
                   {"sigma", c.picard.sigma},
                   {"interpolation", c.picard.interpolation}};
    json sp = json::array();
    for (const auto& s : c.species) sp.push_back({{"name", s.name}, {"dirac", s.dirac}, {"initial", initial_json(s.initial)}});
    j["species"] = sp;
    json ks = json::array();
    for (const auto& row : c.kernels) {
        json r = json::array();
        for (const auto& k : row) r.push_back(kernel_json(k));
        ks.push_back(r);
    }
    j["kernels"] = ks;
    json vs = json::array();
    for (const auto& v : c.velocity) vs.push_back(velocity_json(v));
    j["velocity"] = vs;
    j["checks"] = c.checks;
    json st;
    st["pairs"] = c.stability.pairs;
    st["amplitude"] = c.stability.amplitude;
    if (c.stability.k_override) st["k_override"] = *c.stability.k_override;
    j["stability"] = st;
    return j.dump(2) + "\n";
}

ScenarioConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw Error("cannot open scenario file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return parse_config(ss.str());
    } catch (const Error& e) {
        throw Error(path + ": " + e.what());
    }
}

void save_config(const ScenarioConfig& cfg, const std::string& path)
{
    std::ofstream out(path);
    if (!out) throw Error("cannot write scenario file '" + path + "'");
    out << config_to_json(cfg);
}

namespace {

double profile_value(const std::string& profile, std::span<const double> x, const std::vector<double>& lo,
                     const std::vector<double>& hi)
{
    double v = 1.0;
    for (std::size_t a = 0; a < x.size(); ++a) {
        const double mid = 0.5 * (lo[a] + hi[a]);
        const double half = 0.5 * (hi[a] - lo[a]);
        const double u = (x[a] - mid) / half;
        if (std::abs(u) > 1.0) return 0.0;
        if (profile == "bump") v *= (1.0 - u * u) * (1.0 - u * u);
        else if (profile == "gaussian") v *= std::exp(-4.0 * u * u);
    }
    return v;
}

struct BuiltSpecies
{
    ParticleMeasure particles;
    std::vector<double> log_density;
    double sup = 0.0;
};

BuiltSpecies build_species(const ScenarioConfig& c, std::size_t i)
{
    const SpeciesSpec& sp = c.species[i];
    const InitialSpec& in = sp.initial;
    const std::string path = "species[" + std::to_string(i) + "].initial";
    const std::size_t d = c.dim;
    BuiltSpecies out;
    if (in.type == "particles") {
        if (in.positions.size() != in.weights.size() * d)
            field_error(path + ".positions", "expected " + std::to_string(in.weights.size()) + " points of dimension " + std::to_string(d));
        out.particles = ParticleMeasure(d, in.positions, in.weights);
    } else if (in.type == "dirac") {
        if (in.positions.size() != d) field_error(path + ".positions", "a Dirac needs one point");
        out.particles = ParticleMeasure::dirac(in.positions, in.mass);
    } else {
        if (in.lo.size() != d || in.hi.size() != d) field_error(path + ".lo", "lo and hi need " + std::to_string(d) + " components");
        for (std::size_t a = 0; a < d; ++a)
            if (!(in.hi[a] > in.lo[a])) field_error(path + ".hi", "must exceed lo");
        if (in.n == 0) field_error(path + ".n", "must be positive");
        if (!(in.mass > 0.0)) field_error(path + ".mass", "must be positive");
        if (in.type == "random-cloud") {
            std::mt19937_64 rng(c.seed * 1000003ULL + i);
            std::uniform_real_distribution<double> u(0.0, 1.0);
            std::vector<double> pos(in.n * d), w(in.n, in.mass / static_cast<double>(in.n));
            for (std::size_t m = 0; m < in.n; ++m)
                for (std::size_t a = 0; a < d; ++a) pos[m * d + a] = in.lo[a] + (in.hi[a] - in.lo[a]) * u(rng);
            out.particles = ParticleMeasure(d, std::move(pos), std::move(w));
        } else {
            const std::size_t nodes = in.nodes ? in.nodes : (d == 1 ? 400 : 80);
            std::vector<GridAxis> axes;
            for (std::size_t a = 0; a < d; ++a) {
                const double h = (in.hi[a] - in.lo[a]) / static_cast<double>(nodes);
                axes.push_back({in.lo[a] + 0.5 * h, h, nodes});
            }
            const auto raw = GridDensity::sample(axes, [&](std::span<const double> x) {
                return profile_value(in.profile, x, in.lo, in.hi);
            });
            const double scale = in.mass / raw.integral();
            std::vector<double> values = raw.values();
            for (double& v : values) v *= scale;
            const GridDensity grid(axes, std::move(values));
            const auto scheme = in.scheme == "quantile-1d" ? DiscretizationScheme::quantile_1d
                                                           : DiscretizationScheme::cell_midpoint;
            out.particles = particles_from_density(grid, in.n, scheme);
            out.sup = grid.sup();
            for (std::size_t m = 0; m < out.particles.size(); ++m)
                out.log_density.push_back(std::log(grid.interpolate(out.particles.position(m))));
        }
    }
    return out;
}

Kernel build_kernel(const KernelSpec& s, std::size_t d, const std::string& path)
{
    Kernel k;
    try {
        k = kernel_library(s.type, d, {s.scale, s.height});
    } catch (const Error& e) {
        field_error(path, e.what());
    }
    if (s.sup || s.lip_x) k = k.with_metadata(s.sup.value_or(k.sup_bound()), s.lip_x.value_or(k.lip_x()));
    return k;
}

VelocityField build_velocity(const VelocitySpec& v, std::size_t d, std::size_t k, double r_ball,
                             const std::string& path)
{
    VelocityField f;
    try {
        if (v.type == "zero") f = zero_velocity(d, k);
        else if (v.type == "constant-drift") {
            if (v.drift.size() != d) field_error(path + ".drift", "expected " + std::to_string(d) + " components");
            f = constant_drift(v.drift, k);
        } else if (v.type == "linear-local") f = linear_local(d, k, v.matrix, v.offset, v.radius);
        else if (v.type == "sedimentation") {
            if (d != 1) field_error(path + ".type", "sedimentation requires dim = 1");
            f = sedimentation_velocity(k, r_ball);
        } else if (v.type == "affine-r") {
            auto drift = v.drift.empty() ? std::vector<double>(d, 0.0) : v.drift;
            if (drift.size() != d) field_error(path + ".drift", "expected " + std::to_string(d) + " components");
            f = affine_in_r(drift, v.coupling, k, r_ball);
        } else if (v.type == "pedestrian") {
            DirectionField dir;
            if (v.direction.type == "constant") {
                if (v.direction.vector.size() != d) field_error(path + ".direction.vector", "expected " + std::to_string(d) + " components");
                dir = constant_direction(v.direction.vector);
            } else {
                if (v.direction.target.size() != d) field_error(path + ".direction.target", "expected " + std::to_string(d) + " components");
                dir = target_direction(v.direction.target, v.direction.smoothing);
            }
            f = pedestrian_velocity(k, linear_speed_law(v.vmax, v.rho_max), dir);
        } else {
            if (v.terms.empty()) field_error(path + ".terms", "a sum needs at least one term");
            f = build_velocity(v.terms[0], d, k, r_ball, path + ".terms[0]");
            for (std::size_t n = 1; n < v.terms.size(); ++n)
                f = f + build_velocity(v.terms[n], d, k, r_ball, path + ".terms[" + std::to_string(n) + "]");
        }
    } catch (const Error& e) {
        const std::string msg = e.what();
        if (msg.rfind("scenario field", 0) == 0) throw;
        field_error(path, msg);
    }
    if (v.sup || v.lip_x || v.lip_r)
        f = f.with_metadata(v.sup.value_or(f.sup_bound()), v.lip_x.value_or(f.lip_x()), v.lip_r.value_or(f.lip_r()));
    return f;
}

}  // namespace

Scenario build_scenario(const ScenarioConfig& c)
{
    const std::size_t k = c.species.size();
    const std::size_t d = c.dim;
    Scenario s;
    s.name = c.name;
    s.horizon = c.horizon;
    s.step = {c.dt, c.courant};
    s.h_fd = c.h_fd;
    s.mode = c.mode == "picard" ? SolverMode::picard : SolverMode::direct;
    s.seed = c.seed;
    s.picard.tol = c.picard.tol;
    s.picard.max_iter = c.picard.max_iter;
    s.picard.sigma = c.picard.sigma;
    s.picard.interpolation = c.picard.interpolation == "linear" ? FrozenTrajectory::Interpolation::linear
                                                                : FrozenTrajectory::Interpolation::hermite;

    std::vector<ParticleMeasure> species;
    std::vector<std::vector<double>> logs;
    std::vector<double> sups;
    bool all_tracked = true;
    std::vector<bool> dirac;
    for (std::size_t i = 0; i < k; ++i) {
        auto b = build_species(c, i);
        species.push_back(std::move(b.particles));
        all_tracked = all_tracked && !b.log_density.empty();
        logs.push_back(std::move(b.log_density));
        sups.push_back(b.sup);
        dirac.push_back(c.species[i].dirac);
    }
    s.initial = MeasureVector(std::move(species));
    if (c.track_density) {
        if (!all_tracked) field_error("track_density", "every species needs density initial data");
        s.initial_log_density = std::move(logs);
        s.density_sup = std::move(sups);
    }

    std::vector<Kernel> entries;
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j)
            entries.push_back(build_kernel(c.kernels[i][j], d, "kernels[" + std::to_string(i) + "][" + std::to_string(j) + "]"));
    KernelMatrix kernels(k, std::move(entries));

    const double mass = total_mass(s.initial);
    std::vector<VelocityField> fields;
    for (std::size_t i = 0; i < k; ++i)
        fields.push_back(build_velocity(c.velocity[i], d, k, kernels.row_sup(i) * mass,
                                        "velocity[" + std::to_string(i) + "]"));
    s.model = dirac_coupling_field(std::move(fields), std::move(kernels), std::move(dirac), s.initial);
    s.validate();
    return s;
}

ScenarioAudit audit_scenario(const ScenarioConfig& c, const Scenario& s, std::size_t samples)
{
    ScenarioAudit out;
    const std::size_t d = s.model.dim();
    std::vector<double> lo(d, std::numeric_limits<double>::infinity()), hi(d, -std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < s.initial.species_count(); ++i)
        for (std::size_t m = 0; m < s.initial[i].size(); ++m)
            for (std::size_t a = 0; a < d; ++a) {
                lo[a] = std::min(lo[a], s.initial[i].position(m)[a]);
                hi[a] = std::max(hi[a], s.initial[i].position(m)[a]);
            }
    const double grow = s.model.sup_bound() * s.horizon + 0.5;
    for (std::size_t a = 0; a < d; ++a) {
        lo[a] -= grow;
        hi[a] += grow;
    }
    const double mass = total_mass(s.initial);
    auto record = [&](const std::string& what, const AuditResult& r) {
        std::ostringstream os;
        os.precision(6);
        os << what << ": " << (r.ok ? "ok" : "FAILED");
        if (!r.ok) os << " (" << r.what << " declared " << r.declared << " observed " << r.observed << " at " << r.witness << ")";
        out.lines.push_back(os.str());
        if (!r.ok && out.ok) {
            out.ok = false;
            out.failure = os.str();
        }
    };
    for (std::size_t i = 0; i < s.model.k(); ++i) {
        AuditBox box{lo, hi, s.model.kernels().row_sup(i) * mass, s.horizon};
        record("velocity[" + std::to_string(i) + "] " + c.velocity[i].type,
               audit_velocity(s.model.field(i), box, samples, c.seed + 17 * i + 1));
    }
    std::vector<double> zlo(d), zhi(d);
    for (std::size_t a = 0; a < d; ++a) {
        zhi[a] = hi[a] - lo[a];
        zlo[a] = -zhi[a];
    }
    for (std::size_t i = 0; i < s.model.k(); ++i)
        for (std::size_t j = 0; j < s.model.k(); ++j) {
            AuditBox box{zlo, zhi, 1.0, s.horizon};
            record("kernels[" + std::to_string(i) + "][" + std::to_string(j) + "] " + c.kernels[i][j].type,
                   audit_kernel(s.model.kernels()(i, j), box, samples, c.seed + 31 * (i * s.model.k() + j) + 7));
        }
    return out;
}

Scenario load_scenario(const std::string& path, ScenarioConfig* cfg_out)
{
    ScenarioConfig cfg = load_config(path);
    Scenario s = build_scenario(cfg);
    const ScenarioAudit audit = audit_scenario(cfg, s);
    if (!audit.ok) throw Error(path + ": metadata audit failed: " + audit.failure);
    if (cfg_out) *cfg_out = std::move(cfg);
    return s;
}

void apply_overrides(ScenarioConfig& c, const Overrides& o)
{
    if (o.n) {
        if (*o.n == 0) throw Error("--n must be positive");
        for (auto& sp : c.species)
            if (sp.initial.type == "density" || sp.initial.type == "random-cloud") sp.initial.n = *o.n;
    }
    if (o.dt) {
        if (!(*o.dt > 0.0)) throw Error("--dt must be positive");
        c.dt = *o.dt;
    }
    if (o.horizon) {
        if (!(*o.horizon > 0.0)) throw Error("--horizon must be positive");
        c.horizon = *o.horizon;
    }
    if (o.mode) {
        if (*o.mode != "direct" && *o.mode != "picard") throw Error("--mode must be 'direct' or 'picard'");
        c.mode = *o.mode;
    }
    if (o.seed) c.seed = *o.seed;
}

std::string bundled_scenario_dir()
{
    if (const char* env = std::getenv("NONLOCAL_SCENARIO_DIR"); env && *env) return env;
    return NONLOCAL_SCENARIO_DIR;
}

std::vector<std::string> bundled_scenarios()
{
    std::vector<std::string> names;
    for (const auto& e : std::filesystem::directory_iterator(bundled_scenario_dir()))
        if (e.path().extension() == ".json") names.push_back(e.path().stem().string());
    std::sort(names.begin(), names.end());
    return names;
}

std::string bundled_scenario_path(const std::string& name)
{
    return (std::filesystem::path(bundled_scenario_dir()) / (name + ".json")).string();
}

}  // namespace nonlocal
