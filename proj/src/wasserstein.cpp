#include <nonlocal/wasserstein.hpp>

#include <nonlocal/error.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

namespace nonlocal {

namespace {

double distance(std::span<const double> a, std::span<const double> b)
{
    double s = 0.0;
    for (std::size_t c = 0; c < a.size(); ++c) {
        const double d = a[c] - b[c];
        s += d * d;
    }
    return std::sqrt(s);
}

}  // namespace

void require_equal_mass(const ParticleMeasure& mu, const ParticleMeasure& nu)
{
    if (mu.dim() != nu.dim()) throw Error("W1: dimension mismatch");
    const double a = total_mass(mu);
    const double b = total_mass(nu);
    if (std::abs(a - b) > kMassTolerance * std::max({a, b, 1e-300})) {
        std::ostringstream os;
        os.precision(17);
        os << "W1 undefined for unequal masses (" << a << " vs " << b << ")";
        throw Error(os.str());
    }
}

double w1_1d(const ParticleMeasure& mu, const ParticleMeasure& nu)
{
    if (mu.dim() != 1 || nu.dim() != 1) throw Error("w1_1d requires dim = 1");
    require_equal_mass(mu, nu);
    struct Atom
    {
        double x;
        double w;  // + for mu, - for nu
    };
    std::vector<Atom> atoms;
    atoms.reserve(mu.size() + nu.size());
    for (std::size_t m = 0; m < mu.size(); ++m) atoms.push_back({mu.positions()[m], mu.weight(m)});
    for (std::size_t m = 0; m < nu.size(); ++m) atoms.push_back({nu.positions()[m], -nu.weight(m)});
    std::stable_sort(atoms.begin(), atoms.end(), [](const Atom& a, const Atom& b) { return a.x < b.x; });

    // Integral of |F_mu - F_nu|.
    double cdf = 0.0, cost = 0.0;
    for (std::size_t n = 0; n + 1 < atoms.size(); ++n) {
        cdf += atoms[n].w;
        cost += std::abs(cdf) * (atoms[n + 1].x - atoms[n].x);
    }
    return cost;
}

W1Result w1_exact(const ParticleMeasure& mu, const ParticleMeasure& nu, std::size_t pair_cap)
{
    require_equal_mass(mu, nu);
    const std::size_t n = mu.size(), m = nu.size();
    if (n * m > pair_cap) {
        std::ostringstream os;
        os << "w1_exact: " << n << " x " << m << " pairs exceed the cap of " << pair_cap
           << "; use w1_1d for one-dimensional data or subsample";
        throw Error(os.str());
    }
    W1Result res;
    if (n == 0 || m == 0) return res;

    std::vector<double> cost(n * m);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) cost[i * m + j] = distance(mu.position(i), nu.position(j));

    const double scale = std::max(total_mass(mu), total_mass(nu));
    const double eps = 1e-15 * scale;
    std::vector<double> supply = mu.weights(), demand = nu.weights();
    std::vector<double> flow(n * m, 0.0);

    // Potentials: p_src[i], p_tgt[j]; super source fixed at 0, super sink p_sink.
    // Reduced costs: S->i: -p_src[i]; i->j: c + p_src[i] - p_tgt[j];
    // j->i (flow > 0): -c - p_src[i] + p_tgt[j]; j->T: p_tgt[j] - p_sink.
    std::vector<double> p_src(n, 0.0), p_tgt(m);
    for (std::size_t j = 0; j < m; ++j) {
        double lo = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i) lo = std::min(lo, cost[i * m + j]);
        p_tgt[j] = lo;
    }
    double p_sink = *std::min_element(p_tgt.begin(), p_tgt.end());

    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> d_src(n), d_tgt(m);
    std::vector<char> done_src(n), done_tgt(m);
    std::vector<std::ptrdiff_t> pred_tgt(m), pred_src(n);  // pred_src = -1: from super source

    auto remaining = [&](const std::vector<double>& v) {
        for (double x : v)
            if (x > eps) return true;
        return false;
    };

    while (remaining(supply) && remaining(demand)) {
        std::fill(d_src.begin(), d_src.end(), inf);
        std::fill(d_tgt.begin(), d_tgt.end(), inf);
        std::fill(done_src.begin(), done_src.end(), 0);
        std::fill(done_tgt.begin(), done_tgt.end(), 0);
        for (std::size_t i = 0; i < n; ++i)
            if (supply[i] > eps) {
                d_src[i] = std::max(0.0, -p_src[i]);
                pred_src[i] = -1;
            }

        // Dense Dijkstra over n + m nodes.
        for (;;) {
            double best = inf;
            std::ptrdiff_t pick = -1;
            bool pick_src = true;
            for (std::size_t i = 0; i < n; ++i)
                if (!done_src[i] && d_src[i] < best) {
                    best = d_src[i];
                    pick = static_cast<std::ptrdiff_t>(i);
                    pick_src = true;
                }
            for (std::size_t j = 0; j < m; ++j)
                if (!done_tgt[j] && d_tgt[j] < best) {
                    best = d_tgt[j];
                    pick = static_cast<std::ptrdiff_t>(j);
                    pick_src = false;
                }
            if (pick < 0) break;
            const auto u = static_cast<std::size_t>(pick);
            if (pick_src) {
                done_src[u] = 1;
                for (std::size_t j = 0; j < m; ++j) {
                    if (done_tgt[j]) continue;
                    const double rc = std::max(0.0, cost[u * m + j] + p_src[u] - p_tgt[j]);
                    if (best + rc < d_tgt[j]) {
                        d_tgt[j] = best + rc;
                        pred_tgt[j] = pick;
                    }
                }
            } else {
                done_tgt[u] = 1;
                for (std::size_t i = 0; i < n; ++i) {
                    if (done_src[i] || flow[i * m + u] <= eps) continue;
                    const double rc = std::max(0.0, -cost[i * m + u] - p_src[i] + p_tgt[u]);
                    if (best + rc < d_src[i]) {
                        d_src[i] = best + rc;
                        pred_src[i] = pick;
                    }
                }
            }
        }

        // Sink: cheapest target with remaining demand.
        double dist_sink = inf;
        std::size_t end = m;
        for (std::size_t j = 0; j < m; ++j)
            if (demand[j] > eps && d_tgt[j] < inf) {
                const double dj = d_tgt[j] + std::max(0.0, p_tgt[j] - p_sink);
                if (dj < dist_sink) {
                    dist_sink = dj;
                    end = j;
                }
            }
        if (end == m) throw Error("w1_exact: no augmenting path (internal error)");

        for (std::size_t i = 0; i < n; ++i) p_src[i] += std::min(d_src[i], dist_sink);
        for (std::size_t j = 0; j < m; ++j) p_tgt[j] += std::min(d_tgt[j], dist_sink);
        p_sink += dist_sink;

        // Bottleneck along the path.
        double delta = demand[end];
        std::size_t j = end;
        std::size_t root = 0;
        for (;;) {
            const auto i = static_cast<std::size_t>(pred_tgt[j]);
            if (pred_src[i] < 0) {
                root = i;
                break;
            }
            const auto jb = static_cast<std::size_t>(pred_src[i]);
            delta = std::min(delta, flow[i * m + jb]);
            j = jb;
        }
        delta = std::min(delta, supply[root]);

        j = end;
        for (;;) {
            const auto i = static_cast<std::size_t>(pred_tgt[j]);
            flow[i * m + j] += delta;
            if (pred_src[i] < 0) break;
            const auto jb = static_cast<std::size_t>(pred_src[i]);
            flow[i * m + jb] -= delta;
            if (flow[i * m + jb] <= eps) flow[i * m + jb] = 0.0;
            j = jb;
        }
        supply[root] -= delta;
        demand[end] -= delta;
        if (supply[root] <= eps) supply[root] = 0.0;
        if (demand[end] <= eps) demand[end] = 0.0;
    }

    auto& cert = res.certificate;
    cert.u.resize(n);
    cert.v.resize(m);
    for (std::size_t i = 0; i < n; ++i) cert.u[i] = -p_src[i];
    for (std::size_t jj = 0; jj < m; ++jj) cert.v[jj] = p_tgt[jj];
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t jj = 0; jj < m; ++jj)
            worst = std::max(worst, cert.u[i] + cert.v[jj] - cost[i * m + jj]);
    cert.max_dual_violation = worst;
    for (std::size_t i = 0; i < n; ++i) cert.dual_objective += mu.weight(i) * cert.u[i];
    for (std::size_t jj = 0; jj < m; ++jj) cert.dual_objective += nu.weight(jj) * cert.v[jj];

    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t jj = 0; jj < m; ++jj) {
            const double f = flow[i * m + jj];
            if (f <= 0.0) continue;
            res.plan.pairs.push_back({i, jj, f});
            res.plan.cost += f * cost[i * m + jj];
            cert.complementary_slackness += f * std::abs(cost[i * m + jj] - cert.u[i] - cert.v[jj]);
        }
    res.distance = res.plan.cost;
    return res;
}

double w1(const ParticleMeasure& mu, const ParticleMeasure& nu)
{
    return mu.dim() == 1 ? w1_1d(mu, nu) : w1_exact(mu, nu).distance;
}

std::vector<TestFunction> lipschitz_test_family(const ParticleMeasure& mu, const ParticleMeasure& nu,
                                                std::size_t random_count, std::uint64_t seed)
{
    const std::size_t d = mu.dim();
    std::vector<TestFunction> fam;
    for (std::size_t a = 0; a < d; ++a)
        for (double sign : {1.0, -1.0})
            fam.push_back({(sign > 0 ? "+x" : "-x") + std::to_string(a + 1),
                           [a, sign](std::span<const double> x) { return sign * x[a]; }});
    auto add_points = [&](const ParticleMeasure& src, const char* tag) {
        for (std::size_t m = 0; m < src.size(); ++m) {
            std::vector<double> p(src.position(m).begin(), src.position(m).end());
            for (double sign : {1.0, -1.0})
                fam.push_back({std::string(sign > 0 ? "+" : "-") + "dist(" + tag + std::to_string(m) + ")",
                               [p, sign](std::span<const double> x) { return sign * distance(x, p); }});
        }
    };
    add_points(mu, "mu");
    add_points(nu, "nu");

    // Random max-of-affine pieces anchored near the data.
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss;
    std::uniform_int_distribution<std::size_t> pieces(1, 4);
    std::vector<std::span<const double>> anchors;
    for (std::size_t m = 0; m < mu.size(); ++m) anchors.push_back(mu.position(m));
    for (std::size_t m = 0; m < nu.size(); ++m) anchors.push_back(nu.position(m));
    for (std::size_t r = 0; r < random_count && !anchors.empty(); ++r) {
        const std::size_t l = pieces(rng);
        std::vector<double> slopes(l * d), offsets(l);
        for (std::size_t q = 0; q < l; ++q) {
            double norm = 0.0;
            for (std::size_t a = 0; a < d; ++a) {
                slopes[q * d + a] = gauss(rng);
                norm += slopes[q * d + a] * slopes[q * d + a];
            }
            norm = std::sqrt(norm);
            if (norm > 1.0)
                for (std::size_t a = 0; a < d; ++a) slopes[q * d + a] /= norm;
            const auto anchor = anchors[rng() % anchors.size()];
            double o = 0.0;
            for (std::size_t a = 0; a < d; ++a) o -= slopes[q * d + a] * anchor[a];
            offsets[q] = o;
        }
        fam.push_back({"maxaffine" + std::to_string(r), [slopes, offsets, d, l](std::span<const double> x) {
                           double best = -std::numeric_limits<double>::infinity();
                           for (std::size_t q = 0; q < l; ++q) {
                               double v = offsets[q];
                               for (std::size_t a = 0; a < d; ++a) v += slopes[q * d + a] * x[a];
                               best = std::max(best, v);
                           }
                           return best;
                       }});
    }
    return fam;
}

DualBound w1_dual_lower_bound(const ParticleMeasure& mu, const ParticleMeasure& nu,
                              const std::vector<TestFunction>& family)
{
    DualBound best{0.0, "none"};
    bool first = true;
    for (const auto& f : family) {
        double s = 0.0;
        for (std::size_t m = 0; m < mu.size(); ++m) s += mu.weight(m) * f.phi(mu.position(m));
        for (std::size_t m = 0; m < nu.size(); ++m) s -= nu.weight(m) * f.phi(nu.position(m));
        if (first || s > best.value) {
            best = {s, f.label};
            first = false;
        }
    }
    return best;
}

double w1_vector(const MeasureVector& rho, const MeasureVector& sigma)
{
    if (rho.species_count() != sigma.species_count()) throw Error("w1_vector: species count mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < rho.species_count(); ++i) {
        try {
            s += w1(rho[i], sigma[i]);
        } catch (const Error& e) {
            throw Error("species " + std::to_string(i) + ": " + e.what());
        }
    }
    return s;
}

double coupling_cost(const ParticleMeasure& a, const ParticleMeasure& b)
{
    if (a.size() != b.size() || a.dim() != b.dim()) throw Error("coupling_cost: ensembles differ in shape");
    double s = 0.0;
    for (std::size_t m = 0; m < a.size(); ++m) s += a.weight(m) * distance(a.position(m), b.position(m));
    return s;
}

ParticleMeasure canonicalize(const ParticleMeasure& mu)
{
    std::map<std::vector<double>, double> merged;
    for (std::size_t m = 0; m < mu.size(); ++m)
        merged[std::vector<double>(mu.position(m).begin(), mu.position(m).end())] += mu.weight(m);
    std::vector<double> pos, w;
    for (const auto& [p, weight] : merged) {
        pos.insert(pos.end(), p.begin(), p.end());
        w.push_back(weight);
    }
    return ParticleMeasure(mu.dim(), std::move(pos), std::move(w));
}

}  // namespace nonlocal
