#include <nonlocal/output.hpp>

#include <nonlocal/error.hpp>
#include <nonlocal/wasserstein.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>

namespace nonlocal {

namespace {

void append(std::string& out, const char* fmt, double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, fmt, v);
    out += buf;
}

std::string num(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string px(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

constexpr double kWidth = 640.0;
constexpr double kHeight = 400.0;
constexpr double kMargin = 40.0;

struct Frame
{
    double x0, x1, y0, y1;

    double sx(double x) const { return kMargin + (x - x0) / (x1 - x0) * (kWidth - 2 * kMargin); }
    double sy(double y) const { return kHeight - kMargin - (y - y0) / (y1 - y0) * (kHeight - 2 * kMargin); }
};

Frame make_frame(double x0, double x1, double y0, double y1)
{
    if (!(x1 > x0)) {
        x0 -= 0.5;
        x1 += 0.5;
    }
    if (!(y1 > y0)) {
        y0 -= 0.5;
        y1 += 0.5;
    }
    return {x0, x1, y0, y1};
}

std::string svg_open(const Frame& f, const std::string& title, const std::string& xlabel, const std::string& ylabel)
{
    std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + px(kWidth) + "\" height=\"" + px(kHeight) + "\">\n";
    s += "<title>" + title + "</title>\n";
    s += "<rect x=\"" + px(kMargin) + "\" y=\"" + px(kMargin) + "\" width=\"" + px(kWidth - 2 * kMargin) +
         "\" height=\"" + px(kHeight - 2 * kMargin) + "\" fill=\"none\" stroke=\"black\"/>\n";
    s += "<text x=\"" + px(kWidth / 2) + "\" y=\"" + px(kHeight - 8) + "\" text-anchor=\"middle\" font-size=\"12\">" +
         xlabel + " [" + num(f.x0) + ", " + num(f.x1) + "]</text>\n";
    s += "<text x=\"12\" y=\"" + px(kHeight / 2) + "\" font-size=\"12\" transform=\"rotate(-90 12 " + px(kHeight / 2) +
         ")\" text-anchor=\"middle\">" + ylabel + " [" + num(f.y0) + ", " + num(f.y1) + "]</text>\n";
    return s;
}

const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};

std::string polyline(const Frame& f, const std::vector<double>& xs, const std::vector<double>& ys, const char* color)
{
    std::string s = "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" points=\"";
    for (std::size_t n = 0; n < xs.size(); ++n) {
        if (n) s += ' ';
        s += px(f.sx(xs[n])) + "," + px(f.sy(ys[n]));
    }
    return s + "\"/>\n";
}

PlotFiles particle_cloud(const SolutionRecord& rec)
{
    PlotFiles out;
    const std::size_t d = rec.snapshots.front().state.dim();
    out.table = "frame,t,species,particle,x_1";
    if (d > 1) out.table += ",x_2";
    out.table += "\n";
    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin, ymin = xmin, ymax = -xmin;
    for (const auto& sn : rec.snapshots)
        for (std::size_t i = 0; i < sn.state.species_count(); ++i)
            for (std::size_t m = 0; m < sn.state[i].size(); ++m) {
                const auto p = sn.state[i].position(m);
                xmin = std::min(xmin, p[0]);
                xmax = std::max(xmax, p[0]);
                const double y = d > 1 ? p[1] : sn.time;
                ymin = std::min(ymin, y);
                ymax = std::max(ymax, y);
            }
    const Frame f = make_frame(xmin, xmax, ymin, ymax);
    out.svg = svg_open(f, "particle-cloud", "x_1", d > 1 ? "x_2" : "t");
    for (std::size_t n = 0; n < rec.snapshots.size(); ++n) {
        const auto& sn = rec.snapshots[n];
        out.svg += "<g class=\"frame\" data-t=\"" + num(sn.time) + "\">";
        for (std::size_t i = 0; i < sn.state.species_count(); ++i)
            for (std::size_t m = 0; m < sn.state[i].size(); ++m) {
                const auto p = sn.state[i].position(m);
                const double y = d > 1 ? p[1] : sn.time;
                out.table += std::to_string(n) + "," + num(sn.time) + "," + std::to_string(i) + "," + std::to_string(m) + "," + num(p[0]);
                if (d > 1) out.table += "," + num(p[1]);
                out.table += "\n";
                out.svg += "<circle cx=\"" + px(f.sx(p[0])) + "\" cy=\"" + px(f.sy(y)) + "\" r=\"1.2\" fill=\"" +
                           kColors[i % 5] + "\"/>";
            }
        out.svg += "</g>\n";
    }
    out.svg += "</svg>\n";
    return out;
}

PlotFiles curve(const std::string& title, const std::string& header, const std::string& ylabel,
                const std::vector<double>& xs, const std::vector<std::vector<double>>& series)
{
    PlotFiles out;
    out.table = header + "\n";
    double ymin = 0.0, ymax = 0.0;
    for (const auto& s : series)
        for (double v : s) {
            ymin = std::min(ymin, v);
            ymax = std::max(ymax, v);
        }
    for (std::size_t n = 0; n < xs.size(); ++n) {
        out.table += num(xs[n]);
        for (const auto& s : series) out.table += "," + num(s[n]);
        out.table += "\n";
    }
    const Frame f = make_frame(xs.empty() ? 0.0 : xs.front(), xs.empty() ? 1.0 : xs.back(), ymin, ymax);
    out.svg = svg_open(f, title, "x", ylabel);
    for (std::size_t q = 0; q < series.size(); ++q) out.svg += polyline(f, xs, series[q], kColors[q % 5]);
    out.svg += "</svg>\n";
    return out;
}

PlotFiles picard_decay(const SolutionRecord& rec)
{
    PlotFiles out;
    out.table = "window,t0,t1,iteration,distance\n";
    std::size_t longest = 0;
    for (const auto& w : rec.windows) longest = std::max(longest, w.distances.size());
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::size_t q = 0; q < rec.windows.size(); ++q) {
        const auto& w = rec.windows[q];
        for (std::size_t n = 0; n < w.distances.size(); ++n) {
            out.table += std::to_string(q) + "," + num(w.t0) + "," + num(w.t1) + "," + std::to_string(n + 1) + "," +
                         num(w.distances[n]) + "\n";
            const double l = std::log10(std::max(w.distances[n], 1e-300));
            lo = std::min(lo, l);
            hi = std::max(hi, l);
        }
    }
    if (rec.windows.empty()) lo = hi = 0.0;
    const Frame f = make_frame(1.0, static_cast<double>(std::max<std::size_t>(longest, 2)), lo, hi);
    out.svg = svg_open(f, "picard-decay", "iteration", "log10 distance");
    for (std::size_t q = 0; q < rec.windows.size(); ++q) {
        std::vector<double> xs, ys;
        for (std::size_t n = 0; n < rec.windows[q].distances.size(); ++n) {
            xs.push_back(static_cast<double>(n + 1));
            ys.push_back(std::log10(std::max(rec.windows[q].distances[n], 1e-300)));
        }
        out.svg += polyline(f, xs, ys, kColors[q % 5]);
    }
    out.svg += "</svg>\n";
    return out;
}

PlotFiles density_profile(const SolutionRecord& rec)
{
    const auto& last = rec.terminal();
    if (last.log_density.empty()) throw Error("density-profile plot needs a density-tracked record");
    PlotFiles out;
    out.table = "species,particle,x_1,density_initial,density_final\n";
    const auto& first = rec.snapshots.front();
    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin, ymax = 0.0;
    for (std::size_t i = 0; i < last.state.species_count(); ++i)
        for (std::size_t m = 0; m < last.state[i].size(); ++m) {
            const double x = last.state[i].position(m)[0];
            const double d0 = std::exp(first.log_density[i][m]);
            const double d1 = std::exp(last.log_density[i][m]);
            out.table += std::to_string(i) + "," + std::to_string(m) + "," + num(x) + "," + num(d0) + "," + num(d1) + "\n";
            xmin = std::min({xmin, x, first.state[i].position(m)[0]});
            xmax = std::max({xmax, x, first.state[i].position(m)[0]});
            ymax = std::max({ymax, d0, d1});
        }
    const Frame f = make_frame(xmin, xmax, 0.0, ymax);
    out.svg = svg_open(f, "density-profile", "x_1", "density");
    for (std::size_t i = 0; i < last.state.species_count(); ++i) {
        std::vector<double> x0, y0, x1, y1;
        for (std::size_t m = 0; m < last.state[i].size(); ++m) {
            x0.push_back(first.state[i].position(m)[0]);
            y0.push_back(std::exp(first.log_density[i][m]));
            x1.push_back(last.state[i].position(m)[0]);
            y1.push_back(std::exp(last.log_density[i][m]));
        }
        out.svg += polyline(f, x0, y0, "#999999");
        out.svg += polyline(f, x1, y1, kColors[i % 5]);
    }
    out.svg += "</svg>\n";
    return out;
}

}  // namespace

std::string trajectory_csv(const SolutionRecord& record)
{
    std::string out;
    if (record.snapshots.empty()) return out;
    const std::size_t d = record.snapshots.front().state.dim();
    const bool dens = !record.snapshots.front().log_density.empty();
    out = "t,species,particle";
    for (std::size_t a = 0; a < d; ++a) out += ",x_" + std::to_string(a + 1);
    out += ",weight";
    if (dens) out += ",logdensity";
    out += "\n";
    for (const auto& sn : record.snapshots)
        for (std::size_t i = 0; i < sn.state.species_count(); ++i)
            for (std::size_t m = 0; m < sn.state[i].size(); ++m) {
                out += num(sn.time) + "," + std::to_string(i) + "," + std::to_string(m);
                for (double x : sn.state[i].position(m)) {
                    out += ',';
                    append(out, "%.17g", x);
                }
                out += "," + num(sn.state[i].weight(m));
                if (dens) out += "," + num(sn.log_density[i][m]);
                out += "\n";
            }
    return out;
}

std::string reports_csv(const std::vector<BoundReport>& reports)
{
    std::string out = "check,lhs,rhs,slack,pass,fingerprint\n";
    for (const auto& r : reports)
        out += r.check + "," + num(r.lhs) + "," + num(r.rhs) + "," + num(r.slack) + "," + (r.pass ? "1" : "0") + "," +
               r.fingerprint + "\n";
    return out;
}

void write_text(const std::string& path, const std::string& text)
{
    const auto parent = std::filesystem::path(path).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path + "'");
    out << text;
}

PlotKind parse_plot_kind(const std::string& name)
{
    if (name == "particle-cloud") return PlotKind::particle_cloud;
    if (name == "w1-curve") return PlotKind::w1_curve;
    if (name == "picard-decay") return PlotKind::picard_decay;
    if (name == "density-profile") return PlotKind::density_profile;
    throw Error("unknown plot kind '" + name + "'");
}

std::string plot_kind_name(PlotKind kind)
{
    switch (kind) {
    case PlotKind::particle_cloud: return "particle-cloud";
    case PlotKind::w1_curve: return "w1-curve";
    case PlotKind::picard_decay: return "picard-decay";
    case PlotKind::density_profile: return "density-profile";
    }
    return "unknown";
}

PlotFiles render_plot(const SolutionRecord& record, PlotKind kind, const SolutionRecord* partner)
{
    if (record.snapshots.empty()) throw Error("cannot plot an empty record");
    switch (kind) {
    case PlotKind::particle_cloud: return particle_cloud(record);
    case PlotKind::picard_decay: return picard_decay(record);
    case PlotKind::density_profile: return density_profile(record);
    case PlotKind::w1_curve: {
        if (!partner || partner->snapshots.size() != record.snapshots.size())
            throw Error("w1-curve needs a partner record on the same time grid");
        std::vector<double> t, w;
        for (std::size_t n = 0; n < record.snapshots.size(); ++n) {
            t.push_back(record.snapshots[n].time);
            w.push_back(w1_vector(record.snapshots[n].state, partner->snapshots[n].state));
        }
        return curve("w1-curve", "t,w1", "W1", t, {w});
    }
    }
    throw Error("unknown plot kind");
}

void emit_plotdata(const SolutionRecord& record, PlotKind kind, const std::string& dir, const SolutionRecord* partner)
{
    const PlotFiles f = render_plot(record, kind, partner);
    const auto base = std::filesystem::path(dir) / "plot" / plot_kind_name(kind);
    write_text(base.string() + ".csv", f.table);
    write_text(base.string() + ".svg", f.svg);
}

}  // namespace nonlocal
