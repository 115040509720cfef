#include "kubolab/io.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

namespace kubolab::io {

namespace fs = std::filesystem;

std::string iso_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string unit_filename(int index) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d.json", index);
    return buf;
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_text_file(const fs::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw ConfigError("cannot open for writing: " + p.string(), "output");
    out << content;
}

nlohmann::json read_json_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw ConfigError("cannot open: " + p.string(), "input");
    nlohmann::json j;
    in >> j;
    return j;
}

namespace {

std::string sanitize(const std::string& name) {
    std::string s = name;
    std::replace(s.begin(), s.end(), '.', '_');
    return s;
}

std::string block_csv(const ensemble::Axis& axis, const std::vector<ensemble::Welford>& cells) {
    std::ostringstream out;
    if (axis.kind == "bins") {
        out << "bin_left,bin_right,mass,stderr\n";
        for (std::size_t i = 0; i < cells.size(); ++i)
            out << format_double(axis.edges[i]) << ',' << format_double(axis.edges[i + 1])
                << ',' << format_double(cells[i].mean) << ','
                << format_double(cells[i].stderr_()) << '\n';
    } else {
        out << "x,mean,stderr\n";
        for (std::size_t i = 0; i < cells.size(); ++i)
            out << format_double(axis.points[i]) << ',' << format_double(cells[i].mean)
                << ',' << format_double(cells[i].stderr_()) << '\n';
    }
    return out.str();
}

std::string primary_block(const std::string& task) {
    if (task == "dos") return "dos";
    if (task == "phi") return "frequency";
    if (task == "sigma") return "gamma";
    if (task == "current") return "J";
    if (task == "diag-decay") return "decay";
    return "";
}

} // namespace

void write_estimate_csv(const fs::path& dir, const std::string& task,
                        const ensemble::EnsembleEstimate& est) {
    const std::string primary = primary_block(task);
    for (const auto& [name, cells] : est.blocks) {
        const auto& axis = est.axes.at(name);
        const std::string file =
            name == primary ? "result.csv" : "result_" + sanitize(name) + ".csv";
        write_text_file(dir / file, block_csv(axis, cells));
    }

    if (est.meta.contains("sweep_points")) {
        // columns: label, mu, T, then every per-point scalar
        std::vector<std::string> suffixes;
        const std::string first = est.meta["sweep_points"][0]["label"];
        for (const auto& [name, w] : est.scalars) {
            (void)w;
            if (name.rfind(first + ".", 0) == 0)
                suffixes.push_back(name.substr(first.size() + 1));
        }
        std::ostringstream out;
        out << "label,mu,T";
        for (const auto& s : suffixes) out << ',' << s << "_mean," << s << "_stderr";
        out << '\n';
        for (const auto& pt : est.meta["sweep_points"]) {
            const std::string label = pt["label"];
            out << label << ',' << format_double(pt["mu"].get<double>()) << ','
                << format_double(pt["T"].get<double>());
            for (const auto& s : suffixes) {
                const auto& w = est.scalars.at(label + "." + s);
                out << ',' << format_double(w.mean) << ',' << format_double(w.stderr_());
            }
            out << '\n';
        }
        write_text_file(dir / "summary.csv", out.str());
    }
}

std::string current_trace_csv(const response::CurrentTrace& trace) {
    std::ostringstream out;
    out << "t,J,imag_residual\n";
    for (std::size_t i = 0; i < trace.times.size(); ++i)
        out << format_double(trace.times[i]) << ',' << format_double(trace.values[i]) << ','
            << format_double(trace.imag_residual[i]) << '\n';
    return out.str();
}

std::string binned_measure_csv(const BinnedMeasure& binned,
                               const std::vector<double>* stderrs) {
    std::ostringstream out;
    out << "bin_left,bin_right,mass,stderr\n";
    for (int i = 0; i < binned.grid.count; ++i)
        out << format_double(binned.grid.left_edge(i)) << ','
            << format_double(binned.grid.right_edge(i)) << ','
            << format_double(binned.masses[i]) << ','
            << format_double(stderrs ? (*stderrs)[i] : 0.0) << '\n';
    return out.str();
}

namespace {

struct Frame {
    double x0, x1, y0, y1;
    static constexpr int width = 640, height = 400, pad = 45;
    double px(double x) const {
        return pad + (x - x0) / std::max(x1 - x0, 1e-300) * (width - 2 * pad);
    }
    double py(double y) const {
        return height - pad - (y - y0) / std::max(y1 - y0, 1e-300) * (height - 2 * pad);
    }
};

std::string svg_open(const Frame& f, const std::string& title) {
    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << Frame::width
        << "\" height=\"" << Frame::height << "\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        << "<text x=\"" << Frame::width / 2 << "\" y=\"20\" text-anchor=\"middle\" "
        << "font-family=\"sans-serif\" font-size=\"14\">" << title << "</text>\n"
        << "<line x1=\"" << f.px(f.x0) << "\" y1=\"" << f.py(f.y0) << "\" x2=\""
        << f.px(f.x1) << "\" y2=\"" << f.py(f.y0) << "\" stroke=\"black\"/>\n"
        << "<line x1=\"" << f.px(f.x0) << "\" y1=\"" << f.py(f.y0) << "\" x2=\""
        << f.px(f.x0) << "\" y2=\"" << f.py(f.y1) << "\" stroke=\"black\"/>\n"
        << "<text x=\"" << f.px(f.x0) << "\" y=\"" << Frame::height - 8
        << "\" font-family=\"sans-serif\" font-size=\"11\">" << format_double(f.x0)
        << "</text>\n"
        << "<text x=\"" << f.px(f.x1) << "\" y=\"" << Frame::height - 8
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
        << format_double(f.x1) << "</text>\n"
        << "<text x=\"4\" y=\"" << f.py(f.y1) + 4
        << "\" font-family=\"sans-serif\" font-size=\"11\">" << format_double(f.y1)
        << "</text>\n";
    return out.str();
}

Frame fit_frame(double x0, double x1, double ylo, double yhi) {
    if (yhi <= ylo) yhi = ylo + 1;
    return Frame{x0, x1, std::min(0.0, ylo), yhi * 1.05};
}

} // namespace

std::string svg_step_chart(const std::vector<double>& edges,
                           const std::vector<double>& values, const std::string& title) {
    const double lo = *std::min_element(values.begin(), values.end());
    const double hi = *std::max_element(values.begin(), values.end());
    Frame f = fit_frame(edges.front(), edges.back(), lo, hi);
    std::ostringstream out;
    out << svg_open(f, title) << "<polyline fill=\"none\" stroke=\"steelblue\" points=\"";
    for (std::size_t i = 0; i < values.size(); ++i) {
        out << f.px(edges[i]) << ',' << f.py(values[i]) << ' ';
        out << f.px(edges[i + 1]) << ',' << f.py(values[i]) << ' ';
    }
    out << "\"/>\n</svg>\n";
    return out.str();
}

std::string svg_line_chart(const std::vector<double>& x, const std::vector<double>& y,
                           const std::string& title) {
    const double lo = *std::min_element(y.begin(), y.end());
    const double hi = *std::max_element(y.begin(), y.end());
    Frame f = fit_frame(x.front(), x.back(), lo, hi);
    std::ostringstream out;
    out << svg_open(f, title) << "<polyline fill=\"none\" stroke=\"indianred\" points=\"";
    for (std::size_t i = 0; i < x.size(); ++i) out << f.px(x[i]) << ',' << f.py(y[i]) << ' ';
    out << "\"/>\n</svg>\n";
    return out.str();
}

} // namespace kubolab::io
