#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "wim/experiments.hpp"
#include "wim/png_io.hpp"

namespace wim::experiments {

namespace {

std::string fmt_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void require_csv_safe(const std::string& s) {
    if (s.find_first_of(",\n\r\"") != std::string::npos) throw Error("csv: field contains a separator: " + s);
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

double parse_real(const std::string& s, std::size_t line) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size())
        throw Error("csv line " + std::to_string(line) + ": bad number '" + s + "'");
    return v;
}

unsigned long long parse_unsigned(const std::string& s, std::size_t line) {
    if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
        throw Error("csv line " + std::to_string(line) + ": bad integer '" + s + "'");
    return std::stoull(s);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path);
    out << text;
    if (!out) throw Error("write failed: " + path);
}

}  // namespace

std::string records_to_csv(const std::vector<ExperimentRecord>& records) {
    std::string out = kCsvHeader;
    out += '\n';
    for (const auto& r : records) {
        require_csv_safe(r.experiment);
        require_csv_safe(r.method);
        out += r.experiment + ',' + r.method + ',' + std::to_string(r.train_size) + ',' +
               std::to_string(r.repetition) + ',' + fmt_real(r.train_error) + ',' + fmt_real(r.test_error) + ',' +
               fmt_real(r.risk_diff) + ',' + std::to_string(r.seed) + ',' + fmt_real(r.wall_time) + '\n';
    }
    return out;
}

std::vector<ExperimentRecord> parse_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw Error("csv: empty input");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kCsvHeader) throw Error("csv: unexpected header");
    std::vector<ExperimentRecord> out;
    std::size_t n = 1;
    while (std::getline(in, line)) {
        ++n;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto f = split(line, ',');
        if (f.size() != 9) throw Error("csv line " + std::to_string(n) + ": expected 9 fields");
        ExperimentRecord r;
        r.experiment = f[0];
        r.method = f[1];
        r.train_size = parse_unsigned(f[2], n);
        r.repetition = parse_unsigned(f[3], n);
        r.train_error = parse_real(f[4], n);
        r.test_error = parse_real(f[5], n);
        r.risk_diff = parse_real(f[6], n);
        r.seed = parse_unsigned(f[7], n);
        r.wall_time = parse_real(f[8], n);
        if (r.risk_diff != std::abs(r.train_error - r.test_error))
            throw Error("csv line " + std::to_string(n) + ": risk_diff is not |train_error - test_error|");
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<ExperimentRecord> read_csv(const std::string& path) { return parse_csv(read_file(path)); }

std::vector<CellSummary> summarize(const std::vector<ExperimentRecord>& records) {
    std::vector<CellSummary> out;
    struct Acc {
        double s1[3] = {0, 0, 0}, s2[3] = {0, 0, 0};
    };
    std::vector<Acc> acc;
    for (const auto& r : records) {
        std::size_t k = 0;
        while (k < out.size() && !(out[k].experiment == r.experiment && out[k].method == r.method &&
                                   out[k].train_size == r.train_size))
            ++k;
        if (k == out.size()) {
            out.push_back({r.experiment, r.method, r.train_size});
            acc.emplace_back();
        }
        ++out[k].count;
        const double v[3] = {r.test_error, r.train_error, r.risk_diff};
        for (int m = 0; m < 3; ++m) {
            acc[k].s1[m] += v[m];
            acc[k].s2[m] += v[m] * v[m];
        }
    }
    for (std::size_t k = 0; k < out.size(); ++k) {
        const double n = static_cast<double>(out[k].count);
        double mean[3], se[3];
        for (int m = 0; m < 3; ++m) {
            mean[m] = acc[k].s1[m] / n;
            const double var = n > 1 ? std::max(0.0, (acc[k].s2[m] - n * mean[m] * mean[m]) / (n - 1)) : 0.0;
            se[m] = std::sqrt(var / n);
        }
        out[k].test_mean = mean[0];
        out[k].test_stderr = se[0];
        out[k].train_mean = mean[1];
        out[k].train_stderr = se[1];
        out[k].risk_mean = mean[2];
        out[k].risk_stderr = se[2];
    }
    return out;
}

const CellSummary* find_summary(const std::vector<CellSummary>& summaries, const std::string& experiment,
                                const std::string& method, std::size_t train_size) {
    for (const auto& s : summaries)
        if (s.experiment == experiment && s.method == method && s.train_size == train_size) return &s;
    return nullptr;
}

namespace {

const char* method_color(const std::string& m) {
    if (m == "CL") return "#d62728";
    if (m == "CL-weak-reg") return "#ff7f0e";
    if (m == "CL-strong-reg") return "#1f77b4";
    if (m == "IM") return "#2ca02c";
    if (m == "RF") return "#7f7f7f";
    if (m == "CL-CRF") return "#9467bd";
    return "#000000";
}

std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

}  // namespace

std::string svg_plot(const std::vector<CellSummary>& summaries, const std::string& experiment, PlotMetric metric) {
    std::vector<const CellSummary*> cells;
    std::vector<std::string> methods;
    std::vector<std::size_t> sizes;
    for (const auto& s : summaries) {
        if (s.experiment != experiment) continue;
        cells.push_back(&s);
        if (std::find(methods.begin(), methods.end(), s.method) == methods.end()) methods.push_back(s.method);
        if (std::find(sizes.begin(), sizes.end(), s.train_size) == sizes.end()) sizes.push_back(s.train_size);
    }
    if (cells.empty()) throw Error("svg_plot: no records for experiment " + experiment);
    std::sort(sizes.begin(), sizes.end());
    auto value = [&](const CellSummary& c) {
        return metric == PlotMetric::test_error ? std::pair{c.test_mean, c.test_stderr}
                                                : std::pair{c.risk_mean, c.risk_stderr};
    };
    double lo = 1e300, hi = -1e300;
    for (const auto* c : cells) {
        const auto [m, se] = value(*c);
        lo = std::min(lo, m - se);
        hi = std::max(hi, m + se);
    }
    if (hi - lo < 1e-9) {
        lo -= 0.01;
        hi += 0.01;
    }
    const double pad = 0.05 * (hi - lo);
    lo = std::max(0.0, lo - pad);
    hi += pad;

    const double W = 640, H = 420, left = 70, right = 150, top = 40, bottom = 60;
    const double pw = W - left - right, ph = H - top - bottom;
    const double lx0 = std::log10(static_cast<double>(std::max<std::size_t>(sizes.front(), 1)));
    double lx1 = std::log10(static_cast<double>(std::max<std::size_t>(sizes.back(), 1)));
    const bool single = lx1 - lx0 < 1e-12;
    if (single) lx1 = lx0 + 1.0;
    auto px = [&](std::size_t t) {
        if (single) return left + 0.5 * pw;
        return left + pw * (std::log10(static_cast<double>(std::max<std::size_t>(t, 1))) - lx0) / (lx1 - lx0);
    };
    auto py = [&](double v) { return top + ph * (1.0 - (v - lo) / (hi - lo)); };

    std::ostringstream o;
    const std::string ylabel = metric == PlotMetric::test_error ? "test error" : "risk difference";
    o << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 "
      << W << ' ' << H << "\">\n";
    o << "<rect x=\"0\" y=\"0\" width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
    o << "<text x=\"" << left + pw / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"15\">"
      << xml_escape(experiment + ": " + ylabel) << "</text>\n";
    o << "<g stroke=\"black\" stroke-width=\"1\" fill=\"none\">\n";
    o << "<line x1=\"" << left << "\" y1=\"" << top + ph << "\" x2=\"" << left + pw << "\" y2=\"" << top + ph
      << "\"/>\n";
    o << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << top + ph << "\"/>\n";
    o << "</g>\n<g font-family=\"sans-serif\" font-size=\"11\">\n";
    for (std::size_t t : sizes) {
        o << "<line x1=\"" << num(px(t)) << "\" y1=\"" << top + ph << "\" x2=\"" << num(px(t)) << "\" y2=\""
          << top + ph + 5 << "\" stroke=\"black\"/>\n";
        o << "<text x=\"" << num(px(t)) << "\" y=\"" << top + ph + 18 << "\" text-anchor=\"middle\">" << t
          << "</text>\n";
    }
    for (int k = 0; k <= 5; ++k) {
        const double v = lo + (hi - lo) * k / 5.0;
        o << "<line x1=\"" << left - 5 << "\" y1=\"" << num(py(v)) << "\" x2=\"" << left << "\" y2=\"" << num(py(v))
          << "\" stroke=\"black\"/>\n";
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.3f", v);
        o << "<text x=\"" << left - 8 << "\" y=\"" << num(py(v) + 4) << "\" text-anchor=\"end\">" << buf
          << "</text>\n";
    }
    o << "<text x=\"" << left + pw / 2 << "\" y=\"" << H - 15
      << "\" text-anchor=\"middle\" font-size=\"13\">training set size T</text>\n";
    o << "<text x=\"18\" y=\"" << top + ph / 2 << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 18 "
      << top + ph / 2 << ")\">" << xml_escape(ylabel) << "</text>\n";
    o << "</g>\n";

    for (std::size_t mi = 0; mi < methods.size(); ++mi) {
        const std::string& m = methods[mi];
        const char* color = method_color(m);
        std::string points;
        o << "<g stroke=\"" << color << "\" fill=\"" << color << "\">\n";
        for (std::size_t t : sizes) {
            const CellSummary* c = find_summary(summaries, experiment, m, t);
            if (!c) continue;
            const auto [mean, se] = value(*c);
            const double x = px(t);
            points += num(x) + "," + num(py(mean)) + " ";
            o << "<line x1=\"" << num(x) << "\" y1=\"" << num(py(mean - se)) << "\" x2=\"" << num(x) << "\" y2=\""
              << num(py(mean + se)) << "\" stroke-width=\"1\"/>\n";
            o << "<circle cx=\"" << num(x) << "\" cy=\"" << num(py(mean)) << "\" r=\"3\"/>\n";
        }
        o << "<polyline points=\"" << points << "\" fill=\"none\" stroke-width=\"2\"/>\n</g>\n";
        const double ly = top + 10 + 20.0 * static_cast<double>(mi);
        o << "<line x1=\"" << left + pw + 15 << "\" y1=\"" << ly << "\" x2=\"" << left + pw + 40 << "\" y2=\"" << ly
          << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
        o << "<text x=\"" << left + pw + 46 << "\" y=\"" << ly + 4
          << "\" font-family=\"sans-serif\" font-size=\"12\">" << xml_escape(m) << "</text>\n";
    }
    o << "</svg>\n";
    return o.str();
}

std::vector<std::string> emit_outputs(const std::vector<ExperimentRecord>& records, const std::string& dir,
                                      const std::vector<ChainStrip>& strips) {
    namespace fs = std::filesystem;
    if (records.empty()) throw Error("emit_outputs: no records");
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw Error("emit_outputs: cannot create directory " + dir);
    std::vector<std::string> written;
    const std::string csv = (fs::path(dir) / "results.csv").string();
    write_file(csv, records_to_csv(records));
    written.push_back(csv);

    const auto summaries = summarize(records);
    std::vector<std::string> experiments;
    for (const auto& s : summaries)
        if (std::find(experiments.begin(), experiments.end(), s.experiment) == experiments.end())
            experiments.push_back(s.experiment);
    for (const auto& e : experiments)
        for (auto [metric, suffix] : {std::pair{PlotMetric::test_error, "_test_error.svg"},
                                      std::pair{PlotMetric::risk_diff, "_risk_diff.svg"}}) {
            const std::string path = (fs::path(dir) / (e + suffix)).string();
            write_file(path, svg_plot(summaries, e, metric));
            written.push_back(path);
        }

    if (!strips.empty()) {
        const fs::path sdir = fs::path(dir) / "strips";
        fs::create_directories(sdir, ec);
        if (ec) throw Error("emit_outputs: cannot create " + sdir.string());
        const std::size_t scale = 4;
        for (const auto& s : strips) {
            seg::Image big(s.image.width * scale, s.image.height * scale);
            for (std::size_t r = 0; r < big.height; ++r)
                for (std::size_t c = 0; c < big.width; ++c)
                    big[r * big.width + c] = s.image[(r / scale) * s.image.width + c / scale];
            const std::string path = (sdir / ("T" + std::to_string(s.train_size) + "_rep" +
                                              std::to_string(s.repetition) + "_ex" + std::to_string(s.example) +
                                              ".png"))
                                         .string();
            write_png_image(path, big);
            written.push_back(path);
        }
    }
    return written;
}

}  // namespace wim::experiments
