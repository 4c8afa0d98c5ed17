#pragma once

// CSV tables with a provenance column and self-contained SVG plots.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "fnclust/error.hpp"

namespace fnclust::report {

/// Shortest round-trip decimal form of a double ("nan" / "inf" spelled out).
inline std::string num(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    for (int prec = 6; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

inline std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

/// In-memory table with a trailing config_hash column on every row.
class CsvTable {
public:
    CsvTable(std::vector<std::string> columns, std::string config_hash)
        : columns_(std::move(columns)), hash_(std::move(config_hash)) {
        columns_.emplace_back("config_hash");
    }

    void add(std::vector<std::string> cells) {
        if (cells.size() + 1 != columns_.size()) throw ParameterError("csv row has the wrong number of cells");
        cells.push_back(hash_);
        rows_.push_back(std::move(cells));
    }

    std::string str() const {
        std::ostringstream os;
        auto line = [&](const std::vector<std::string>& cells) {
            for (std::size_t i = 0; i < cells.size(); ++i) os << (i ? "," : "") << csv_escape(cells[i]);
            os << '\n';
        };
        line(columns_);
        for (const auto& r : rows_) line(r);
        return os.str();
    }

    void save(const std::string& path) const {
        std::ofstream f(path, std::ios::binary | std::ios::trunc);
        if (!f) throw Error("cannot write " + path);
        f << str();
    }

    const std::vector<std::vector<std::string>>& rows() const { return rows_; }

private:
    std::vector<std::string> columns_;
    std::string hash_;
    std::vector<std::vector<std::string>> rows_;
};

/// Parsed CSV: header plus string cells (RFC 4180 quoting).
struct CsvData {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        throw LookupError("no column '" + name + "'");
    }
};

inline CsvData read_csv(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error("cannot read " + path);
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string cell;
    bool quoted = false, any = false;
    char c;
    while (f.get(c)) {
        any = true;
        if (quoted) {
            if (c == '"') {
                if (f.peek() == '"') {
                    cell += '"';
                    f.get();
                } else {
                    quoted = false;
                }
            } else {
                cell += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            row.push_back(std::move(cell));
            cell.clear();
        } else if (c == '\n') {
            row.push_back(std::move(cell));
            cell.clear();
            rows.push_back(std::move(row));
            row.clear();
            any = false;
        } else if (c != '\r') {
            cell += c;
        }
    }
    if (any) {
        row.push_back(std::move(cell));
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw FormatError("empty csv " + path, 0);
    CsvData d;
    d.header = std::move(rows.front());
    d.rows.assign(std::make_move_iterator(rows.begin() + 1), std::make_move_iterator(rows.end()));
    return d;
}

// ---------------------------------------------------------------------------
// SVG

struct Series {
    std::string name;
    std::vector<double> x;
    std::vector<double> y;
    std::vector<double> lo;  // optional band (same length as y)
    std::vector<double> hi;
};

struct PlotOptions {
    std::string title;
    std::string xlabel;
    std::string ylabel;
    bool log_x = false;
    bool markers = true;
    bool lines = true;
    int width = 640;
    int height = 420;
};

inline std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

inline const char* palette(std::size_t i) {
    static constexpr const char* colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                             "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
    return colors[i % 10];
}

/// Line/scatter plot with optional shaded bands; the data table is embedded as a comment.
inline std::string svg_plot(const std::vector<Series>& series, const PlotOptions& opt) {
    const double left = 70, right = 150, top = 40, bottom = 55;
    const double pw = opt.width - left - right, ph = opt.height - top - bottom;
    auto tx = [&](double v) { return opt.log_x ? std::log10(v) : v; };
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    for (const auto& s : series) {
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!std::isfinite(s.y[i]) || (opt.log_x && !(s.x[i] > 0))) continue;
            x0 = std::min(x0, tx(s.x[i]));
            x1 = std::max(x1, tx(s.x[i]));
            const double lo = s.lo.empty() ? s.y[i] : s.lo[i], hi = s.hi.empty() ? s.y[i] : s.hi[i];
            y0 = std::min({y0, s.y[i], lo});
            y1 = std::max({y1, s.y[i], hi});
        }
    }
    if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    if (x1 - x0 < 1e-12) x0 -= 0.5, x1 += 0.5;
    if (y1 - y0 < 1e-12) y0 -= 0.5, y1 += 0.5;
    const double ypad = 0.05 * (y1 - y0);
    y0 -= ypad;
    y1 += ypad;
    auto px = [&](double v) { return left + (tx(v) - x0) / (x1 - x0) * pw; };
    auto py = [&](double v) { return top + (y1 - v) / (y1 - y0) * ph; };

    std::ostringstream os;
    os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << opt.width << "\" height=\"" << opt.height
       << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    os << "<!-- data\nseries,x,y,lo,hi\n";
    for (const auto& s : series)
        for (std::size_t i = 0; i < s.x.size(); ++i)
            os << s.name << ',' << num(s.x[i]) << ',' << num(s.y[i]) << ',' << (s.lo.empty() ? "" : num(s.lo[i])) << ','
               << (s.hi.empty() ? "" : num(s.hi[i])) << '\n';
    os << "-->\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << opt.width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << xml_escape(opt.title)
       << "</text>\n";
    os << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
       << "\" fill=\"none\" stroke=\"#333\"/>\n";
    for (int t = 0; t <= 4; ++t) {
        const double yv = y0 + (y1 - y0) * t / 4.0, xv = x0 + (x1 - x0) * t / 4.0;
        const double xshow = opt.log_x ? std::pow(10.0, xv) : xv;
        os << "<text x=\"" << left - 6 << "\" y=\"" << py(yv) + 4 << "\" text-anchor=\"end\">" << num(std::round(yv * 1000) / 1000)
           << "</text>\n";
        os << "<text x=\"" << left + (xv - x0) / (x1 - x0) * pw << "\" y=\"" << top + ph + 18 << "\" text-anchor=\"middle\">"
           << num(std::round(xshow * 1000) / 1000) << "</text>\n";
    }
    os << "<text x=\"" << left + pw / 2 << "\" y=\"" << opt.height - 12 << "\" text-anchor=\"middle\">" << xml_escape(opt.xlabel)
       << "</text>\n";
    os << "<text transform=\"translate(18," << top + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">" << xml_escape(opt.ylabel)
       << "</text>\n";
    for (std::size_t si = 0; si < series.size(); ++si) {
        const auto& s = series[si];
        const char* color = palette(si);
        if (!s.lo.empty() && !s.hi.empty()) {
            os << "<polygon fill=\"" << color << "\" fill-opacity=\"0.2\" stroke=\"none\" points=\"";
            for (std::size_t i = 0; i < s.x.size(); ++i) os << px(s.x[i]) << ',' << py(s.hi[i]) << ' ';
            for (std::size_t i = s.x.size(); i-- > 0;) os << px(s.x[i]) << ',' << py(s.lo[i]) << ' ';
            os << "\"/>\n";
        }
        if (opt.lines && s.x.size() > 1) {
            os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
            for (std::size_t i = 0; i < s.x.size(); ++i)
                if (std::isfinite(s.y[i])) os << px(s.x[i]) << ',' << py(s.y[i]) << ' ';
            os << "\"/>\n";
        }
        if (opt.markers)
            for (std::size_t i = 0; i < s.x.size(); ++i)
                if (std::isfinite(s.y[i]))
                    os << "<circle cx=\"" << px(s.x[i]) << "\" cy=\"" << py(s.y[i]) << "\" r=\"" << (opt.lines ? 3 : 2)
                       << "\" fill=\"" << color << "\"/>\n";
        const double ly = top + 14 + 18.0 * static_cast<double>(si);
        os << "<rect x=\"" << left + pw + 12 << "\" y=\"" << ly - 9 << "\" width=\"12\" height=\"12\" fill=\"" << color << "\"/>\n";
        os << "<text x=\"" << left + pw + 30 << "\" y=\"" << ly + 1 << "\">" << xml_escape(s.name) << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

inline void save_text(const std::string& text, const std::string& path) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot write " + path);
    f << text;
}

/// Median and population standard deviation of each group of values.
struct Summary {
    double median = 0.0;
    double std = 0.0;
};

inline Summary summarize(std::vector<double> v) {
    Summary s;
    if (v.empty()) return {std::numeric_limits<double>::quiet_NaN(), 0.0};
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    s.median = n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(n);
    for (double x : v) s.std += (x - mean) * (x - mean);
    s.std = std::sqrt(s.std / static_cast<double>(n));
    return s;
}

}  // namespace fnclust::report
