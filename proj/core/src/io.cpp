#include "fraglab/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "fraglab/errors.hpp"

namespace fraglab {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

CsvWriter::CsvWriter(std::vector<std::string> columns) : columns_(std::move(columns)) {}

void CsvWriter::add_row(std::span<const double> values) {
    if (values.size() != columns_.size())
        throw ConfigError("CsvWriter: row width does not match the header");
    rows_.emplace_back(values.begin(), values.end());
}

std::string CsvWriter::to_string() const {
    std::ostringstream os;
    for (size_t c = 0; c < columns_.size(); ++c) os << (c ? "," : "") << columns_[c];
    os << '\n';
    for (const auto& row : rows_) {
        for (size_t c = 0; c < row.size(); ++c) os << (c ? "," : "") << format_double(row[c]);
        os << '\n';
    }
    return os.str();
}

void CsvWriter::write(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("CsvWriter: cannot open " + path);
    out << to_string();
}

SvgPlot::SvgPlot(int width, int height) : width_(width), height_(height) {}

void SvgPlot::add_polyline(std::span<const double> x, std::span<const double> y,
                           const std::string& color) {
    Line l;
    l.x.assign(x.begin(), x.end());
    l.y.assign(y.begin(), y.end());
    l.color = color;
    lines_.push_back(std::move(l));
}

void SvgPlot::write(const std::string& path) const {
    double xlo = 0, xhi = 1, ylo = 0, yhi = 1;
    bool first = true;
    for (const auto& l : lines_) {
        for (size_t i = 0; i < l.x.size(); ++i) {
            if (!std::isfinite(l.x[i]) || !std::isfinite(l.y[i])) continue;
            if (first) {
                xlo = xhi = l.x[i];
                ylo = yhi = l.y[i];
                first = false;
            } else {
                xlo = std::min(xlo, l.x[i]);
                xhi = std::max(xhi, l.x[i]);
                ylo = std::min(ylo, l.y[i]);
                yhi = std::max(yhi, l.y[i]);
            }
        }
    }
    if (xhi == xlo) xhi = xlo + 1.0;
    if (yhi == ylo) yhi = ylo + 1.0;
    const double mx = 0.08 * (xhi - xlo), my = 0.08 * (yhi - ylo);
    xlo -= mx;
    xhi += mx;
    ylo -= my;
    yhi += my;

    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("SvgPlot: cannot open " + path);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width_ << "\" height=\""
        << height_ << "\" viewBox=\"0 0 " << width_ << ' ' << height_ << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    if (!title_.empty())
        out << "<text x=\"12\" y=\"20\" font-family=\"monospace\" font-size=\"14\">" << title_
            << "</text>\n";
    for (const auto& l : lines_) {
        out << "<polyline fill=\"none\" stroke=\"" << l.color << "\" stroke-width=\"1\" points=\"";
        for (size_t i = 0; i < l.x.size(); ++i) {
            if (!std::isfinite(l.x[i]) || !std::isfinite(l.y[i])) continue;
            const double px = (l.x[i] - xlo) / (xhi - xlo) * width_;
            const double py = height_ - (l.y[i] - ylo) / (yhi - ylo) * height_;
            char buf[64];
            std::snprintf(buf, sizeof buf, "%.2f,%.2f ", px, py);
            out << buf;
        }
        out << "\"/>\n";
    }
    out << "</svg>\n";
}

void write_manifest(const std::string& path, const std::map<std::string, std::string>& config_echo,
                    double wall_seconds) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("write_manifest: cannot open " + path);
    out << "fraglab_version: 0.1.0\n";
    out << "wall_seconds: " << format_double(wall_seconds) << '\n';
    for (const auto& [k, v] : config_echo) out << "config." << k << ": " << v << '\n';
}

}  // namespace fraglab
