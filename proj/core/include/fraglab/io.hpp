#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

namespace fraglab {

/// Deterministic CSV writer: %.17g doubles, '\n' endings, fixed column order.
class CsvWriter {
  public:
    explicit CsvWriter(std::vector<std::string> columns);
    void add_row(std::span<const double> values);
    void write(const std::string& path) const;
    std::string to_string() const;

  private:
    std::vector<std::string> columns_;
    std::vector<std::vector<double>> rows_;
};

std::string format_double(double v);

/// Minimal SVG polyline plot; CSV stays the authoritative artifact.
class SvgPlot {
  public:
    SvgPlot(int width = 640, int height = 480);
    void add_polyline(std::span<const double> x, std::span<const double> y,
                      const std::string& color = "#1f77b4");
    void set_title(const std::string& t) { title_ = t; }
    void write(const std::string& path) const;

  private:
    int width_, height_;
    std::string title_;
    struct Line {
        std::vector<double> x, y;
        std::string color;
    };
    std::vector<Line> lines_;
};

/// Run manifest: echo of the configuration plus version and wall time.
void write_manifest(const std::string& path, const std::map<std::string, std::string>& config_echo,
                    double wall_seconds);

}  // namespace fraglab
