#ifndef GAMELAB_REPORTS_HPP
#define GAMELAB_REPORTS_HPP

#include <string>
#include <utility>
#include <vector>

namespace gamelab {

struct PlotSeries {
    std::string name;
    std::vector<std::pair<double, double>> points;
};

// Minimal self-contained SVG line plot on log-log axes (positive data
// only). Deterministic output: same input, same bytes.
std::string render_loglog_svg(const std::string& title, const std::string& x_label,
                              const std::string& y_label,
                              const std::vector<PlotSeries>& series);

void write_text_file(const std::string& path, const std::string& content);

// Creates the directory (and parents); throws on filesystem faults.
void ensure_directory(const std::string& path);

}  // namespace gamelab

#endif
