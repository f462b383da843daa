#include "gamelab/reports.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "gamelab/errors.hpp"

namespace gamelab {

namespace {

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

std::string xml_escape(const std::string& s) {
    std::string out;
    for (const char c : s) {
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

}  // namespace

std::string render_loglog_svg(const std::string& title, const std::string& x_label,
                              const std::string& y_label,
                              const std::vector<PlotSeries>& series) {
    const double width = 640.0, height = 480.0;
    const double ml = 70.0, mr = 30.0, mt = 40.0, mb = 55.0;

    double x_lo = 0.0, x_hi = 0.0, y_lo = 0.0, y_hi = 0.0;
    bool have = false;
    for (const auto& s : series) {
        for (const auto& [x, y] : s.points) {
            if (!(x > 0.0) || !(y > 0.0)) continue;  // log axes skip zeros
            const double lx = std::log10(x), ly = std::log10(y);
            if (!have) {
                x_lo = x_hi = lx;
                y_lo = y_hi = ly;
                have = true;
            } else {
                x_lo = std::min(x_lo, lx);
                x_hi = std::max(x_hi, lx);
                y_lo = std::min(y_lo, ly);
                y_hi = std::max(y_hi, ly);
            }
        }
    }
    if (!have) {
        x_lo = y_lo = -1.0;
        x_hi = y_hi = 1.0;
    }
    if (x_hi - x_lo < 1e-9) {
        x_lo -= 0.5;
        x_hi += 0.5;
    }
    if (y_hi - y_lo < 1e-9) {
        y_lo -= 0.5;
        y_hi += 0.5;
    }
    const auto px = [&](double lx) {
        return ml + (lx - x_lo) / (x_hi - x_lo) * (width - ml - mr);
    };
    const auto py = [&](double ly) {
        return height - mb - (ly - y_lo) / (y_hi - y_lo) * (height - mt - mb);
    };

    static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(width) +
           "\" height=\"" + fmt(height) + "\" viewBox=\"0 0 " + fmt(width) + " " +
           fmt(height) + "\">\n";
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg += "<text x=\"" + fmt(width / 2) + "\" y=\"24\" text-anchor=\"middle\" "
           "font-family=\"sans-serif\" font-size=\"16\">" +
           xml_escape(title) + "</text>\n";

    svg += "<rect x=\"" + fmt(ml) + "\" y=\"" + fmt(mt) + "\" width=\"" +
           fmt(width - ml - mr) + "\" height=\"" + fmt(height - mt - mb) +
           "\" fill=\"none\" stroke=\"#333\"/>\n";

    for (int e = static_cast<int>(std::floor(x_lo));
         e <= static_cast<int>(std::ceil(x_hi)); ++e) {
        if (e < x_lo - 1e-9 || e > x_hi + 1e-9) continue;
        const double x = px(e);
        svg += "<line x1=\"" + fmt(x) + "\" y1=\"" + fmt(mt) + "\" x2=\"" + fmt(x) +
               "\" y2=\"" + fmt(height - mb) + "\" stroke=\"#ddd\"/>\n";
        svg += "<text x=\"" + fmt(x) + "\" y=\"" + fmt(height - mb + 18) +
               "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
               "font-size=\"12\">1e" + std::to_string(e) + "</text>\n";
    }
    for (int e = static_cast<int>(std::floor(y_lo));
         e <= static_cast<int>(std::ceil(y_hi)); ++e) {
        if (e < y_lo - 1e-9 || e > y_hi + 1e-9) continue;
        const double y = py(e);
        svg += "<line x1=\"" + fmt(ml) + "\" y1=\"" + fmt(y) + "\" x2=\"" +
               fmt(width - mr) + "\" y2=\"" + fmt(y) + "\" stroke=\"#ddd\"/>\n";
        svg += "<text x=\"" + fmt(ml - 8) + "\" y=\"" + fmt(y + 4) +
               "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\">1e" +
               std::to_string(e) + "</text>\n";
    }

    svg += "<text x=\"" + fmt(width / 2) + "\" y=\"" + fmt(height - 12) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" +
           xml_escape(x_label) + "</text>\n";
    svg += "<text x=\"16\" y=\"" + fmt(height / 2) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
           "transform=\"rotate(-90 16 " + fmt(height / 2) + ")\">" +
           xml_escape(y_label) + "</text>\n";

    int color_idx = 0;
    double legend_y = mt + 16.0;
    for (const auto& s : series) {
        const char* color = kColors[color_idx % 4];
        ++color_idx;
        std::string poly;
        for (const auto& [x, y] : s.points) {
            if (!(x > 0.0) || !(y > 0.0)) continue;
            poly += fmt(px(std::log10(x))) + "," + fmt(py(std::log10(y))) + " ";
            svg += "<circle cx=\"" + fmt(px(std::log10(x))) + "\" cy=\"" +
                   fmt(py(std::log10(y))) + "\" r=\"3.5\" fill=\"" + color + "\"/>\n";
        }
        if (!poly.empty()) {
            svg += "<polyline points=\"" + poly +
                   "\" fill=\"none\" stroke=\"" + color + "\" stroke-width=\"1.5\"/>\n";
        }
        svg += "<text x=\"" + fmt(width - mr - 8) + "\" y=\"" + fmt(legend_y) +
               "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\" "
               "fill=\"" + color + "\">" + xml_escape(s.name) + "</text>\n";
        legend_y += 16.0;
    }
    svg += "</svg>\n";
    return svg;
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open for writing: " + path);
    out << content;
    if (!out) throw Error("write failed: " + path);
}

void ensure_directory(const std::string& path) {
    std::error_code ec;
    std::filesystem::create_directories(path, ec);
    if (ec) throw Error("cannot create directory " + path + ": " + ec.message());
    if (!std::filesystem::is_directory(path)) {
        throw Error("not a directory: " + path);
    }
}

}  // namespace gamelab
