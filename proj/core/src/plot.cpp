#include "boxlab/plot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "boxlab/errors.hpp"

namespace boxlab {

namespace {

constexpr int kW = 720, kH = 420;
constexpr int kMargin = 60;

const char* kPalette[] = {"#4472c4", "#ed7d31", "#70ad47", "#ffc000", "#7030a0", "#c00000"};

std::ofstream open_svg(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("plot: cannot open for writing: " + path.string());
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
        << "\" viewBox=\"0 0 " << kW << " " << kH << "\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    return out;
}

void axes(std::ofstream& out, const std::string& title, const std::string& xl, const std::string& yl) {
    out << "<line x1=\"" << kMargin << "\" y1=\"" << kH - kMargin << "\" x2=\"" << kW - kMargin / 2
        << "\" y2=\"" << kH - kMargin << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << kMargin << "\" y1=\"" << kH - kMargin << "\" x2=\"" << kMargin << "\" y2=\""
        << kMargin / 2 << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << kW / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" << title
        << "</text>\n";
    out << "<text x=\"" << kW / 2 << "\" y=\"" << kH - 12 << "\" text-anchor=\"middle\" font-size=\"12\">"
        << xl << "</text>\n";
    out << "<text x=\"16\" y=\"" << kH / 2 << "\" text-anchor=\"middle\" font-size=\"12\" "
        << "transform=\"rotate(-90 16 " << kH / 2 << ")\">" << yl << "</text>\n";
}

} // namespace

void write_line_chart_svg(const std::filesystem::path& path, const std::string& title,
                          const std::vector<Series>& series, const std::string& x_label,
                          const std::string& y_label) {
    std::ofstream out = open_svg(path);
    axes(out, title, x_label, y_label);

    std::size_t max_n = 1;
    double lo = 0, hi = 1e-12;
    for (const Series& s : series) {
        max_n = std::max(max_n, s.values.size());
        for (double v : s.values) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    const double xs = static_cast<double>(kW - 1.5 * kMargin) / std::max<std::size_t>(1, max_n - 1);
    const double ys = (kH - 1.5 * kMargin) / (hi - lo);

    for (std::size_t si = 0; si < series.size(); ++si) {
        const Series& s = series[si];
        if (s.values.empty()) continue;
        out << "<polyline fill=\"none\" stroke=\"" << kPalette[si % 6] << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < s.values.size(); ++i) {
            const double x = kMargin + xs * static_cast<double>(i);
            const double y = kH - kMargin - ys * (s.values[i] - lo);
            out << x << "," << y << " ";
        }
        out << "\"/>\n";
        out << "<text x=\"" << kW - kMargin / 2 - 140 << "\" y=\"" << kMargin / 2 + 18 * si
            << "\" font-size=\"12\" fill=\"" << kPalette[si % 6] << "\">" << s.label << "</text>\n";
    }
    out << "</svg>\n";
}

void write_bar_chart_svg(const std::filesystem::path& path, const std::string& title,
                         const std::vector<std::string>& labels, const std::vector<double>& values) {
    if (labels.size() != values.size()) throw ValidationError("plot: labels/values size mismatch");
    std::ofstream out = open_svg(path);
    axes(out, title, "", "mAcc");

    const double hi = std::max(1.0, *std::max_element(values.begin(), values.end()));
    const double band = static_cast<double>(kW - 1.5 * kMargin) / std::max<std::size_t>(1, values.size());
    const double ys = (kH - 1.5 * kMargin) / hi;
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double h = ys * values[i];
        const double x = kMargin + band * static_cast<double>(i) + band * 0.15;
        out << "<rect x=\"" << x << "\" y=\"" << kH - kMargin - h << "\" width=\"" << band * 0.7
            << "\" height=\"" << h << "\" fill=\"" << kPalette[i % 6] << "\"/>\n";
        out << "<text x=\"" << x + band * 0.35 << "\" y=\"" << kH - kMargin + 16
            << "\" text-anchor=\"middle\" font-size=\"11\">" << labels[i] << "</text>\n";
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.3f", values[i]);
        out << "<text x=\"" << x + band * 0.35 << "\" y=\"" << kH - kMargin - h - 6
            << "\" text-anchor=\"middle\" font-size=\"11\">" << buf << "</text>\n";
    }
    out << "</svg>\n";
}

} // namespace boxlab
