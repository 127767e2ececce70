#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace boxlab {

struct Series {
    std::string label;
    std::vector<double> values; // y per step
};

/// Static SVG line chart (loss curves and the like).
void write_line_chart_svg(const std::filesystem::path& path, const std::string& title,
                          const std::vector<Series>& series, const std::string& x_label,
                          const std::string& y_label);

/// Static SVG bar chart (mAcc per method).
void write_bar_chart_svg(const std::filesystem::path& path, const std::string& title,
                         const std::vector<std::string>& labels, const std::vector<double>& values);

} // namespace boxlab
