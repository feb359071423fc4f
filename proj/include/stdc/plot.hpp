#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "stdc/tensor.hpp"

namespace stdc {

struct Series {
    std::string name;
    std::vector<double> values;
};

// Line chart, one polyline per series over a shared x index.
std::string line_chart_svg(const std::string& title, const std::vector<Series>& series);
// Heatmap of a [rows, cols] matrix, white (min) to dark blue (max).
std::string heatmap_svg(const std::string& title, const Tensor& matrix, const std::vector<std::string>& row_labels,
                        const std::vector<std::string>& col_labels);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace stdc
