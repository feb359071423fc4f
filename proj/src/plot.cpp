#include "stdc/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace stdc {

namespace {

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"};

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '<') out += "&lt;";
        else if (c == '>') out += "&gt;";
        else if (c == '&') out += "&amp;";
        else out += c;
    }
    return out;
}

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

}  // namespace

std::string line_chart_svg(const std::string& title, const std::vector<Series>& series) {
    constexpr double W = 800, H = 400, L = 60, R = 160, T = 40, B = 40;
    double lo = INFINITY, hi = -INFINITY;
    std::size_t len = 0;
    for (const auto& s : series) {
        for (double v : s.values) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        len = std::max(len, s.values.size());
    }
    if (len == 0) throw std::invalid_argument("line_chart_svg: no data");
    if (hi <= lo) hi = lo + 1.0;
    auto px = [&](std::size_t i) { return L + (W - L - R) * (len > 1 ? double(i) / double(len - 1) : 0.5); };
    auto py = [&](double v) { return T + (H - T - B) * (1.0 - (v - lo) / (hi - lo)); };

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" << escape(title) << "</text>\n";
    os << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << L - 5 << "\" y=\"" << T + 5 << "\" text-anchor=\"end\" font-size=\"11\">" << num(hi) << "</text>\n";
    os << "<text x=\"" << L - 5 << "\" y=\"" << H - B << "\" text-anchor=\"end\" font-size=\"11\">" << num(lo) << "</text>\n";
    for (std::size_t k = 0; k < series.size(); ++k) {
        const char* color = kPalette[k % std::size(kPalette)];
        os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < series[k].values.size(); ++i) os << px(i) << ',' << py(series[k].values[i]) << ' ';
        os << "\"/>\n";
        os << "<text x=\"" << W - R + 10 << "\" y=\"" << T + 16 * (k + 1) << "\" font-size=\"12\" fill=\"" << color
           << "\">" << escape(series[k].name) << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

std::string heatmap_svg(const std::string& title, const Tensor& matrix, const std::vector<std::string>& row_labels,
                        const std::vector<std::string>& col_labels) {
    if (matrix.rank() != 2 || matrix.empty()) throw std::invalid_argument("heatmap_svg: expected a non-empty matrix");
    const std::size_t rows = matrix.dim(0), cols = matrix.dim(1);
    constexpr double cell = 40, L = 160, T = 50;
    const double W = L + cell * double(cols) + 20, H = T + cell * double(rows) + 60;
    const auto [mn, mx] = std::minmax_element(matrix.storage().begin(), matrix.storage().end());
    const double lo = *mn, span = *mx > *mn ? *mx - *mn : 1.0;

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" << escape(title) << "</text>\n";
    for (std::size_t r = 0; r < rows; ++r) {
        if (r < row_labels.size()) {
            os << "<text x=\"" << L - 5 << "\" y=\"" << T + cell * (double(r) + 0.6)
               << "\" text-anchor=\"end\" font-size=\"11\">" << escape(row_labels[r]) << "</text>\n";
        }
        for (std::size_t c = 0; c < cols; ++c) {
            const double u = (matrix.at(r, c) - lo) / span;
            const int g = static_cast<int>(std::lround(255 * (1.0 - u)));
            os << "<rect x=\"" << L + cell * double(c) << "\" y=\"" << T + cell * double(r) << "\" width=\"" << cell
               << "\" height=\"" << cell << "\" fill=\"rgb(" << g << ',' << g << ",255)\"><title>"
               << num(matrix.at(r, c)) << "</title></rect>\n";
        }
    }
    for (std::size_t c = 0; c < cols && c < col_labels.size(); ++c) {
        const double x = L + cell * (double(c) + 0.5), y = T + cell * double(rows) + 12;
        os << "<text x=\"" << x << "\" y=\"" << y << "\" font-size=\"10\" transform=\"rotate(45 " << x << ' ' << y
           << ")\">" << escape(col_labels[c]) << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace stdc
