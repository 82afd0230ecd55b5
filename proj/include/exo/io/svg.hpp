#pragma once

// Minimal SVG writers: heat map with overlay points/curve, bar chart and
// confusion matrix.

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "exo/io/text.hpp"

namespace exo::io::svg {

inline std::string color_ramp(double v)
{
    // Piecewise-linear blue -> teal -> yellow ramp.
    static constexpr std::array<std::array<double, 3>, 3> stops{{{68, 1, 84}, {33, 145, 140}, {253, 231, 37}}};
    v = std::clamp(std::isfinite(v) ? v : 0.0, 0.0, 1.0);
    const double x = v * 2.0;
    const int i = std::min(1, static_cast<int>(x));
    const double f = x - i;
    std::string out = "rgb(";
    for (int c = 0; c < 3; ++c) {
        const double val = stops[i][c] + f * (stops[i + 1][c] - stops[i][c]);
        out += std::to_string(static_cast<int>(std::lround(val)));
        out += c < 2 ? "," : ")";
    }
    return out;
}

inline std::string escape(const std::string& s)
{
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

struct HeatMap {
    std::string title;
    std::string x_label = "assistance";
    std::string y_label = "payload [kg]";
    std::vector<double> xs;
    std::vector<double> ys;
    std::vector<double> values; ///< y-major: values[j * xs.size() + i]
    std::vector<std::pair<double, double>> points;
    std::vector<std::pair<double, double>> curve;
};

inline std::string render(const HeatMap& h)
{
    constexpr double W = 420, H = 420, L = 60, T = 40, PW = 320, PH = 320;
    const double x0 = h.xs.front(), x1 = h.xs.back(), y0 = h.ys.front(), y1 = h.ys.back();
    const auto [lo_it, hi_it] = std::minmax_element(h.values.begin(), h.values.end());
    const double lo = *lo_it, span = *hi_it - *lo_it;
    auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * PW; };
    auto py = [&](double y) { return T + PH - (y - y0) / (y1 - y0) * PH; };

    std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt_fixed(W, 0) + "\" height=\"" +
                    fmt_fixed(H, 0) + "\">\n";
    s += "<text x=\"" + fmt_fixed(L, 0) + "\" y=\"24\" font-size=\"14\">" + escape(h.title) + "</text>\n";
    const double cw = PW / static_cast<double>(h.xs.size());
    const double ch = PH / static_cast<double>(h.ys.size());
    for (std::size_t j = 0; j < h.ys.size(); ++j)
        for (std::size_t i = 0; i < h.xs.size(); ++i) {
            const double v = h.values[j * h.xs.size() + i];
            const double n = span > 0 ? (v - lo) / span : 0.5;
            s += "<rect x=\"" + fmt_fixed(L + i * cw, 2) + "\" y=\"" + fmt_fixed(T + PH - (j + 1) * ch, 2) +
                 "\" width=\"" + fmt_fixed(cw + 0.05, 2) + "\" height=\"" + fmt_fixed(ch + 0.05, 2) + "\" fill=\"" +
                 color_ramp(n) + "\"/>\n";
        }
    if (!h.curve.empty()) {
        s += "<polyline fill=\"none\" stroke=\"white\" stroke-width=\"2\" points=\"";
        for (const auto& [x, y] : h.curve) s += fmt_fixed(px(x), 2) + "," + fmt_fixed(py(y), 2) + " ";
        s += "\"/>\n";
    }
    for (const auto& [x, y] : h.points)
        s += "<circle cx=\"" + fmt_fixed(px(x), 2) + "\" cy=\"" + fmt_fixed(py(y), 2) + "\" r=\"4\" fill=\"red\"/>\n";
    s += "<text x=\"" + fmt_fixed(L + PW / 2, 0) + "\" y=\"" + fmt_fixed(T + PH + 30, 0) +
         "\" font-size=\"12\" text-anchor=\"middle\">" + escape(h.x_label) + "</text>\n";
    s += "<text x=\"16\" y=\"" + fmt_fixed(T + PH / 2, 0) + "\" font-size=\"12\" transform=\"rotate(-90 16 " +
         fmt_fixed(T + PH / 2, 0) + ")\" text-anchor=\"middle\">" + escape(h.y_label) + "</text>\n";
    s += "<text x=\"" + fmt_fixed(L, 0) + "\" y=\"" + fmt_fixed(T + PH + 14, 0) + "\" font-size=\"10\">" +
         fmt_fixed(x0, 2) + "</text>\n";
    s += "<text x=\"" + fmt_fixed(L + PW, 0) + "\" y=\"" + fmt_fixed(T + PH + 14, 0) +
         "\" font-size=\"10\" text-anchor=\"end\">" + fmt_fixed(x1, 2) + "</text>\n";
    s += "<text x=\"" + fmt_fixed(L - 4, 0) + "\" y=\"" + fmt_fixed(T + PH, 0) +
         "\" font-size=\"10\" text-anchor=\"end\">" + fmt_fixed(y0, 1) + "</text>\n";
    s += "<text x=\"" + fmt_fixed(L - 4, 0) + "\" y=\"" + fmt_fixed(T + 10, 0) +
         "\" font-size=\"10\" text-anchor=\"end\">" + fmt_fixed(y1, 1) + "</text>\n";
    s += "</svg>\n";
    return s;
}

/// Bars in [0, 1] with a dashed reference line at `mean`.
inline std::string bar_chart(const std::string& title, const std::vector<std::pair<std::string, double>>& bars,
                             double mean)
{
    constexpr double L = 50, T = 40, PH = 240, BW = 28, GAP = 10;
    const double PW = static_cast<double>(bars.size()) * (BW + GAP) + GAP;
    std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt_fixed(L + PW + 20, 0) +
                    "\" height=\"" + fmt_fixed(T + PH + 50, 0) + "\">\n";
    s += "<text x=\"" + fmt_fixed(L, 0) + "\" y=\"24\" font-size=\"14\">" + escape(title) + "</text>\n";
    for (std::size_t i = 0; i < bars.size(); ++i) {
        const double v = std::clamp(bars[i].second, 0.0, 1.0);
        const double x = L + GAP + static_cast<double>(i) * (BW + GAP);
        s += "<rect x=\"" + fmt_fixed(x, 1) + "\" y=\"" + fmt_fixed(T + PH * (1 - v), 1) + "\" width=\"" +
             fmt_fixed(BW, 0) + "\" height=\"" + fmt_fixed(PH * v, 1) + "\" fill=\"steelblue\"/>\n";
        s += "<text x=\"" + fmt_fixed(x + BW / 2, 1) + "\" y=\"" + fmt_fixed(T + PH + 14, 0) +
             "\" font-size=\"9\" text-anchor=\"middle\">" + escape(bars[i].first) + "</text>\n";
    }
    const double my = T + PH * (1 - std::clamp(mean, 0.0, 1.0));
    s += "<line x1=\"" + fmt_fixed(L, 0) + "\" x2=\"" + fmt_fixed(L + PW, 0) + "\" y1=\"" + fmt_fixed(my, 1) +
         "\" y2=\"" + fmt_fixed(my, 1) + "\" stroke=\"red\" stroke-dasharray=\"4 3\"/>\n";
    s += "<text x=\"" + fmt_fixed(L + PW, 0) + "\" y=\"" + fmt_fixed(my - 4, 1) +
         "\" font-size=\"10\" text-anchor=\"end\">mean " + fmt_fixed(100 * mean, 2) + "%</text>\n";
    s += "</svg>\n";
    return s;
}

inline std::string confusion_matrix(const std::string& title, const std::array<std::array<int, 3>, 3>& m,
                                    const std::array<std::string, 3>& labels)
{
    constexpr double L = 80, T = 50, C = 70;
    int mx = 1;
    for (const auto& row : m)
        for (int v : row) mx = std::max(mx, v);
    std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt_fixed(L + 3 * C + 20, 0) +
                    "\" height=\"" + fmt_fixed(T + 3 * C + 40, 0) + "\">\n";
    s += "<text x=\"" + fmt_fixed(L, 0) + "\" y=\"20\" font-size=\"14\">" + escape(title) + "</text>\n";
    for (std::size_t r = 0; r < 3; ++r) {
        int row_sum = 0;
        for (int v : m[r]) row_sum += v;
        for (std::size_t c = 0; c < 3; ++c) {
            const double x = L + static_cast<double>(c) * C, y = T + static_cast<double>(r) * C;
            s += "<rect x=\"" + fmt_fixed(x, 0) + "\" y=\"" + fmt_fixed(y, 0) + "\" width=\"" + fmt_fixed(C, 0) +
                 "\" height=\"" + fmt_fixed(C, 0) + "\" fill=\"" + color_ramp(static_cast<double>(m[r][c]) / mx) +
                 "\" stroke=\"white\"/>\n";
            const double pct = row_sum > 0 ? 100.0 * m[r][c] / row_sum : 0.0;
            s += "<text x=\"" + fmt_fixed(x + C / 2, 0) + "\" y=\"" + fmt_fixed(y + C / 2 + 4, 0) +
                 "\" font-size=\"11\" text-anchor=\"middle\" fill=\"black\">" + std::to_string(m[r][c]) + " (" +
                 fmt_fixed(pct, 1) + "%)</text>\n";
        }
        s += "<text x=\"" + fmt_fixed(L - 6, 0) + "\" y=\"" + fmt_fixed(T + r * C + C / 2 + 4, 0) +
             "\" font-size=\"11\" text-anchor=\"end\">" + escape(labels[r]) + "</text>\n";
        s += "<text x=\"" + fmt_fixed(L + r * C + C / 2, 0) + "\" y=\"" + fmt_fixed(T + 3 * C + 16, 0) +
             "\" font-size=\"11\" text-anchor=\"middle\">" + escape(labels[r]) + "</text>\n";
    }
    s += "<text x=\"" + fmt_fixed(L + 1.5 * C, 0) + "\" y=\"" + fmt_fixed(T + 3 * C + 32, 0) +
         "\" font-size=\"11\" text-anchor=\"middle\">predicted</text>\n";
    s += "<text x=\"" + fmt_fixed(L, 0) + "\" y=\"" + fmt_fixed(T - 6, 0) + "\" font-size=\"11\">rows: truth</text>\n";
    s += "</svg>\n";
    return s;
}

} // namespace exo::io::svg
