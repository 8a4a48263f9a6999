#include "urnflow/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace urnflow {

namespace {

constexpr double kWidth = 640.0, kHeight = 400.0;
constexpr double kLeft = 70.0, kRight = 610.0, kTop = 40.0, kBottom = 360.0;

const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                         "#9467bd", "#8c564b", "#17becf", "#7f7f7f"};

std::string esc(const std::string& s) {
    std::string r;
    for (char c : s) {
        if (c == '&') r += "&amp;";
        else if (c == '<') r += "&lt;";
        else if (c == '>') r += "&gt;";
        else r += c;
    }
    return r;
}

std::string fmt(double v) {
    char buf[32];
    double a = std::fabs(v);
    if (v == 0.0) return "0";
    if (a >= 1e5 || a < 1e-3) std::snprintf(buf, sizeof buf, "%.2e", v);
    else std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

// tick positions in data space: round log decades, or linspace of 5
std::vector<double> ticks(double lo, double hi, bool log_scale) {
    std::vector<double> t;
    if (log_scale) {
        int d0 = static_cast<int>(std::ceil(std::log10(lo) - 1e-9));
        int d1 = static_cast<int>(std::floor(std::log10(hi) + 1e-9));
        if (d1 - d0 <= 8) {
            for (int d = d0; d <= d1; ++d) t.push_back(std::pow(10.0, d));
            if (t.size() >= 2) return t;
        }
    }
    for (int i = 0; i <= 4; ++i) t.push_back(lo + (hi - lo) * i / 4.0);
    return t;
}

}  // namespace

void write_line_chart(std::ostream& out, const std::string& title,
                      const std::string& x_label, const std::string& y_label,
                      const std::vector<SvgSeries>& series, bool log_x,
                      bool log_y) {
    double xlo = std::numeric_limits<double>::infinity(), xhi = -xlo;
    double ylo = xlo, yhi = -xlo;
    auto usable = [&](double x, double y) {
        return std::isfinite(x) && std::isfinite(y) && (!log_x || x > 0.0) &&
               (!log_y || y > 0.0);
    };
    for (const auto& s : series)
        for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i)
            if (usable(s.x[i], s.y[i])) {
                xlo = std::min(xlo, s.x[i]);
                xhi = std::max(xhi, s.x[i]);
                ylo = std::min(ylo, s.y[i]);
                yhi = std::max(yhi, s.y[i]);
            }
    if (!(xlo <= xhi)) { xlo = log_x ? 1.0 : 0.0; xhi = xlo + 1.0; }
    if (!(ylo <= yhi)) { ylo = log_y ? 1.0 : 0.0; yhi = ylo + 1.0; }
    if (xlo == xhi) { xhi = log_x ? xhi * 2.0 : xhi + 1.0; xlo = log_x ? xlo / 2.0 : xlo - 1.0; }
    if (ylo == yhi) { yhi = log_y ? yhi * 2.0 : yhi + 1.0; ylo = log_y ? ylo / 2.0 : ylo - 1.0; }

    auto px = [&](double x) {
        double u = log_x ? (std::log(x) - std::log(xlo)) / (std::log(xhi) - std::log(xlo))
                         : (x - xlo) / (xhi - xlo);
        return kLeft + u * (kRight - kLeft);
    };
    auto py = [&](double y) {
        double u = log_y ? (std::log(y) - std::log(ylo)) / (std::log(yhi) - std::log(ylo))
                         : (y - ylo) / (yhi - ylo);
        return kBottom - u * (kBottom - kTop);
    };

    char buf[256];
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
        << "\" height=\"" << kHeight << "\" viewBox=\"0 0 " << kWidth << " "
        << kHeight << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << (kLeft + kRight) / 2 << "\" y=\"24\" font-size=\"15\" "
           "text-anchor=\"middle\" font-family=\"sans-serif\">"
        << esc(title) << "</text>\n";

    for (double t : ticks(xlo, xhi, log_x)) {
        double x = px(t);
        std::snprintf(buf, sizeof buf,
                      "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" "
                      "stroke=\"#ddd\"/>\n",
                      x, kTop, x, kBottom);
        out << buf;
        std::snprintf(buf, sizeof buf,
                      "<text x=\"%.1f\" y=\"%.1f\" font-size=\"11\" "
                      "text-anchor=\"middle\" font-family=\"sans-serif\">%s</text>\n",
                      x, kBottom + 16.0, fmt(t).c_str());
        out << buf;
    }
    for (double t : ticks(ylo, yhi, log_y)) {
        double y = py(t);
        std::snprintf(buf, sizeof buf,
                      "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" "
                      "stroke=\"#ddd\"/>\n",
                      kLeft, y, kRight, y);
        out << buf;
        std::snprintf(buf, sizeof buf,
                      "<text x=\"%.1f\" y=\"%.1f\" font-size=\"11\" "
                      "text-anchor=\"end\" font-family=\"sans-serif\">%s</text>\n",
                      kLeft - 6.0, y + 4.0, fmt(t).c_str());
        out << buf;
    }
    std::snprintf(buf, sizeof buf,
                  "<rect x=\"%.1f\" y=\"%.1f\" width=\"%.1f\" height=\"%.1f\" "
                  "fill=\"none\" stroke=\"black\"/>\n",
                  kLeft, kTop, kRight - kLeft, kBottom - kTop);
    out << buf;
    out << "<text x=\"" << (kLeft + kRight) / 2 << "\" y=\"" << kHeight - 8.0
        << "\" font-size=\"12\" text-anchor=\"middle\" "
           "font-family=\"sans-serif\">"
        << esc(x_label) << "</text>\n";
    out << "<text x=\"16\" y=\"" << (kTop + kBottom) / 2
        << "\" font-size=\"12\" text-anchor=\"middle\" "
           "font-family=\"sans-serif\" transform=\"rotate(-90 16 "
        << (kTop + kBottom) / 2 << ")\">"
        << esc(y_label) << "</text>\n";

    for (std::size_t si = 0; si < series.size(); ++si) {
        const auto& s = series[si];
        const char* color = kColors[si % (sizeof kColors / sizeof *kColors)];
        std::string pts;
        for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
            if (!usable(s.x[i], s.y[i])) continue;
            std::snprintf(buf, sizeof buf, "%.1f,%.1f ", px(s.x[i]), py(s.y[i]));
            pts += buf;
        }
        if (!pts.empty()) {
            out << "<polyline points=\"" << pts << "\" fill=\"none\" stroke=\""
                << color << "\" stroke-width=\"1.5\"/>\n";
        }
        double ly = kTop + 14.0 + 16.0 * static_cast<double>(si);
        std::snprintf(buf, sizeof buf,
                      "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" "
                      "stroke=\"%s\" stroke-width=\"1.5\"/>\n",
                      kRight - 150.0, ly - 4.0, kRight - 130.0, ly - 4.0, color);
        out << buf;
        std::snprintf(buf, sizeof buf,
                      "<text x=\"%.1f\" y=\"%.1f\" font-size=\"11\" "
                      "font-family=\"sans-serif\">%s</text>\n",
                      kRight - 124.0, ly, esc(s.label).c_str());
        out << buf;
    }
    out << "</svg>\n";
}

}  // namespace urnflow
