#include "morphwing/svg.hpp"

#include "morphwing/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace morphwing {

namespace {

constexpr double kPanelW = 420.0, kPanelH = 320.0;
constexpr double kLeft = 60.0, kRight = 20.0, kTop = 30.0, kBottom = 50.0;
constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string tick(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (const char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            default: out += c;
        }
    }
    return out;
}

void range_of(const std::vector<PlotSeries>& series, bool use_x, double& lo, double& hi) {
    lo = std::numeric_limits<double>::infinity();
    hi = -lo;
    for (const auto& s : series) {
        for (const double v : use_x ? s.x : s.y) {
            if (!std::isfinite(v)) continue;
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    if (!(lo <= hi)) lo = 0.0, hi = 1.0;
    if (hi - lo < 1e-12) lo -= 0.5, hi += 0.5;
}

void panel(std::ostream& o, const PlotPanel& p, double x0) {
    double xlo, xhi, ylo, yhi;
    range_of(p.series, true, xlo, xhi);
    range_of(p.series, false, ylo, yhi);
    const double pw = kPanelW - kLeft - kRight, ph = kPanelH - kTop - kBottom;
    auto sx = [&](double x) { return x0 + kLeft + (x - xlo) / (xhi - xlo) * pw; };
    auto sy = [&](double y) { return kTop + (1.0 - (y - ylo) / (yhi - ylo)) * ph; };

    o << "<g>\n";
    o << "<rect x=\"" << num(x0 + kLeft) << "\" y=\"" << num(kTop) << "\" width=\"" << num(pw)
      << "\" height=\"" << num(ph) << "\" fill=\"none\" stroke=\"#333\"/>\n";
    o << "<text x=\"" << num(x0 + kLeft + pw / 2) << "\" y=\"18\" text-anchor=\"middle\">"
      << escape(p.title) << "</text>\n";
    o << "<text x=\"" << num(x0 + kLeft + pw / 2) << "\" y=\"" << num(kPanelH - 10)
      << "\" text-anchor=\"middle\">" << escape(p.x_label) << "</text>\n";
    for (int t = 0; t <= 4; ++t) {
        const double xv = xlo + (xhi - xlo) * t / 4.0, yv = ylo + (yhi - ylo) * t / 4.0;
        o << "<text x=\"" << num(sx(xv)) << "\" y=\"" << num(kTop + ph + 16)
          << "\" text-anchor=\"middle\" font-size=\"10\">" << tick(xv) << "</text>\n";
        o << "<text x=\"" << num(x0 + kLeft - 4) << "\" y=\"" << num(sy(yv) + 3)
          << "\" text-anchor=\"end\" font-size=\"10\">" << tick(yv) << "</text>\n";
    }
    for (std::size_t i = 0; i < p.series.size(); ++i) {
        const auto& s = p.series[i];
        const char* color = kColors[i % std::size(kColors)];
        o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t k = 0; k < std::min(s.x.size(), s.y.size()); ++k) {
            o << (k ? " " : "") << num(sx(s.x[k])) << ',' << num(sy(s.y[k]));
        }
        o << "\"/>\n";
        const double ly = kTop + 12 + 13.0 * static_cast<double>(i);
        o << "<text x=\"" << num(x0 + kLeft + pw - 4) << "\" y=\"" << num(ly)
          << "\" text-anchor=\"end\" font-size=\"10\" fill=\"" << color << "\">" << escape(s.label)
          << "</text>\n";
    }
    o << "</g>\n";
}

}  // namespace

std::string render_svg(const std::vector<PlotPanel>& panels) {
    const double w = kPanelW * static_cast<double>(std::max<std::size_t>(panels.size(), 1));
    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 " << num(w) << ' ' << num(kPanelH)
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    for (std::size_t i = 0; i < panels.size(); ++i) panel(o, panels[i], kPanelW * static_cast<double>(i));
    o << "</svg>\n";
    return o.str();
}

void save_svg(const std::string& path, const std::vector<PlotPanel>& panels) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << render_svg(panels);
    if (!out) throw IoError("write failed: " + path);
}

}  // namespace morphwing
