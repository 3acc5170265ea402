#include "liftlab/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace liftlab {

namespace {

constexpr double kWidth = 640, kHeight = 420;
constexpr double kLeft = 80, kRight = 20, kTop = 40, kBottom = 60;
const char* kColors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"};

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

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

struct Axis {
    bool log = false;
    double lo = 0, hi = 1;
    double px0 = 0, px1 = 1;

    bool usable(double v) const { return std::isfinite(v) && (!log || v > 0); }
    double t(double v) const { return log ? std::log10(v) : v; }
    double map(double v) const { return px0 + (t(v) - lo) / (hi - lo) * (px1 - px0); }

    void fit(const std::vector<double>& values) {
        double a = std::numeric_limits<double>::infinity(), b = -a;
        for (double v : values)
            if (usable(v)) {
                a = std::min(a, t(v));
                b = std::max(b, t(v));
            }
        if (!std::isfinite(a)) a = 0, b = 1;
        if (log) {
            a = std::floor(a);
            b = std::ceil(b);
        } else {
            const double pad = (b - a) * 0.05;
            a -= pad;
            b += pad;
        }
        if (b <= a) b = a + 1;
        lo = a;
        hi = b;
    }

    std::vector<double> ticks() const {
        std::vector<double> out;
        if (log) {
            const int step = std::max(1, static_cast<int>((hi - lo) / 8));
            for (double e = lo; e <= hi + 1e-9; e += step) out.push_back(std::pow(10.0, e));
            return out;
        }
        const double raw = (hi - lo) / 6;
        const double mag = std::pow(10.0, std::floor(std::log10(raw)));
        double step = mag;
        for (double m : {1.0, 2.0, 5.0, 10.0})
            if (m * mag >= raw) {
                step = m * mag;
                break;
            }
        for (double v = std::ceil(lo / step) * step; v <= hi + 1e-12; v += step) out.push_back(std::abs(v) < step * 1e-9 ? 0.0 : v);
        return out;
    }
};

void frame(std::ostringstream& os, const PlotAxes& axes, const Axis& xa, const Axis& ya) {
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
       << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << num(kWidth / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << escape(axes.title)
       << "</text>\n";
    for (double v : xa.ticks()) {
        const double x = xa.map(v);
        os << "<line x1=\"" << num(x) << "\" y1=\"" << num(kTop) << "\" x2=\"" << num(x) << "\" y2=\""
           << num(kHeight - kBottom) << "\" stroke=\"#ddd\"/>\n";
        os << "<text x=\"" << num(x) << "\" y=\"" << num(kHeight - kBottom + 16) << "\" text-anchor=\"middle\">"
           << label(v) << "</text>\n";
    }
    for (double v : ya.ticks()) {
        const double y = ya.map(v);
        os << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(y) << "\" x2=\"" << num(kWidth - kRight) << "\" y2=\""
           << num(y) << "\" stroke=\"#ddd\"/>\n";
        os << "<text x=\"" << num(kLeft - 6) << "\" y=\"" << num(y + 4) << "\" text-anchor=\"end\">" << label(v)
           << "</text>\n";
    }
    os << "<rect x=\"" << num(kLeft) << "\" y=\"" << num(kTop) << "\" width=\"" << num(kWidth - kLeft - kRight)
       << "\" height=\"" << num(kHeight - kTop - kBottom) << "\" fill=\"none\" stroke=\"black\"/>\n";
    os << "<text x=\"" << num(kLeft + (kWidth - kLeft - kRight) / 2) << "\" y=\"" << num(kHeight - 16)
       << "\" text-anchor=\"middle\">" << escape(axes.xlabel) << "</text>\n";
    os << "<text x=\"18\" y=\"" << num(kTop + (kHeight - kTop - kBottom) / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
       << num(kTop + (kHeight - kTop - kBottom) / 2) << ")\">" << escape(axes.ylabel) << "</text>\n";
}

Axis x_axis(const PlotAxes& axes, const std::vector<double>& xs) {
    Axis a;
    a.log = axes.log_x;
    a.px0 = kLeft;
    a.px1 = kWidth - kRight;
    a.fit(xs);
    return a;
}

Axis y_axis(const PlotAxes& axes, const std::vector<double>& ys) {
    Axis a;
    a.log = axes.log_y;
    a.px0 = kHeight - kBottom;
    a.px1 = kTop;
    a.fit(ys);
    return a;
}

}  // namespace

std::string svg_box_plot(const PlotAxes& axes, const std::vector<BoxStat>& boxes) {
    std::vector<double> xs, ys;
    for (const auto& b : boxes) {
        xs.push_back(b.x);
        for (double v : {b.p10, b.p25, b.p50, b.p75, b.p90}) ys.push_back(v);
    }
    Axis xa = x_axis(axes, xs), ya = y_axis(axes, ys);
    std::ostringstream os;
    frame(os, axes, xa, ya);
    const double half = 8;
    for (const auto& b : boxes) {
        if (!xa.usable(b.x)) continue;
        const double x = xa.map(b.x);
        auto y = [&](double v) { return ya.usable(v) ? ya.map(v) : (v > 0 ? ya.px1 : ya.px0); };
        os << "<line x1=\"" << num(x) << "\" y1=\"" << num(y(b.p10)) << "\" x2=\"" << num(x) << "\" y2=\"" << num(y(b.p90))
           << "\" stroke=\"black\"/>\n";
        const double top = y(b.p75), bottom = y(b.p25);
        os << "<rect x=\"" << num(x - half) << "\" y=\"" << num(std::min(top, bottom)) << "\" width=\"" << num(2 * half)
           << "\" height=\"" << num(std::abs(bottom - top)) << "\" fill=\"#cfe2f3\" stroke=\"black\"/>\n";
        os << "<line x1=\"" << num(x - half) << "\" y1=\"" << num(y(b.p50)) << "\" x2=\"" << num(x + half) << "\" y2=\""
           << num(y(b.p50)) << "\" stroke=\"#ff7f0e\" stroke-width=\"2\"/>\n";
    }
    os << "</svg>\n";
    return os.str();
}

std::string svg_line_plot(const PlotAxes& axes, const std::vector<Series>& series) {
    std::vector<double> xs, ys;
    for (const auto& s : series) {
        xs.insert(xs.end(), s.x.begin(), s.x.end());
        ys.insert(ys.end(), s.y.begin(), s.y.end());
    }
    Axis xa = x_axis(axes, xs), ya = y_axis(axes, ys);
    std::ostringstream os;
    frame(os, axes, xa, ya);
    for (size_t k = 0; k < series.size(); ++k) {
        const auto& s = series[k];
        const char* color = kColors[k % (sizeof kColors / sizeof *kColors)];
        std::string pts;
        for (size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
            if (!xa.usable(s.x[i]) || !ya.usable(s.y[i])) continue;
            pts += num(xa.map(s.x[i])) + "," + num(ya.map(s.y[i])) + " ";
            os << "<circle cx=\"" << num(xa.map(s.x[i])) << "\" cy=\"" << num(ya.map(s.y[i])) << "\" r=\"3\" fill=\""
               << color << "\"/>\n";
        }
        if (!pts.empty()) os << "<polyline points=\"" << pts << "\" fill=\"none\" stroke=\"" << color << "\"/>\n";
        const double ly = kTop + 16 + 14 * static_cast<double>(k);
        os << "<line x1=\"" << num(kWidth - kRight - 150) << "\" y1=\"" << num(ly - 4) << "\" x2=\"" << num(kWidth - kRight - 130)
           << "\" y2=\"" << num(ly - 4) << "\" stroke=\"" << color << "\"/>\n";
        os << "<text x=\"" << num(kWidth - kRight - 125) << "\" y=\"" << num(ly) << "\">" << escape(s.name) << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

}  // namespace liftlab
