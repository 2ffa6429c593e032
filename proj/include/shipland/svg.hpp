#pragma once
/**
 * @file svg.hpp
 * @brief Tiny deterministic SVG line and scatter plots.
 *
 * Output depends only on the data and labels, so identical inputs give
 * byte-identical files.
 */

#include <shipland/errors.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

namespace shipland::svg {

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
    std::string colour = "#1f77b4";
    bool dashed = false;
};

struct Axes {
    std::string title;
    std::string x_label;
    std::string y_label;
    int width = 720;
    int height = 420;
    /// Optional horizontal guide lines (e.g. a tolerance band).
    std::vector<double> guides;
    /// Optional square of half-width `box` centred at the origin.
    double box = 0.0;
};

inline const std::vector<std::string>& palette() {
    static const std::vector<std::string> p{"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};
    return p;
}

namespace detail {

inline std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

inline std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
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

// Round-number tick step covering `span` in about five intervals.
inline double tick_step(double span) {
    if (!(span > 0.0)) return 1.0;
    const double raw = span / 5.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    for (double m : {1.0, 2.0, 5.0, 10.0})
        if (raw <= m * mag) return m * mag;
    return 10.0 * mag;
}

struct Frame {
    double x0, x1, y0, y1;
    double left = 70, right = 20, top = 40, bottom = 50;
    int w, h;
    double px(double x) const { return left + (x - x0) / (x1 - x0) * (w - left - right); }
    double py(double y) const { return h - bottom - (y - y0) / (y1 - y0) * (h - top - bottom); }
};

inline Frame frame_for(const std::vector<Series>& series, const Axes& ax, bool square) {
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    for (const auto& s : series) {
        for (double v : s.x) if (std::isfinite(v)) x0 = std::min(x0, v), x1 = std::max(x1, v);
        for (double v : s.y) if (std::isfinite(v)) y0 = std::min(y0, v), y1 = std::max(y1, v);
    }
    for (double g : ax.guides) y0 = std::min(y0, g), y1 = std::max(y1, g);
    if (ax.box > 0.0) {
        x0 = std::min(x0, -ax.box), x1 = std::max(x1, ax.box);
        y0 = std::min(y0, -ax.box), y1 = std::max(y1, ax.box);
    }
    if (!std::isfinite(x0)) x0 = 0.0, x1 = 1.0;
    if (!std::isfinite(y0)) y0 = 0.0, y1 = 1.0;
    if (x1 - x0 < 1e-9) x0 -= 0.5, x1 += 0.5;
    if (y1 - y0 < 1e-9) y0 -= 0.5, y1 += 0.5;
    if (square) {
        const double r = std::max({std::abs(x0), std::abs(x1), std::abs(y0), std::abs(y1)});
        x0 = y0 = -r;
        x1 = y1 = r;
    }
    const double sx = tick_step(x1 - x0), sy = tick_step(y1 - y0);
    Frame f{std::floor(x0 / sx) * sx, std::ceil(x1 / sx) * sx, std::floor(y0 / sy) * sy, std::ceil(y1 / sy) * sy};
    f.w = ax.width;
    f.h = ax.height;
    return f;
}

inline std::string header(const Frame& f, const Axes& ax) {
    std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(f.w) + "\" height=\"" +
                    std::to_string(f.h) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    s += "<text x=\"" + num(f.w / 2.0) + "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" +
         escape(ax.title) + "</text>\n";
    // Ticks and grid.
    const double sx = tick_step(f.x1 - f.x0), sy = tick_step(f.y1 - f.y0);
    for (double x = f.x0; x <= f.x1 + 1e-9 * sx; x += sx) {
        s += "<line x1=\"" + num(f.px(x)) + "\" y1=\"" + num(f.py(f.y0)) + "\" x2=\"" + num(f.px(x)) + "\" y2=\"" +
             num(f.py(f.y1)) + "\" stroke=\"#e0e0e0\"/>\n";
        s += "<text x=\"" + num(f.px(x)) + "\" y=\"" + num(f.py(f.y0) + 16) + "\" text-anchor=\"middle\">" +
             num(std::abs(x) < 1e-12 ? 0.0 : x) + "</text>\n";
    }
    for (double y = f.y0; y <= f.y1 + 1e-9 * sy; y += sy) {
        s += "<line x1=\"" + num(f.px(f.x0)) + "\" y1=\"" + num(f.py(y)) + "\" x2=\"" + num(f.px(f.x1)) + "\" y2=\"" +
             num(f.py(y)) + "\" stroke=\"#e0e0e0\"/>\n";
        s += "<text x=\"" + num(f.left - 6) + "\" y=\"" + num(f.py(y) + 4) + "\" text-anchor=\"end\">" +
             num(std::abs(y) < 1e-12 ? 0.0 : y) + "</text>\n";
    }
    s += "<rect x=\"" + num(f.left) + "\" y=\"" + num(f.top) + "\" width=\"" + num(f.w - f.left - f.right) +
         "\" height=\"" + num(f.h - f.top - f.bottom) + "\" fill=\"none\" stroke=\"black\"/>\n";
    s += "<text x=\"" + num(f.w / 2.0) + "\" y=\"" + num(f.h - 10.0) + "\" text-anchor=\"middle\">" +
         escape(ax.x_label) + "</text>\n";
    s += "<text x=\"16\" y=\"" + num(f.h / 2.0) + "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " +
         num(f.h / 2.0) + ")\">" + escape(ax.y_label) + "</text>\n";
    for (double g : ax.guides)
        s += "<line x1=\"" + num(f.px(f.x0)) + "\" y1=\"" + num(f.py(g)) + "\" x2=\"" + num(f.px(f.x1)) +
             "\" y2=\"" + num(f.py(g)) + "\" stroke=\"#888888\" stroke-dasharray=\"2,3\"/>\n";
    if (ax.box > 0.0)
        s += "<rect x=\"" + num(f.px(-ax.box)) + "\" y=\"" + num(f.py(ax.box)) + "\" width=\"" +
             num(f.px(ax.box) - f.px(-ax.box)) + "\" height=\"" + num(f.py(-ax.box) - f.py(ax.box)) +
             "\" fill=\"#2ca02c\" fill-opacity=\"0.12\" stroke=\"#2ca02c\"/>\n";
    return s;
}

inline std::string legend(const Frame& f, const std::vector<Series>& series) {
    std::string s;
    double y = f.top + 14;
    for (const auto& ser : series) {
        const double x = f.w - f.right - 150;
        s += "<line x1=\"" + num(x) + "\" y1=\"" + num(y - 4) + "\" x2=\"" + num(x + 20) + "\" y2=\"" + num(y - 4) +
             "\" stroke=\"" + ser.colour + "\" stroke-width=\"2\"" +
             (ser.dashed ? " stroke-dasharray=\"6,3\"" : "") + "/>\n";
        s += "<text x=\"" + num(x + 26) + "\" y=\"" + num(y) + "\">" + escape(ser.label) + "</text>\n";
        y += 16;
    }
    return s;
}

}  // namespace detail

inline std::string line_plot(const std::vector<Series>& series, const Axes& ax) {
    const auto f = detail::frame_for(series, ax, false);
    std::string s = detail::header(f, ax);
    for (const auto& ser : series) {
        if (ser.x.size() != ser.y.size()) throw ShapeMismatch("series x and y lengths differ");
        std::string pts;
        for (std::size_t i = 0; i < ser.x.size(); ++i) {
            if (!std::isfinite(ser.x[i]) || !std::isfinite(ser.y[i])) continue;
            pts += detail::num(f.px(ser.x[i])) + "," + detail::num(f.py(ser.y[i])) + " ";
        }
        s += "<polyline fill=\"none\" stroke=\"" + ser.colour + "\" stroke-width=\"1.5\"" +
             (ser.dashed ? " stroke-dasharray=\"6,3\"" : "") + " points=\"" + pts + "\"/>\n";
    }
    s += detail::legend(f, series);
    return s + "</svg>\n";
}

inline std::string scatter_plot(const std::vector<Series>& series, const Axes& ax) {
    const auto f = detail::frame_for(series, ax, true);
    std::string s = detail::header(f, ax);
    for (const auto& ser : series) {
        if (ser.x.size() != ser.y.size()) throw ShapeMismatch("series x and y lengths differ");
        for (std::size_t i = 0; i < ser.x.size(); ++i) {
            if (!std::isfinite(ser.x[i]) || !std::isfinite(ser.y[i])) continue;
            s += "<circle cx=\"" + detail::num(f.px(ser.x[i])) + "\" cy=\"" + detail::num(f.py(ser.y[i])) +
                 "\" r=\"4\" fill=\"" + ser.colour + "\" fill-opacity=\"0.8\"/>\n";
        }
    }
    s += detail::legend(f, series);
    return s + "</svg>\n";
}

inline void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path);
    out << text;
}

}  // namespace shipland::svg
