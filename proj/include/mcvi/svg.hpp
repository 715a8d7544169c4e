#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace mcvi::svg {

struct Series {
    std::string label;
    std::vector<double> x, y;
    std::string color = "#1f77b4";
    double width = 1.5;
};

struct Band {
    std::string label;
    std::vector<double> x, lo, hi;
    std::string color = "#9e9e9e";
    double opacity = 0.45;
};

namespace detail {

inline std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

inline std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '&') out += "&amp;";
        else if (c == '<') out += "&lt;";
        else if (c == '>') out += "&gt;";
        else out += c;
    }
    return out;
}

}  // namespace detail

// self-contained polyline chart with optional shaded bands
struct Chart {
    std::string title, xlabel, ylabel;
    int width = 720, height = 420;
    std::vector<Band> bands;
    std::vector<Series> series;

    std::string render() const {
        const double ml = 70, mr = 18, mt = 36, mb = 50;
        const double pw = width - ml - mr, ph = height - mt - mb;

        double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
        double ymin = xmin, ymax = -xmin;
        auto feed = [&](const std::vector<double>& xs, const std::vector<double>& ys) {
            for (std::size_t i = 0; i < xs.size() && i < ys.size(); ++i) {
                if (!std::isfinite(xs[i]) || !std::isfinite(ys[i])) continue;
                xmin = std::min(xmin, xs[i]);
                xmax = std::max(xmax, xs[i]);
                ymin = std::min(ymin, ys[i]);
                ymax = std::max(ymax, ys[i]);
            }
        };
        for (const auto& s : series) feed(s.x, s.y);
        for (const auto& b : bands) {
            feed(b.x, b.lo);
            feed(b.x, b.hi);
        }
        if (!std::isfinite(xmin)) {
            xmin = 0.0;
            xmax = 1.0;
            ymin = 0.0;
            ymax = 1.0;
        }
        if (xmax == xmin) {
            xmin -= 0.5;
            xmax += 0.5;
        }
        if (ymax == ymin) {
            double pad = std::max(0.5, std::abs(ymin) * 0.1);
            ymin -= pad;
            ymax += pad;
        }
        double yspan = ymax - ymin;
        ymin -= 0.05 * yspan;
        ymax += 0.05 * yspan;

        auto px = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * pw; };
        auto py = [&](double y) { return mt + ph - (y - ymin) / (ymax - ymin) * ph; };

        std::string out;
        out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) +
               "\" height=\"" + std::to_string(height) + "\" viewBox=\"0 0 " +
               std::to_string(width) + " " + std::to_string(height) + "\">\n";
        out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

        for (const auto& b : bands) {
            if (b.x.size() < 2) continue;
            std::string pts;
            for (std::size_t i = 0; i < b.x.size(); ++i)
                pts += detail::num(px(b.x[i])) + "," + detail::num(py(b.lo[i])) + " ";
            for (std::size_t i = b.x.size(); i-- > 0;)
                pts += detail::num(px(b.x[i])) + "," + detail::num(py(b.hi[i])) + " ";
            out += "<polygon points=\"" + pts + "\" fill=\"" + b.color + "\" opacity=\"" +
                   detail::num(b.opacity) + "\"/>\n";
        }

        for (const auto& s : series) {
            if (s.x.empty()) continue;
            std::string pts;
            for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
                if (!std::isfinite(s.y[i])) continue;
                pts += detail::num(px(s.x[i])) + "," + detail::num(py(s.y[i])) + " ";
            }
            out += "<polyline points=\"" + pts + "\" fill=\"none\" stroke=\"" + s.color +
                   "\" stroke-width=\"" + detail::num(s.width) + "\"/>\n";
        }

        out += "<line x1=\"" + detail::num(ml) + "\" y1=\"" + detail::num(mt + ph) + "\" x2=\"" +
               detail::num(ml + pw) + "\" y2=\"" + detail::num(mt + ph) +
               "\" stroke=\"black\"/>\n";
        out += "<line x1=\"" + detail::num(ml) + "\" y1=\"" + detail::num(mt) + "\" x2=\"" +
               detail::num(ml) + "\" y2=\"" + detail::num(mt + ph) + "\" stroke=\"black\"/>\n";

        const int nticks = 5;
        for (int i = 0; i <= nticks; ++i) {
            double tx = xmin + (xmax - xmin) * i / nticks;
            double ty = ymin + (ymax - ymin) * i / nticks;
            out += "<line x1=\"" + detail::num(px(tx)) + "\" y1=\"" + detail::num(mt + ph) +
                   "\" x2=\"" + detail::num(px(tx)) + "\" y2=\"" + detail::num(mt + ph + 5) +
                   "\" stroke=\"black\"/>\n";
            out += "<text x=\"" + detail::num(px(tx)) + "\" y=\"" + detail::num(mt + ph + 18) +
                   "\" font-size=\"11\" text-anchor=\"middle\">" + detail::num(tx) + "</text>\n";
            out += "<line x1=\"" + detail::num(ml - 5) + "\" y1=\"" + detail::num(py(ty)) +
                   "\" x2=\"" + detail::num(ml) + "\" y2=\"" + detail::num(py(ty)) +
                   "\" stroke=\"black\"/>\n";
            out += "<text x=\"" + detail::num(ml - 8) + "\" y=\"" + detail::num(py(ty) + 4) +
                   "\" font-size=\"11\" text-anchor=\"end\">" + detail::num(ty) + "</text>\n";
        }

        out += "<text x=\"" + detail::num(ml + pw / 2) + "\" y=\"20\" font-size=\"14\" "
               "text-anchor=\"middle\">" + detail::escape(title) + "</text>\n";
        out += "<text x=\"" + detail::num(ml + pw / 2) + "\" y=\"" +
               detail::num(height - 12.0) + "\" font-size=\"12\" text-anchor=\"middle\">" +
               detail::escape(xlabel) + "</text>\n";
        out += "<text x=\"16\" y=\"" + detail::num(mt + ph / 2) +
               "\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 16 " +
               detail::num(mt + ph / 2) + ")\">" + detail::escape(ylabel) + "</text>\n";

        double ly = mt + 6;
        for (const auto& s : series) {
            if (s.label.empty()) continue;
            out += "<line x1=\"" + detail::num(ml + pw - 120) + "\" y1=\"" + detail::num(ly) +
                   "\" x2=\"" + detail::num(ml + pw - 98) + "\" y2=\"" + detail::num(ly) +
                   "\" stroke=\"" + s.color + "\" stroke-width=\"2\"/>\n";
            out += "<text x=\"" + detail::num(ml + pw - 92) + "\" y=\"" + detail::num(ly + 4) +
                   "\" font-size=\"11\">" + detail::escape(s.label) + "</text>\n";
            ly += 16;
        }
        for (const auto& b : bands) {
            if (b.label.empty()) continue;
            out += "<rect x=\"" + detail::num(ml + pw - 120) + "\" y=\"" + detail::num(ly - 5) +
                   "\" width=\"22\" height=\"10\" fill=\"" + b.color + "\" opacity=\"" +
                   detail::num(b.opacity) + "\"/>\n";
            out += "<text x=\"" + detail::num(ml + pw - 92) + "\" y=\"" + detail::num(ly + 4) +
                   "\" font-size=\"11\">" + detail::escape(b.label) + "</text>\n";
            ly += 16;
        }

        out += "</svg>\n";
        return out;
    }
};

inline void write_chart_file(const std::string& path, const Chart& chart) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write chart file: " + path);
    out << chart.render();
}

}  // namespace mcvi::svg
