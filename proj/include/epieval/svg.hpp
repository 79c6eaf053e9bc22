#pragma once

#include <cmath>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "epieval/series.hpp"

namespace epieval::svg {

/// Fixed two-decimal coordinate formatting keeps emitted files byte-stable.
inline std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

inline const std::vector<std::string>& palette() {
    static const std::vector<std::string> colors{"#1b9e77", "#d95f02", "#7570b3", "#e7298a",
                                                 "#66a61e", "#e6ab02", "#a6761d", "#666666"};
    return colors;
}

inline const std::string& color(std::size_t i) { return palette()[i % palette().size()]; }

class Builder {
public:
    Builder(double width, double height) : width_(width), height_(height) {
        body_ += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(width) +
                 "\" height=\"" + fmt(height) + "\" viewBox=\"0 0 " + fmt(width) + " " +
                 fmt(height) + "\">\n";
        body_ += "<rect x=\"0\" y=\"0\" width=\"" + fmt(width) + "\" height=\"" + fmt(height) +
                 "\" fill=\"white\"/>\n";
    }

    void line(double x1, double y1, double x2, double y2, const std::string& stroke,
              double width = 1.0) {
        body_ += "<line x1=\"" + fmt(x1) + "\" y1=\"" + fmt(y1) + "\" x2=\"" + fmt(x2) +
                 "\" y2=\"" + fmt(y2) + "\" stroke=\"" + stroke + "\" stroke-width=\"" +
                 fmt(width) + "\"/>\n";
    }

    void rect(double x, double y, double w, double h, const std::string& fill,
              const std::string& stroke) {
        body_ += "<rect x=\"" + fmt(x) + "\" y=\"" + fmt(y) + "\" width=\"" + fmt(w) +
                 "\" height=\"" + fmt(h) + "\" fill=\"" + fill + "\" stroke=\"" + stroke +
                 "\"/>\n";
    }

    void circle(double cx, double cy, double r, const std::string& stroke,
                const std::string& fill = "none") {
        body_ += "<circle cx=\"" + fmt(cx) + "\" cy=\"" + fmt(cy) + "\" r=\"" + fmt(r) +
                 "\" stroke=\"" + stroke + "\" fill=\"" + fill + "\"/>\n";
    }

    void polyline(const std::vector<std::pair<double, double>>& points,
                  const std::string& stroke, double width = 1.5) {
        if (points.size() < 2) return;
        body_ += "<polyline fill=\"none\" stroke=\"" + stroke + "\" stroke-width=\"" +
                 fmt(width) + "\" points=\"";
        for (const auto& [x, y] : points) body_ += fmt(x) + "," + fmt(y) + " ";
        body_ += "\"/>\n";
    }

    void text(double x, double y, const std::string& s, double size = 11.0,
              const std::string& anchor = "start") {
        body_ += "<text x=\"" + fmt(x) + "\" y=\"" + fmt(y) + "\" font-family=\"sans-serif\"" +
                 " font-size=\"" + fmt(size) + "\" text-anchor=\"" + anchor + "\">" + escape(s) +
                 "</text>\n";
    }

    std::string str() const { return body_ + "</svg>\n"; }

    double width() const { return width_; }
    double height() const { return height_; }

private:
    static std::string escape(const std::string& s) {
        std::string out;
        for (char c : s) {
            if (c == '&') out += "&amp;";
            else if (c == '<') out += "&lt;";
            else if (c == '>') out += "&gt;";
            else out += c;
        }
        return out;
    }

    double width_;
    double height_;
    std::string body_;
};

struct Frame {
    double left = 56.0;
    double right = 150.0;
    double top = 36.0;
    double bottom = 44.0;
    double width = 640.0;
    double height = 400.0;

    double plot_w() const { return width - left - right; }
    double plot_h() const { return height - top - bottom; }
};

inline void draw_axes(Builder& b, const Frame& f, const std::string& title) {
    b.line(f.left, f.top, f.left, f.height - f.bottom, "#333333");
    b.line(f.left, f.height - f.bottom, f.width - f.right, f.height - f.bottom, "#333333");
    b.text(f.left, f.top - 12.0, title, 13.0);
}

inline void y_ticks(Builder& b, const Frame& f, double lo, double hi, int n = 5) {
    for (int i = 0; i <= n; ++i) {
        const double v = lo + (hi - lo) * i / n;
        const double y = f.height - f.bottom - f.plot_h() * i / n;
        b.line(f.left - 4.0, y, f.left, y, "#333333");
        b.text(f.left - 8.0, y + 4.0, fmt(v), 10.0, "end");
    }
}

/// Box-whisker chart, one box per label.
inline std::string box_chart(const std::string& title, const std::vector<std::string>& labels,
                             const std::vector<stats::BoxStats>& boxes) {
    Frame f;
    f.right = 24.0;
    Builder b(f.width, f.height);
    double lo = boxes.front().whisker_low;
    double hi = boxes.front().whisker_high;
    for (const auto& box : boxes) {
        lo = std::min(lo, box.whisker_low);
        hi = std::max(hi, box.whisker_high);
        for (double o : box.outliers) {
            lo = std::min(lo, o);
            hi = std::max(hi, o);
        }
    }
    if (hi - lo < 1e-9) {
        lo -= 1.0;
        hi += 1.0;
    }
    const double pad = 0.08 * (hi - lo);
    lo -= pad;
    hi += pad;
    draw_axes(b, f, title);
    y_ticks(b, f, lo, hi);
    auto y_of = [&](double v) {
        return f.height - f.bottom - (v - lo) / (hi - lo) * f.plot_h();
    };
    const double slot = f.plot_w() / labels.size();
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const double cx = f.left + slot * (i + 0.5);
        const double half = 0.28 * slot;
        const auto& box = boxes[i];
        b.line(cx, y_of(box.whisker_low), cx, y_of(box.q1), "#333333");
        b.line(cx, y_of(box.q3), cx, y_of(box.whisker_high), "#333333");
        b.line(cx - half * 0.6, y_of(box.whisker_low), cx + half * 0.6, y_of(box.whisker_low),
               "#333333");
        b.line(cx - half * 0.6, y_of(box.whisker_high), cx + half * 0.6, y_of(box.whisker_high),
               "#333333");
        b.rect(cx - half, y_of(box.q3), 2.0 * half, y_of(box.q1) - y_of(box.q3), "#d0e4f0",
               "#333333");
        b.line(cx - half, y_of(box.med), cx + half, y_of(box.med), "#1f5fa8", 2.0);
        b.circle(cx, y_of(box.mean_value), 2.5, "#c03030", "#c03030");
        for (double o : box.outliers) b.circle(cx, y_of(o), 2.5, "#333333");
        b.text(cx, f.height - f.bottom + 16.0, labels[i], 10.0, "middle");
    }
    return b.str();
}

/// Step chart of per-prediction-time values (NaN cells break the line).
inline std::string step_chart(const std::string& title, const std::vector<int>& xs,
                              const std::vector<std::string>& series_names,
                              const std::vector<std::vector<double>>& values,
                              const std::string& y_label) {
    Frame f;
    Builder b(f.width, f.height);
    double lo = 1e300;
    double hi = -1e300;
    for (const auto& row : values)
        for (double v : row)
            if (!std::isnan(v)) {
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
    if (hi < lo) {
        lo = 0.0;
        hi = 1.0;
    }
    if (hi - lo < 1e-9) {
        lo -= 1.0;
        hi += 1.0;
    }
    draw_axes(b, f, title);
    y_ticks(b, f, lo, hi);
    b.text(12.0, f.top + 10.0, y_label, 10.0);
    const double x0 = static_cast<double>(xs.front());
    const double x1 = static_cast<double>(xs.back());
    auto x_of = [&](double v) {
        return x1 == x0 ? f.left : f.left + (v - x0) / (x1 - x0) * f.plot_w();
    };
    auto y_of = [&](double v) {
        return f.height - f.bottom - (v - lo) / (hi - lo) * f.plot_h();
    };
    for (std::size_t i = 0; i < xs.size(); i += std::max<std::size_t>(1, xs.size() / 8)) {
        b.line(x_of(xs[i]), f.height - f.bottom, x_of(xs[i]), f.height - f.bottom + 4.0,
               "#333333");
        b.text(x_of(xs[i]), f.height - f.bottom + 16.0, std::to_string(xs[i]), 10.0, "middle");
    }
    for (std::size_t m = 0; m < series_names.size(); ++m) {
        std::vector<std::pair<double, double>> segment;
        auto flush = [&]() {
            b.polyline(segment, color(m));
            segment.clear();
        };
        for (std::size_t i = 0; i < xs.size(); ++i) {
            const double v = values[m][i];
            if (std::isnan(v)) {
                flush();
                continue;
            }
            if (!segment.empty())
                segment.emplace_back(x_of(xs[i]), segment.back().second);  // step
            segment.emplace_back(x_of(xs[i]), y_of(v));
        }
        flush();
        const double ly = f.top + 14.0 * m;
        b.line(f.width - f.right + 8.0, ly, f.width - f.right + 28.0, ly, color(m), 2.0);
        b.text(f.width - f.right + 32.0, ly + 4.0, series_names[m], 10.0);
    }
    return b.str();
}

/// Observed curve with per-method overlays.
inline std::string overlay_chart(const std::string& title, int start_week,
                                 const std::vector<double>& observed,
                                 const std::vector<std::string>& method_names,
                                 const std::vector<std::vector<double>>& curves) {
    Frame f;
    Builder b(f.width, f.height);
    double hi = 0.0;
    for (double v : observed) hi = std::max(hi, v);
    for (const auto& c : curves)
        for (double v : c) hi = std::max(hi, v);
    if (hi <= 0.0) hi = 1.0;
    hi *= 1.08;
    draw_axes(b, f, title);
    y_ticks(b, f, 0.0, hi);
    const double x0 = static_cast<double>(start_week);
    const double x1 = x0 + static_cast<double>(observed.size()) - 1.0;
    auto x_of = [&](double v) {
        return x1 == x0 ? f.left : f.left + (v - x0) / (x1 - x0) * f.plot_w();
    };
    auto y_of = [&](double v) { return f.height - f.bottom - v / hi * f.plot_h(); };
    auto to_points = [&](const std::vector<double>& c) {
        std::vector<std::pair<double, double>> pts;
        for (std::size_t i = 0; i < c.size(); ++i)
            pts.emplace_back(x_of(x0 + static_cast<double>(i)), y_of(c[i]));
        return pts;
    };
    for (std::size_t i = 0; i < observed.size(); i += std::max<std::size_t>(1, observed.size() / 8)) {
        const double xw = x0 + static_cast<double>(i);
        b.line(x_of(xw), f.height - f.bottom, x_of(xw), f.height - f.bottom + 4.0, "#333333");
        b.text(x_of(xw), f.height - f.bottom + 16.0, std::to_string(start_week + static_cast<int>(i)),
               10.0, "middle");
    }
    for (std::size_t m = 0; m < method_names.size(); ++m) {
        b.polyline(to_points(curves[m]), color(m), 1.2);
        const double ly = f.top + 14.0 * m;
        b.line(f.width - f.right + 8.0, ly, f.width - f.right + 28.0, ly, color(m), 2.0);
        b.text(f.width - f.right + 32.0, ly + 4.0, method_names[m], 10.0);
    }
    b.polyline(to_points(observed), "#000000", 2.2);
    const double ly = f.top + 14.0 * method_names.size();
    b.line(f.width - f.right + 8.0, ly, f.width - f.right + 28.0, ly, "#000000", 2.2);
    b.text(f.width - f.right + 32.0, ly + 4.0, "observed", 10.0);
    return b.str();
}

}  // namespace epieval::svg
