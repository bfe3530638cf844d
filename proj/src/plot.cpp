#include "ecmkit/plot.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include <fmt/format.h>

#include "ecmkit/error.hpp"

namespace ecmkit {

namespace {

constexpr double kMarginLeft = 64.0;
constexpr double kMarginRight = 16.0;
constexpr double kMarginTop = 28.0;
constexpr double kMarginBottom = 44.0;

std::string escape_xml(std::string_view text) {
    std::string out;
    for (char c : text) {
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

std::string px(double v) {
    return fmt::format("{:.2f}", v);
}

struct Range {
    double lo = 0.0;
    double hi = 1.0;
};

Range padded_range(const std::vector<double>& a, const std::vector<double>& b = {}) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (const auto* v : {&a, &b}) {
        for (double x : *v) {
            if (!std::isfinite(x)) continue;
            lo = std::min(lo, x);
            hi = std::max(hi, x);
        }
    }
    if (!std::isfinite(lo)) return {0.0, 1.0};
    if (hi - lo <= 1e-12 * std::max(std::abs(lo), std::abs(hi))) {
        const double pad = lo == 0.0 ? 1.0 : 0.05 * std::abs(lo);
        return {lo - pad, hi + pad};
    }
    const double pad = 0.05 * (hi - lo);
    return {lo - pad, hi + pad};
}

// "Nice" tick positions (1, 2, 5 steps) covering the range.
std::vector<double> ticks(Range r, int target = 5) {
    const double span = r.hi - r.lo;
    const double raw = span / target;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double m : {1.0, 2.0, 5.0, 10.0}) {
        step = m * mag;
        if (span / step <= target) break;
    }
    std::vector<double> out;
    for (double t = std::ceil(r.lo / step) * step; t <= r.hi + 1e-9 * step; t += step) {
        out.push_back(std::abs(t) < 1e-12 * step ? 0.0 : t);
    }
    return out;
}

class Panel {
public:
    Panel(double x0, double y0, double width, double height, Range x, Range y)
        : x0_(x0), y0_(y0), w_(width), h_(height), x_(x), y_(y) {}

    double px_x(double v) const { return x0_ + kMarginLeft + (v - x_.lo) / (x_.hi - x_.lo) * plot_w(); }
    double px_y(double v) const { return y0_ + kMarginTop + (y_.hi - v) / (y_.hi - y_.lo) * plot_h(); }

    void axes(std::string& svg, const std::string& xlabel, const std::string& ylabel, const std::string& title) const {
        const double left = x0_ + kMarginLeft, top = y0_ + kMarginTop;
        svg += fmt::format(R"~(<rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="#333"/>)~" "\n", px(left),
                           px(top), px(plot_w()), px(plot_h()));
        for (double t : ticks(x_)) {
            const double x = px_x(t);
            svg += fmt::format(R"~(<path d="M{} {}V{}" stroke="#ddd"/>)~" "\n", px(x), px(top), px(top + plot_h()));
            svg += fmt::format(R"~(<text x="{}" y="{}" font-size="10" text-anchor="middle">{}</text>)~" "\n", px(x),
                               px(top + plot_h() + 14), fmt::format("{:.4g}", t));
        }
        for (double t : ticks(y_)) {
            const double y = px_y(t);
            svg += fmt::format(R"~(<path d="M{} {}H{}" stroke="#ddd"/>)~" "\n", px(left), px(y), px(left + plot_w()));
            svg += fmt::format(R"~(<text x="{}" y="{}" font-size="10" text-anchor="end">{}</text>)~" "\n", px(left - 4),
                               px(y + 3), fmt::format("{:.4g}", t));
        }
        svg += fmt::format(R"~(<text x="{}" y="{}" font-size="11" text-anchor="middle">{}</text>)~" "\n",
                           px(left + plot_w() / 2), px(top + plot_h() + 32), escape_xml(xlabel));
        svg += fmt::format(
            R"~(<text x="{}" y="{}" font-size="11" text-anchor="middle" transform="rotate(-90 {} {})">{}</text>)~" "\n",
            px(x0_ + 14), px(top + plot_h() / 2), px(x0_ + 14), px(top + plot_h() / 2), escape_xml(ylabel));
        if (!title.empty()) {
            svg += fmt::format(R"~(<text x="{}" y="{}" font-size="12" text-anchor="middle">{}</text>)~" "\n",
                               px(left + plot_w() / 2), px(y0_ + 18), escape_xml(title));
        }
    }

    void markers(std::string& svg, const std::vector<double>& xs, const std::vector<double>& ys,
                 const char* color) const {
        svg += fmt::format(R"~(<g class="markers" fill="{}">)~" "\n", color);
        for (std::size_t i = 0; i < xs.size(); ++i) {
            svg += fmt::format(R"~(<circle cx="{}" cy="{}" r="2.5"/>)~" "\n", px(px_x(xs[i])), px(px_y(ys[i])));
        }
        svg += "</g>\n";
    }

    void line(std::string& svg, const std::vector<double>& xs, const std::vector<double>& ys, const char* color) const {
        if (xs.empty()) return;
        std::string d;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            d += fmt::format("{}{} {}", i == 0 ? "M" : "L", px(px_x(xs[i])), px(px_y(ys[i])));
        }
        svg += fmt::format(R"~(<path class="overlay" d="{}" fill="none" stroke="{}" stroke-width="1.5"/>)~" "\n", d,
                           color);
    }

private:
    double plot_w() const { return w_ - kMarginLeft - kMarginRight; }
    double plot_h() const { return h_ - kMarginTop - kMarginBottom; }

    double x0_, y0_, w_, h_;
    Range x_, y_;
};

struct Series {
    std::vector<double> re, neg_im, log_f, log_mag, phase;
};

Series series_of(const Spectrum& s) {
    Series out;
    for (std::size_t i = 0; i < s.size(); ++i) {
        out.re.push_back(s.z[i].real());
        out.neg_im.push_back(-s.z[i].imag());
        out.log_f.push_back(std::log10(s.freq[i]));
        out.log_mag.push_back(std::log10(std::abs(s.z[i])));
        out.phase.push_back(std::arg(s.z[i]) * 180.0 / std::numbers::pi);
    }
    return out;
}

constexpr const char* kDataColor = "#1f77b4";
constexpr const char* kModelColor = "#d62728";

void nyquist_panel(std::string& svg, double x0, double y0, const PlotOptions& o, const Series& data,
                   const Series* model) {
    const Range xr = padded_range(data.re, model ? model->re : std::vector<double>{});
    const Range yr = padded_range(data.neg_im, model ? model->neg_im : std::vector<double>{});
    Panel p(x0, y0, o.panel_width, o.panel_height, xr, yr);
    p.axes(svg, "Re(Z) / Ohm", "-Im(Z) / Ohm", "Nyquist");
    p.markers(svg, data.re, data.neg_im, kDataColor);
    if (model) p.line(svg, model->re, model->neg_im, kModelColor);
}

void bode_panels(std::string& svg, double x0, double y0, const PlotOptions& o, const Series& data,
                 const Series* model) {
    const double h = o.panel_height / 2.0 + 20.0;
    const Range fr = padded_range(data.log_f, model ? model->log_f : std::vector<double>{});
    Panel mag(x0, y0, o.panel_width, h, fr, padded_range(data.log_mag, model ? model->log_mag : std::vector<double>{}));
    mag.axes(svg, "log10 f / Hz", "log10 |Z|", "Bode");
    mag.markers(svg, data.log_f, data.log_mag, kDataColor);
    if (model) mag.line(svg, model->log_f, model->log_mag, kModelColor);
    Panel ph(x0, y0 + h, o.panel_width, h, fr, padded_range(data.phase, model ? model->phase : std::vector<double>{}));
    ph.axes(svg, "log10 f / Hz", "phase / deg", "");
    ph.markers(svg, data.log_f, data.phase, kDataColor);
    if (model) ph.line(svg, model->log_f, model->phase, kModelColor);
}

std::string svg_open(double width, double height) {
    return fmt::format(R"~(<?xml version="1.0" encoding="UTF-8"?>)~" "\n"
                       R"~(<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{}" height="{}" )~"
                       R"~(viewBox="0 0 {} {}" font-family="sans-serif">)~" "\n"
                       R"~(<rect width="100%" height="100%" fill="white"/>)~" "\n",
                       px(width), px(height), px(width), px(height));
}

}  // namespace

PlotKind plot_kind_from_string(std::string_view name) {
    if (name == "nyquist") return PlotKind::Nyquist;
    if (name == "bode") return PlotKind::Bode;
    if (name == "combined") return PlotKind::Combined;
    throw Error(ErrorCode::InvalidConfig, fmt::format("unknown plot kind '{}'", name));
}

std::string plot_spectrum(const Spectrum& s, PlotKind kind, const PlotOptions& options) {
    if (s.empty()) throw Error(ErrorCode::EmptySpectrum, "cannot plot an empty spectrum");
    const Series data = series_of(s);
    std::optional<Series> model;
    if (options.overlay && !options.overlay->empty()) model = series_of(*options.overlay);
    const Series* m = model ? &*model : nullptr;

    const double title_h = options.title.empty() ? 0.0 : 24.0;
    const double panels = kind == PlotKind::Combined ? 2.0 : 1.0;
    const double bode_h = kind == PlotKind::Nyquist ? 0.0 : options.panel_height + 40.0;
    const double height = title_h + std::max(kind == PlotKind::Bode ? 0.0 : options.panel_height, bode_h);
    std::string svg = svg_open(panels * options.panel_width, height);
    if (!options.title.empty()) {
        svg += fmt::format(R"~(<text x="{}" y="17" font-size="14" text-anchor="middle">{}</text>)~" "\n",
                           px(panels * options.panel_width / 2), escape_xml(options.title));
    }
    switch (kind) {
        case PlotKind::Nyquist: nyquist_panel(svg, 0.0, title_h, options, data, m); break;
        case PlotKind::Bode: bode_panels(svg, 0.0, title_h, options, data, m); break;
        case PlotKind::Combined:
            bode_panels(svg, 0.0, title_h, options, data, m);
            nyquist_panel(svg, options.panel_width, title_h, options, data, m);
            break;
    }
    svg += "</svg>\n";
    return svg;
}

std::string plot_confusion(const ConfusionMatrix& cm, const std::string& title) {
    const std::size_t k = cm.size();
    constexpr double cell = 48.0, left = 140.0, top = 60.0, bottom = 120.0;
    const double width = left + cell * double(k) + 20.0;
    const double height = top + cell * double(k) + bottom;
    std::string svg = svg_open(width, height);
    if (!title.empty()) {
        svg += fmt::format(R"~(<text x="{}" y="20" font-size="14" text-anchor="middle">{}</text>)~" "\n", px(width / 2),
                           escape_xml(title));
    }
    const auto norm = cm.row_normalized();
    for (std::size_t t = 0; t < k; ++t) {
        for (std::size_t p = 0; p < k; ++p) {
            const double v = norm[t][p];
            // White to dark blue.
            const int r = static_cast<int>(std::lround(255.0 - v * (255.0 - 8.0)));
            const int g = static_cast<int>(std::lround(255.0 - v * (255.0 - 48.0)));
            const int b = static_cast<int>(std::lround(255.0 - v * (255.0 - 107.0)));
            const double x = left + cell * double(p), y = top + cell * double(t);
            svg += fmt::format(R"~(<rect x="{}" y="{}" width="{}" height="{}" fill="#{:02x}{:02x}{:02x}" stroke="#fff"/>)~"
                               "\n",
                               px(x), px(y), px(cell), px(cell), r, g, b);
            svg += fmt::format(R"~(<text x="{}" y="{}" font-size="11" text-anchor="middle" fill="{}">{}</text>)~" "\n",
                               px(x + cell / 2), px(y + cell / 2 + 4), v > 0.5 ? "#fff" : "#000", cm.counts[t][p]);
        }
        svg += fmt::format(R"~(<text x="{}" y="{}" font-size="11" text-anchor="end">{}</text>)~" "\n", px(left - 6),
                           px(top + cell * double(t) + cell / 2 + 4), escape_xml(cm.classes[t]));
        const double cx = left + cell * double(t) + cell / 2, cy = top + cell * double(k) + 8;
        svg += fmt::format(
            R"~(<text x="{}" y="{}" font-size="11" text-anchor="end" transform="rotate(-45 {} {})">{}</text>)~" "\n",
            px(cx), px(cy), px(cx), px(cy), escape_xml(cm.classes[t]));
    }
    svg += fmt::format(R"~(<text x="{}" y="{}" font-size="12" text-anchor="middle">predicted</text>)~" "\n",
                       px(left + cell * double(k) / 2), px(height - 8));
    svg += fmt::format(R"~(<text x="14" y="{}" font-size="12" text-anchor="middle" transform="rotate(-90 14 {})">true</text>)~"
                       "\n",
                       px(top + cell * double(k) / 2), px(top + cell * double(k) / 2));
    svg += "</svg>\n";
    return svg;
}

}  // namespace ecmkit
