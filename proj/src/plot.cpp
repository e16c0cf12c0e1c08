#include "propforge/plot.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "propforge/csv.hpp"

namespace propforge::plot {

namespace {

constexpr double kLeft = 52;
constexpr double kRight = 12;
constexpr double kTop = 28;
constexpr double kBottom = 40;

std::string escape(const std::string& s) {
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

std::string num(double v) { return csv::format_number(std::round(v * 100.0) / 100.0); }

std::string tick_label(double v) {
    std::ostringstream s;
    s.precision(3);
    s << v;
    return s.str();
}

struct Range {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();

    void add(double v) {
        if (!std::isfinite(v)) return;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    void finish() {
        if (!std::isfinite(lo)) {
            lo = 0.0;
            hi = 1.0;
        }
        if (hi - lo < 1e-12) {
            lo -= 0.5;
            hi += 0.5;
        }
        const double pad = 0.05 * (hi - lo);
        lo -= pad;
        hi += pad;
    }
};

class Frame {
public:
    Frame(Range x, Range y, bool log_x) : x_(x), y_(y), log_x_(log_x) {}

    double px(double v) const {
        double lo = x_.lo, hi = x_.hi;
        if (log_x_) {
            v = std::log10(v);
            lo = std::log10(lo);
            hi = std::log10(hi);
        }
        return kLeft + (v - lo) / (hi - lo) * (kPanelWidth - kLeft - kRight);
    }
    double py(double v) const { return kPanelHeight - kBottom - (v - y_.lo) / (y_.hi - y_.lo) * (kPanelHeight - kTop - kBottom); }

    void axes(std::ostringstream& out, const std::string& title, const std::string& xl, const std::string& yl) const {
        const double x0 = kLeft, x1 = kPanelWidth - kRight, y0 = kPanelHeight - kBottom, y1 = kTop;
        out << "<rect x=\"" << x0 << "\" y=\"" << y1 << "\" width=\"" << x1 - x0 << "\" height=\"" << y0 - y1
            << "\" fill=\"none\" stroke=\"#333\"/>\n";
        for (int i = 0; i <= 4; ++i) {
            const double fx = x_.lo + (x_.hi - x_.lo) * i / 4.0;
            const double xv = log_x_ ? std::pow(10.0, std::log10(x_.lo) + (std::log10(x_.hi) - std::log10(x_.lo)) * i / 4.0) : fx;
            out << "<text x=\"" << num(px(xv)) << "\" y=\"" << y0 + 14 << "\" font-size=\"10\" text-anchor=\"middle\">"
                << tick_label(xv) << "</text>\n";
            const double yv = y_.lo + (y_.hi - y_.lo) * i / 4.0;
            out << "<text x=\"" << x0 - 4 << "\" y=\"" << num(py(yv) + 3) << "\" font-size=\"10\" text-anchor=\"end\">"
                << tick_label(yv) << "</text>\n";
        }
        out << "<text x=\"" << kPanelWidth / 2 << "\" y=\"16\" font-size=\"12\" text-anchor=\"middle\">" << escape(title)
            << "</text>\n";
        out << "<text x=\"" << (x0 + x1) / 2 << "\" y=\"" << kPanelHeight - 6
            << "\" font-size=\"11\" text-anchor=\"middle\">" << escape(xl) << "</text>\n";
        out << "<text x=\"12\" y=\"" << (y0 + y1) / 2 << "\" font-size=\"11\" text-anchor=\"middle\" transform=\"rotate(-90 12 "
            << (y0 + y1) / 2 << ")\">" << escape(yl) << "</text>\n";
    }

private:
    Range x_, y_;
    bool log_x_;
};

std::string open_svg(int w, int h) {
    std::ostringstream s;
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\" viewBox=\"0 0 " << w
      << ' ' << h << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    return s.str();
}

}  // namespace

std::string render(const Panel& panel) {
    Range xr, yr;
    for (const auto& s : panel.series) {
        for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
            if (!std::isfinite(s.y[i]) || (panel.log_x && !(s.x[i] > 0))) continue;
            xr.add(s.x[i]);
            yr.add(s.y[i]);
        }
    }
    if (panel.highlight) {
        xr.add(panel.highlight->first);
        yr.add(panel.highlight->second);
    }
    if (panel.diagonal) {
        const double lo = std::min(xr.lo, yr.lo), hi = std::max(xr.hi, yr.hi);
        xr.lo = yr.lo = lo;
        xr.hi = yr.hi = hi;
    }
    xr.finish();
    yr.finish();
    if (panel.log_x && xr.lo <= 0) xr.lo = xr.hi / 100.0;
    const Frame f(xr, yr, panel.log_x);

    std::ostringstream out;
    out << open_svg(kPanelWidth, kPanelHeight);
    f.axes(out, panel.title, panel.x_label, panel.y_label);
    if (panel.diagonal) {
        out << "<line x1=\"" << num(f.px(xr.lo)) << "\" y1=\"" << num(f.py(xr.lo)) << "\" x2=\"" << num(f.px(xr.hi))
            << "\" y2=\"" << num(f.py(xr.hi)) << "\" stroke=\"#999\" stroke-dasharray=\"4 3\"/>\n";
    }
    int legend_row = 0;
    for (const auto& s : panel.series) {
        std::ostringstream pts;
        for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
            if (!std::isfinite(s.y[i]) || (panel.log_x && !(s.x[i] > 0))) continue;
            pts << num(f.px(s.x[i])) << ',' << num(f.py(s.y[i])) << ' ';
            if (s.markers) {
                out << "<circle cx=\"" << num(f.px(s.x[i])) << "\" cy=\"" << num(f.py(s.y[i]))
                    << "\" r=\"2\" fill=\"" << s.color << "\" fill-opacity=\"0.7\"/>\n";
            }
        }
        if (s.line) {
            out << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\" points=\"" << pts.str()
                << "\"/>\n";
        }
        if (panel.series.size() > 1 && !s.name.empty()) {
            const double y = kTop + 12 + 13 * legend_row++;
            out << "<line x1=\"" << kLeft + 8 << "\" y1=\"" << y - 4 << "\" x2=\"" << kLeft + 22 << "\" y2=\"" << y - 4
                << "\" stroke=\"" << s.color << "\" stroke-width=\"2\"/>\n<text x=\"" << kLeft + 26 << "\" y=\"" << y
                << "\" font-size=\"10\">" << escape(s.name) << "</text>\n";
        }
    }
    if (panel.highlight) {
        out << "<circle cx=\"" << num(f.px(panel.highlight->first)) << "\" cy=\"" << num(f.py(panel.highlight->second))
            << "\" r=\"4\" fill=\"none\" stroke=\"black\" stroke-width=\"1.5\"/>\n";
    }
    out << "</svg>\n";
    return out.str();
}

std::string render(const Bars& bars) {
    Range xr{bars.lo, bars.hi};
    Range yr{0.0, 1.0};
    for (auto c : bars.counts) yr.hi = std::max(yr.hi, static_cast<double>(c) * 1.08);
    const Frame f(xr, yr, false);
    std::ostringstream out;
    out << open_svg(kPanelWidth, kPanelHeight);
    f.axes(out, bars.title, bars.title, "count");
    const double width = (bars.hi - bars.lo) / static_cast<double>(std::max<std::size_t>(1, bars.counts.size()));
    for (std::size_t i = 0; i < bars.counts.size(); ++i) {
        const double a = bars.lo + width * static_cast<double>(i);
        const double x0 = f.px(a), x1 = f.px(a + width);
        const double top = f.py(static_cast<double>(bars.counts[i])), base = f.py(0.0);
        out << "<rect x=\"" << num(x0) << "\" y=\"" << num(top) << "\" width=\"" << num(std::max(0.0, x1 - x0 - 1))
            << "\" height=\"" << num(base - top) << "\" fill=\"" << bars.color << "\"/>\n";
    }
    out << "</svg>\n";
    return out.str();
}

std::string grid(const std::vector<std::string>& panels, int columns, const std::string& title) {
    columns = std::max(1, columns);
    const int n = static_cast<int>(panels.size());
    const int cols = std::min(columns, std::max(1, n));
    const int rows = (n + columns - 1) / columns;
    const int header = title.empty() ? 0 : 30;
    const int w = cols * kPanelWidth;
    const int h = header + std::max(1, rows) * kPanelHeight;
    std::ostringstream out;
    out << open_svg(w, h);
    if (!title.empty()) {
        out << "<text x=\"" << w / 2 << "\" y=\"20\" font-size=\"15\" text-anchor=\"middle\">" << escape(title)
            << "</text>\n";
    }
    for (int i = 0; i < n; ++i) {
        const int x = (i % columns) * kPanelWidth;
        const int y = header + (i / columns) * kPanelHeight;
        out << "<g transform=\"translate(" << x << ',' << y << ")\">\n" << panels[static_cast<std::size_t>(i)] << "</g>\n";
    }
    out << "</svg>\n";
    return out.str();
}

}  // namespace propforge::plot
