#pragma once

// Small SVG chart writer: line/scatter panels, bar histograms and a grid
// layout that places panels side by side.

#include <optional>
#include <string>
#include <vector>

namespace propforge::plot {

struct Series final {
    std::string name;
    std::vector<double> x;
    std::vector<double> y;
    std::string color = "#1f77b4";
    bool line = true;
    bool markers = false;
};

struct Panel final {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<Series> series;
    bool diagonal = false;  // draw y = x
    std::optional<std::pair<double, double>> highlight;
    bool log_x = false;
};

struct Bars final {
    std::string title;
    double lo = 0.0;
    double hi = 1.0;
    std::vector<std::size_t> counts;
    std::string color = "#4c72b0";
};

inline constexpr int kPanelWidth = 360;
inline constexpr int kPanelHeight = 300;

// Each returns an <svg> element of kPanelWidth x kPanelHeight.
std::string render(const Panel& panel);
std::string render(const Bars& bars);

// Lays out panel SVGs in rows of `columns` under an optional title.
std::string grid(const std::vector<std::string>& panels, int columns, const std::string& title = {});

}  // namespace propforge::plot
