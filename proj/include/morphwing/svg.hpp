#pragma once

#include <string>
#include <vector>

namespace morphwing {

struct PlotSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

struct PlotPanel {
    std::string title;
    std::string x_label;
    std::vector<PlotSeries> series;
};

/// Line plots, panels side by side. viewBox is 420 x 320 per panel.
std::string render_svg(const std::vector<PlotPanel>& panels);
void save_svg(const std::string& path, const std::vector<PlotPanel>& panels);

}  // namespace morphwing
