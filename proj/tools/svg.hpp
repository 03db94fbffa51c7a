#pragma once

#include <span>
#include <string>
#include <vector>

#include "ddc/aggregation.hpp"
#include "ddc/geometry.hpp"

namespace ddc::cli {

// One scatter panel: points coloured by label (negative labels drawn gray)
// with every contour overlaid as a single path element.
struct SvgPanel {
    std::string title;
    std::span<const Point2> points;
    std::span<const int> labels;
    std::span<const Contour> contours;
};

// Panels are laid out left to right on a shared coordinate frame. The result
// is a standalone SVG document.
std::string render_svg(std::span<const SvgPanel> panels);

}  // namespace ddc::cli
