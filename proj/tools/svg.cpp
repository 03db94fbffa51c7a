#include "svg.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <string_view>

namespace ddc::cli {
namespace {

constexpr double kPanelSize = 600.0;
constexpr double kMargin = 30.0;
constexpr double kTitleHeight = 24.0;
constexpr std::string_view kNoiseColour = "#b0b0b0";

constexpr std::array<std::string_view, 10> kPalette{
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
    "#8c564b", "#e377c2", "#17becf", "#bcbd22", "#393b79",
};

std::string_view colour(int label) {
    if (label < 0) return kNoiseColour;
    return kPalette[static_cast<std::size_t>(label) % kPalette.size()];
}

std::string escape(std::string_view text) {
    std::string out;
    for (const char c : text) {
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

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

// Maps data coordinates into a square panel, y pointing up, aspect kept.
struct Frame {
    BBox box;
    double scale = 1.0;
    double x0 = 0.0;
    double y0 = 0.0;

    Point2 map(Point2 p) const {
        return {x0 + (p.x - box.min_x) * scale, y0 + kPanelSize - (p.y - box.min_y) * scale};
    }
};

BBox extent(std::span<const SvgPanel> panels) {
    BBox box;
    bool any = false;
    auto add = [&](Point2 p) {
        if (!any) {
            box = BBox{p.x, p.y, p.x, p.y};
            any = true;
        } else {
            box.min_x = std::min(box.min_x, p.x);
            box.min_y = std::min(box.min_y, p.y);
            box.max_x = std::max(box.max_x, p.x);
            box.max_y = std::max(box.max_y, p.y);
        }
    };
    for (const auto& panel : panels) {
        for (const auto& p : panel.points) add(p);
        for (const auto& c : panel.contours)
            for (const auto& v : c.polygon.vertices()) add(v);
    }
    if (!any) box = BBox{0.0, 0.0, 1.0, 1.0};
    return box;
}

}  // namespace

std::string render_svg(std::span<const SvgPanel> panels) {
    const BBox box = extent(panels);
    const double span = std::max({box.width(), box.height(), 1e-9});
    const double width = kMargin + static_cast<double>(panels.size()) * (kPanelSize + kMargin);
    const double height = kTitleHeight + kPanelSize + 2.0 * kMargin;

    std::string out;
    out += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(width) + "\" height=\"" + fmt(height) +
           "\" viewBox=\"0 0 " + fmt(width) + " " + fmt(height) + "\">\n";
    out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

    for (std::size_t i = 0; i < panels.size(); ++i) {
        const auto& panel = panels[i];
        Frame frame{box, kPanelSize / span, kMargin + static_cast<double>(i) * (kPanelSize + kMargin),
                    kMargin + kTitleHeight};
        out += "<g class=\"panel\">\n";
        out += "<text x=\"" + fmt(frame.x0) + "\" y=\"" + fmt(kMargin + kTitleHeight * 0.6) +
               "\" font-family=\"sans-serif\" font-size=\"16\">" + escape(panel.title) + "</text>\n";
        out += "<rect x=\"" + fmt(frame.x0) + "\" y=\"" + fmt(frame.y0) + "\" width=\"" + fmt(kPanelSize) +
               "\" height=\"" + fmt(kPanelSize) + "\" fill=\"none\" stroke=\"#dddddd\"/>\n";

        // Noise first so clustered points stay visible on top of it.
        for (const bool noise_pass : {true, false}) {
            for (std::size_t k = 0; k < panel.points.size(); ++k) {
                const int label = k < panel.labels.size() ? panel.labels[k] : -1;
                if ((label < 0) != noise_pass) continue;
                const Point2 q = frame.map(panel.points[k]);
                out += "<circle cx=\"" + fmt(q.x) + "\" cy=\"" + fmt(q.y) + "\" r=\"1.2\" fill=\"";
                out += colour(label);
                out += "\"/>\n";
            }
        }

        for (std::size_t c = 0; c < panel.contours.size(); ++c) {
            const auto& verts = panel.contours[c].polygon.vertices();
            std::string d;
            for (std::size_t v = 0; v < verts.size(); ++v) {
                const Point2 q = frame.map(verts[v]);
                d += (v == 0 ? "M" : " L") + fmt(q.x) + " " + fmt(q.y);
            }
            d += " Z";
            const auto stroke = colour(static_cast<int>(c));
            out += "<path class=\"contour\" d=\"" + d + "\" fill=\"";
            out += stroke;
            out += "\" fill-opacity=\"0.12\" stroke=\"";
            out += stroke;
            out += "\" stroke-width=\"1.5\"/>\n";
        }
        out += "</g>\n";
    }
    out += "</svg>\n";
    return out;
}

}  // namespace ddc::cli
