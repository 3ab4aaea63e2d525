#include <algorithm>
#include <cstdio>
#include <limits>

#include "flapkin/error.hpp"
#include "flapkin/io.hpp"
#include "flapkin/kinematics.hpp"

namespace flapkin {

namespace {

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", v + 0.0);
    return buf;
}

struct Box {
    double xmin = std::numeric_limits<double>::infinity();
    double ymin = std::numeric_limits<double>::infinity();
    double xmax = -std::numeric_limits<double>::infinity();
    double ymax = -std::numeric_limits<double>::infinity();

    void add(const Point2& p) {
        xmin = std::min(xmin, p.x());
        ymin = std::min(ymin, p.y());
        xmax = std::max(xmax, p.x());
        ymax = std::max(ymax, p.y());
    }
};

}  // namespace

std::vector<std::string> render_svg(const GaitEvaluation& ev, const Mechanism& m, std::size_t frames) {
    const std::size_t n = ev.configurations.size();
    if (frames == 0 || frames > n) {
        throw Error(ErrorCode::InvalidArgument, "frame count must lie in [1, samples]");
    }

    Box box;
    for (const auto& c : ev.configurations) {
        for (std::size_t l = 0; l < m.links.size(); ++l) {
            for (const auto& mk : m.links[l].markers) box.add(c.poses[l].apply(mk.at));
        }
    }
    const double span = std::max({box.xmax - box.xmin, box.ymax - box.ymin, 1e-9});
    const double margin = 0.05 * span;
    const double x0 = box.xmin - margin, y0 = box.ymin - margin;
    const double w = box.xmax - box.xmin + 2.0 * margin, h = box.ymax - box.ymin + 2.0 * margin;
    // The group flips y, so the viewBox is expressed in flipped coordinates.
    const std::string view = num(x0) + " " + num(-(y0 + h)) + " " + num(w) + " " + num(h);
    const std::string stroke = num(0.004 * span);
    const std::string radius = num(0.012 * span);

    std::vector<std::string> out;
    out.reserve(frames);
    for (std::size_t f = 0; f < frames; ++f) {
        const std::size_t k = f * n / frames;
        const Configuration& c = ev.configurations[k];
        std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"" + view + "\">\n";
        svg += "<g transform=\"scale(1,-1)\" stroke-width=\"" + stroke + "\">\n";

        if (wing_area(m, c) >= 1e-12) {
            svg += "<polygon class=\"wing\" fill=\"#9ab\" fill-opacity=\"0.4\" stroke=\"none\" points=\"";
            for (std::size_t i = 0; i < m.wing_polygon.size(); ++i) {
                const Point2 p = marker_world(m, c, m.wing_polygon[i]);
                if (i) svg += ' ';
                svg += num(p.x()) + "," + num(p.y());
            }
            svg += "\"/>\n";
        }
        for (std::size_t l = 0; l < m.links.size(); ++l) {
            const auto& link = m.links[l];
            const Point2 root = c.poses[l].apply(link.markers.front().at);
            for (std::size_t i = 1; i < link.markers.size(); ++i) {
                const Point2 p = c.poses[l].apply(link.markers[i].at);
                svg += "<line class=\"link\" data-link=\"" + link.id + "\" x1=\"" + num(root.x()) + "\" y1=\"" +
                       num(root.y()) + "\" x2=\"" + num(p.x()) + "\" y2=\"" + num(p.y()) + "\" stroke=\"#222\"/>\n";
            }
        }
        for (const auto& joint : m.joints) {
            const Point2 p = marker_world(m, c, joint.a);
            svg += "<circle class=\"";
            svg += joint.is_compliant() ? "hinge" : "pin";
            svg += "\" cx=\"" + num(p.x()) + "\" cy=\"" + num(p.y()) + "\" r=\"" + radius + "\" fill=\"";
            svg += joint.is_compliant() ? "#111" : "none";
            svg += "\" stroke=\"#111\"/>\n";
        }
        svg += "</g>\n</svg>\n";
        out.push_back(std::move(svg));
    }
    return out;
}

}  // namespace flapkin
