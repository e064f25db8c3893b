#pragma once

#include <cstdarg>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "wheelrel/scene.hpp"

namespace wheelrel {

namespace detail {

inline void svg_appendf(std::string& out, const char* fmt, ...) {
    char buf[512];
    va_list args;
    va_start(args, fmt);
    std::vsnprintf(buf, sizeof buf, fmt, args);
    va_end(args);
    out += buf;
}

} // namespace detail

// Renders the scene as an SVG overlay: orange vehicle boxes, cyan wheel
// boxes, box ids in the top-left corners. Ownership is drawn as lines from
// wheel centers to the vehicle center — blue for a front wheel, green for the
// rear wheel of a two-wheel vehicle — plus a red line joining the two wheels
// of the same vehicle. Pass a prediction to draw its assignments instead of
// the labeled relations.
inline std::string scene_to_svg(const Scene& scene, const OwnershipPrediction* pred = nullptr) {
    std::map<int, std::vector<int>> wheels_of;
    if (pred) {
        for (const auto& [wid, vid] : pred->assignments) wheels_of[vid].push_back(wid);
    } else {
        for (const auto& rel : scene.relations) wheels_of[rel.first].push_back(rel.second);
    }

    std::string out;
    detail::svg_appendf(out,
                        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.0f\" "
                        "height=\"%.0f\" viewBox=\"0 0 %.0f %.0f\">\n",
                        scene.width, scene.height, scene.width, scene.height);
    detail::svg_appendf(out, "  <rect width=\"%.0f\" height=\"%.0f\" fill=\"#1b1e23\"/>\n",
                        scene.width, scene.height);

    for (const auto& [vid, wheel_ids] : wheels_of) {
        const DetBox* v = scene.find_box(vid);
        if (!v) continue;
        // rear wheel = larger center x, when the vehicle has two wheels
        int rear_id = -1;
        if (wheel_ids.size() >= 2) {
            double best = -1.0;
            for (int wid : wheel_ids) {
                const DetBox* w = scene.find_box(wid);
                if (w && w->center_x() > best) {
                    best = w->center_x();
                    rear_id = wid;
                }
            }
        }
        for (int wid : wheel_ids) {
            const DetBox* w = scene.find_box(wid);
            if (!w) continue;
            const char* color = wid == rear_id ? "#59a14f" : "#4e79a7"; // rear green, front blue
            detail::svg_appendf(out,
                                "  <line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" "
                                "stroke=\"%s\" stroke-width=\"2\"/>\n",
                                w->center_x(), w->center_y(), v->center_x(), v->center_y(),
                                color);
        }
        if (wheel_ids.size() == 2) {
            const DetBox* a = scene.find_box(wheel_ids[0]);
            const DetBox* b = scene.find_box(wheel_ids[1]);
            if (a && b)
                detail::svg_appendf(out,
                                    "  <line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" "
                                    "stroke=\"#e15759\" stroke-width=\"2\"/>\n",
                                    a->center_x(), a->center_y(), b->center_x(), b->center_y());
        }
    }

    for (const DetBox& b : scene.boxes) {
        bool vehicle = b.class_id == BoxClass::Vehicle;
        const char* color = vehicle ? "#f28e2b" : "#4ec9d4";
        detail::svg_appendf(out,
                            "  <rect x=\"%.1f\" y=\"%.1f\" width=\"%.1f\" height=\"%.1f\" "
                            "fill=\"none\" stroke=\"%s\" stroke-width=\"2\"/>\n",
                            b.x1, b.y1, b.width(), b.height(), color);
        detail::svg_appendf(out,
                            "  <text x=\"%.1f\" y=\"%.1f\" fill=\"%s\" font-family=\"monospace\" "
                            "font-size=\"14\">%d</text>\n",
                            b.x1 + 3.0, b.y1 + 15.0, color, b.box_id);
    }
    out += "</svg>\n";
    return out;
}

} // namespace wheelrel
