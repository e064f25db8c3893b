#pragma once

#include <array>
#include <cmath>
#include <optional>

#include "wheelrel/scene.hpp"

namespace wheelrel {

// Normalized geometry of one ordered pair (A, B). For vehicle-wheel pairs A is
// the vehicle and B the wheel; for wheel-wheel pairs A is the rear wheel and B
// the front wheel. Positions are box centers; everything is divided by the
// image dimensions so the quantities are invariant under joint rescaling.
struct PairGeometry {
    double d = 0.0;     // normalized center distance
    double ratio = 0.0; // 2d / (W_B/W + H_B/H)
    std::optional<double> log_ratio; // ln(ratio); absent when the centers coincide
    std::array<double, 2> a_pos{};   // (A_x/W, A_y/H)
    std::array<double, 2> b_pos{};   // (B_x/W, B_y/H)
    std::array<double, 2> b_dims{};  // (W_B/W, H_B/H)
};

inline PairGeometry pair_geometry(const DetBox& a, const DetBox& b, double width, double height) {
    if (!(width > 0.0) || !(height > 0.0))
        throw ValidationError("pair_geometry: image dimensions must be positive");
    PairGeometry g;
    g.a_pos = {a.center_x() / width, a.center_y() / height};
    g.b_pos = {b.center_x() / width, b.center_y() / height};
    g.b_dims = {b.width() / width, b.height() / height};
    double dx = g.a_pos[0] - g.b_pos[0];
    double dy = g.a_pos[1] - g.b_pos[1];
    g.d = std::sqrt(dx * dx + dy * dy);
    if (g.d > 0.0) {
        g.ratio = 2.0 * g.d / (g.b_dims[0] + g.b_dims[1]);
        g.log_ratio = std::log(g.ratio);
    }
    return g;
}

} // namespace wheelrel
