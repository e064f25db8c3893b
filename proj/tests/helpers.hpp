#pragma once

// Shared scene/prior construction shorthand for the test suite.

#include <string>
#include <utility>
#include <vector>

#include "wheelrel/prior.hpp"
#include "wheelrel/scene.hpp"

namespace testutil {

inline wheelrel::DetBox box(double x1, double y1, double x2, double y2,
                            wheelrel::BoxClass cls, int id, double score = 0.9) {
    wheelrel::DetBox b;
    b.x1 = x1;
    b.y1 = y1;
    b.x2 = x2;
    b.y2 = y2;
    b.score = score;
    b.class_id = cls;
    b.box_id = id;
    return b;
}

inline wheelrel::DetBox vehicle(double x1, double y1, double x2, double y2, int id) {
    return box(x1, y1, x2, y2, wheelrel::BoxClass::Vehicle, id);
}

inline wheelrel::DetBox wheel(double x1, double y1, double x2, double y2, int id) {
    return box(x1, y1, x2, y2, wheelrel::BoxClass::Wheel, id);
}

inline wheelrel::Scene scene(std::string id, double w, double h,
                             std::vector<wheelrel::DetBox> boxes,
                             std::vector<std::pair<int, int>> relations = {}) {
    wheelrel::Scene s;
    s.image_id = std::move(id);
    s.width = w;
    s.height = h;
    s.boxes = std::move(boxes);
    s.relations = std::move(relations);
    return s;
}

// One vehicle spanning most of the frame with two wheels at its bottom
// corners. The canonical well-formed fixture.
inline wheelrel::Scene one_vehicle_two_wheels() {
    return scene("fixture", 1000, 800,
                 {vehicle(100, 200, 700, 560, 0), wheel(130, 480, 210, 556, 1),
                  wheel(560, 480, 640, 556, 2)},
                 {{0, 1}, {0, 2}});
}

// A prior whose mixtures are so wide that every physically plausible pair
// gets weight ~1; lets topology tests ignore the density details.
inline wheelrel::PriorModel flat_prior() {
    wheelrel::GaussianMixture wv{{{1.0, 0.0, 50.0}}, wheelrel::PairKind::WheelVehicle};
    wheelrel::GaussianMixture ww{{{1.0, 0.0, 50.0}}, wheelrel::PairKind::WheelWheel};
    return wheelrel::make_prior_model(std::move(wv), std::move(ww));
}

} // namespace testutil
