#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "wheelrel/util.hpp"

namespace wheelrel {

enum class BoxClass : int { Vehicle = 0, Wheel = 1 };

enum class Camera : int { Front = 0, Left = 1, Right = 2, Rear = 3 };

inline const char* camera_name(Camera c) {
    switch (c) {
        case Camera::Front: return "front";
        case Camera::Left: return "left";
        case Camera::Right: return "right";
        case Camera::Rear: return "rear";
    }
    return "front";
}

inline std::optional<Camera> camera_from_name(std::string_view s) {
    if (s == "front") return Camera::Front;
    if (s == "left") return Camera::Left;
    if (s == "right") return Camera::Right;
    if (s == "rear") return Camera::Rear;
    return std::nullopt;
}

// One detection. Pixel rectangle in image coordinates (origin top-left),
// sub-pixel coordinates allowed.
struct DetBox {
    double x1 = 0.0;
    double y1 = 0.0;
    double x2 = 0.0;
    double y2 = 0.0;
    double score = 0.0; // detector confidence in [0, 1]; unused by the math core
    BoxClass class_id = BoxClass::Vehicle;
    int box_id = 0; // unique within a scene

    double width() const { return x2 - x1; }
    double height() const { return y2 - y1; }
    double center_x() const { return 0.5 * (x1 + x2); }
    double center_y() const { return 0.5 * (y1 + y2); }
    double area() const { return width() * height(); }
};

// All detections of one image plus its dimensions and ground-truth
// ownership relations (vehicle box_id, wheel box_id).
struct Scene {
    std::string image_id;
    Camera camera = Camera::Front;
    double width = 0.0;
    double height = 0.0;
    std::vector<DetBox> boxes;
    std::vector<std::pair<int, int>> relations;

    const DetBox* find_box(int box_id) const {
        for (const auto& b : boxes)
            if (b.box_id == box_id) return &b;
        return nullptr;
    }

    std::optional<int> owner_of(int wheel_box_id) const {
        for (const auto& [v, w] : relations)
            if (w == wheel_box_id) return v;
        return std::nullopt;
    }

    std::vector<int> labeled_wheel_ids() const {
        std::vector<int> out;
        out.reserve(relations.size());
        for (const auto& [v, w] : relations) out.push_back(w);
        return out;
    }
};

// First violated invariant as a human-readable message, empty when valid.
inline std::string scene_defect(const Scene& s) {
    auto fail = [&](const std::string& what) { return "scene '" + s.image_id + "': " + what; };
    if (!(s.width > 0.0) || !(s.height > 0.0))
        return fail("image dimensions must be positive, got " + std::to_string(s.width) + "x" +
                    std::to_string(s.height));
    std::set<int> ids;
    for (const auto& b : s.boxes) {
        const std::string tag = "box id " + std::to_string(b.box_id);
        if (!(b.x1 < b.x2)) return fail(tag + ": x2 must be greater than x1");
        if (!(b.y1 < b.y2)) return fail(tag + ": y2 must be greater than y1");
        if (!(b.score >= 0.0 && b.score <= 1.0))
            return fail(tag + ": score " + std::to_string(b.score) + " outside [0,1]");
        if (b.box_id < 0) return fail(tag + ": box_id must be non-negative");
        if (!ids.insert(b.box_id).second) return fail(tag + ": duplicate box_id");
        if (b.x1 < 0.0 || b.y1 < 0.0 || b.x2 > s.width || b.y2 > s.height)
            return fail(tag + ": box outside image bounds");
        if (b.class_id != BoxClass::Vehicle && b.class_id != BoxClass::Wheel)
            return fail(tag + ": unknown class_id");
    }
    std::set<int> owned_wheels;
    for (const auto& [v, w] : s.relations) {
        const std::string tag =
            "relation (" + std::to_string(v) + "," + std::to_string(w) + ")";
        const DetBox* vb = s.find_box(v);
        const DetBox* wb = s.find_box(w);
        if (vb == nullptr) return fail(tag + ": dangling vehicle box_id " + std::to_string(v));
        if (wb == nullptr) return fail(tag + ": dangling wheel box_id " + std::to_string(w));
        if (vb->class_id != BoxClass::Vehicle)
            return fail(tag + ": box " + std::to_string(v) + " is not a vehicle");
        if (wb->class_id != BoxClass::Wheel)
            return fail(tag + ": box " + std::to_string(w) + " is not a wheel");
        if (!owned_wheels.insert(w).second)
            return fail(tag + ": wheel " + std::to_string(w) + " has more than one owner");
    }
    return {};
}

inline void validate_scene(const Scene& s) {
    std::string defect = scene_defect(s);
    if (!defect.empty()) throw ValidationError(defect);
}

// Final matcher output for one scene: all pairs above the decision threshold
// plus the per-wheel unique assignment derived from them.
struct OwnershipPrediction {
    struct Pair {
        int vehicle_id = 0;
        int wheel_id = 0;
        double score = 0.0; // cosine similarity in [-1, 1] (IoU for the logic baseline)
    };

    std::string image_id;
    std::vector<Pair> pairs;
    std::map<int, int> assignments; // wheel box_id -> vehicle box_id
};

} // namespace wheelrel
