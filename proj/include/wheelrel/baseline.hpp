#pragma once

#include <algorithm>
#include <cmath>

#include "wheelrel/graph.hpp"
#include "wheelrel/scene.hpp"

namespace wheelrel {

inline double iou(const DetBox& a, const DetBox& b) {
    double ix = std::max(0.0, std::min(a.x2, b.x2) - std::max(a.x1, b.x1));
    double iy = std::max(0.0, std::min(a.y2, b.y2) - std::max(a.y1, b.y1));
    double inter = ix * iy;
    double uni = a.area() + b.area() - inter;
    return uni > 0.0 ? inter / uni : 0.0;
}

// Overlap-heuristic owner assignment: each unmasked wheel goes to the
// unmasked vehicle with the highest IoU among those actually overlapping it.
// Near-exact IoU ties (within 1e-9) fall back to the nearest vehicle center,
// then to the smaller box id. Wheels overlapping nothing stay unassigned.
inline OwnershipPrediction logic_assign(const Scene& scene, double mask_tau = 0.02) {
    OwnershipPrediction pred;
    pred.image_id = scene.image_id;
    std::vector<bool> kept = small_object_mask(scene, mask_tau);
    for (std::size_t wi = 0; wi < scene.boxes.size(); ++wi) {
        const DetBox& wheel = scene.boxes[wi];
        if (!kept[wi] || wheel.class_id != BoxClass::Wheel) continue;
        const DetBox* best = nullptr;
        double best_iou = 0.0, best_dist = 0.0;
        for (std::size_t vi = 0; vi < scene.boxes.size(); ++vi) {
            const DetBox& veh = scene.boxes[vi];
            if (!kept[vi] || veh.class_id != BoxClass::Vehicle) continue;
            double overlap = iou(wheel, veh);
            if (overlap <= 0.0) continue;
            double dist = std::hypot(veh.center_x() - wheel.center_x(),
                                     veh.center_y() - wheel.center_y());
            bool take = false;
            if (!best || overlap > best_iou + 1e-9) {
                take = true;
            } else if (overlap > best_iou - 1e-9) { // IoU tie
                if (dist < best_dist)
                    take = true;
                else if (dist == best_dist && veh.box_id < best->box_id)
                    take = true;
            }
            if (take) {
                best = &veh;
                best_iou = overlap;
                best_dist = dist;
            }
        }
        if (best) {
            pred.pairs.push_back({best->box_id, wheel.box_id, best_iou});
            pred.assignments[wheel.box_id] = best->box_id;
        }
    }
    std::sort(pred.pairs.begin(), pred.pairs.end(), [](const auto& a, const auto& b) {
        return a.wheel_id != b.wheel_id ? a.wheel_id < b.wheel_id : a.vehicle_id < b.vehicle_id;
    });
    return pred;
}

} // namespace wheelrel
