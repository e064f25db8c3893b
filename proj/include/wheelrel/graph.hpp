#pragma once

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "wheelrel/geometry.hpp"
#include "wheelrel/prior.hpp"
#include "wheelrel/scene.hpp"

namespace wheelrel {

struct GraphConfig {
    double edge_epsilon = 1e-3; // prior weights below this do not become edges
    double mask_tau = 0.02;     // min side, as an image fraction, to stay in the graph
};

// True per box when it stays in the graph. A box drops out when its smaller
// side, relative to the matching image dimension, falls under tau.
inline std::vector<bool> small_object_mask(const Scene& scene, double tau) {
    std::vector<bool> keep(scene.boxes.size());
    for (std::size_t i = 0; i < scene.boxes.size(); ++i) {
        const DetBox& b = scene.boxes[i];
        double frac = std::min(b.width() / scene.width, b.height() / scene.height);
        keep[i] = frac >= tau;
    }
    return keep;
}

constexpr std::size_t kGeomFeatureDim = 16;

// Scale-free description of one box: normalized corners, center, extents,
// area and aspect summaries, class indicators, detector score, bias.
inline std::array<double, kGeomFeatureDim> geometric_features(const DetBox& b, double width,
                                                              double height) {
    double w = b.width() / width;
    double h = b.height() / height;
    return {b.x1 / width,
            b.y1 / height,
            b.x2 / width,
            b.y2 / height,
            b.center_x() / width,
            b.center_y() / height,
            w,
            h,
            std::sqrt(w * h),
            std::log(b.width() / b.height()),
            std::min(w, h),
            std::max(w, h),
            b.class_id == BoxClass::Vehicle ? 1.0 : 0.0,
            b.class_id == BoxClass::Wheel ? 1.0 : 0.0,
            b.score,
            1.0};
}

struct GraphNode {
    int box_id = 0;
    BoxClass cls = BoxClass::Vehicle;
    std::array<double, kGeomFeatureDim> features{};
};

struct GraphEdge {
    std::size_t a = 0; // vehicle index for vehicle-wheel, rear-wheel index for wheel-wheel
    std::size_t b = 0; // wheel index, or front-wheel index
    PairKind kind = PairKind::WheelVehicle;
    double weight = 0.0;
};

// Scene graph with one node per detection box, index-aligned with
// scene.boxes. Masked-out nodes keep their slot but get all-zero adjacency
// rows and columns. The adjacency is symmetric with a zero diagonal and
// carries the geometric prior weight of each edge.
struct RelGraph {
    std::string image_id;
    std::vector<GraphNode> nodes;
    std::vector<bool> kept;
    std::vector<double> adjacency; // dense n*n, row major
    std::vector<GraphEdge> edges;

    std::size_t size() const { return nodes.size(); }
    double weight(std::size_t i, std::size_t j) const { return adjacency[i * nodes.size() + j]; }

    std::vector<std::size_t> neighbors(std::size_t i) const {
        std::vector<std::size_t> out;
        for (std::size_t j = 0; j < nodes.size(); ++j)
            if (adjacency[i * nodes.size() + j] > 0.0) out.push_back(j);
        return out;
    }
};

// Orders a wheel pair as (rear, front): larger center x first, ties broken
// toward the smaller box id.
inline bool wheel_is_rear_of(const DetBox& a, const DetBox& b) {
    if (a.center_x() != b.center_x()) return a.center_x() > b.center_x();
    return a.box_id < b.box_id;
}

inline RelGraph build_graph(const Scene& scene, const PriorModel& prior,
                            const GraphConfig& config = {}) {
    RelGraph g;
    g.image_id = scene.image_id;
    const std::size_t n = scene.boxes.size();
    g.nodes.resize(n);
    g.kept = small_object_mask(scene, config.mask_tau);
    g.adjacency.assign(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const DetBox& b = scene.boxes[i];
        g.nodes[i] = {b.box_id, b.class_id,
                      geometric_features(b, scene.width, scene.height)};
    }
    auto connect = [&](std::size_t a, std::size_t b, PairKind kind, double w) {
        if (w < config.edge_epsilon) return;
        g.adjacency[a * n + b] = w;
        g.adjacency[b * n + a] = w;
        g.edges.push_back({a, b, kind, w});
    };
    for (std::size_t i = 0; i < n; ++i) {
        if (!g.kept[i]) continue;
        for (std::size_t j = i + 1; j < n; ++j) {
            if (!g.kept[j]) continue;
            const DetBox& bi = scene.boxes[i];
            const DetBox& bj = scene.boxes[j];
            bool i_vehicle = bi.class_id == BoxClass::Vehicle;
            bool j_vehicle = bj.class_id == BoxClass::Vehicle;
            if (i_vehicle && j_vehicle) continue; // vehicles never link to each other
            if (i_vehicle != j_vehicle) {
                std::size_t v = i_vehicle ? i : j;
                std::size_t w = i_vehicle ? j : i;
                PairGeometry geo =
                    pair_geometry(scene.boxes[v], scene.boxes[w], scene.width, scene.height);
                connect(v, w, PairKind::WheelVehicle,
                        prior_probability(prior, PairKind::WheelVehicle, geo.log_ratio));
            } else {
                std::size_t rear = wheel_is_rear_of(bi, bj) ? i : j;
                std::size_t front = rear == i ? j : i;
                PairGeometry geo = pair_geometry(scene.boxes[rear], scene.boxes[front],
                                                 scene.width, scene.height);
                connect(rear, front, PairKind::WheelWheel,
                        prior_probability(prior, PairKind::WheelWheel, geo.log_ratio));
            }
        }
    }
    return g;
}

inline std::string graph_to_json(const RelGraph& g) {
    nlohmann::ordered_json nodes = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < g.size(); ++i) {
        const GraphNode& node = g.nodes[i];
        nodes.push_back(nlohmann::ordered_json{
            {"box_id", node.box_id},
            {"class", node.cls == BoxClass::Vehicle ? "vehicle" : "wheel"},
            {"kept", static_cast<bool>(g.kept[i])},
            {"features", node.features}});
    }
    nlohmann::ordered_json edges = nlohmann::ordered_json::array();
    for (const auto& e : g.edges)
        edges.push_back(nlohmann::ordered_json{{"a", e.a},
                                               {"b", e.b},
                                               {"kind", pair_kind_name(e.kind)},
                                               {"weight", e.weight}});
    nlohmann::ordered_json adj = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < g.size(); ++i) {
        nlohmann::ordered_json row = nlohmann::ordered_json::array();
        for (std::size_t j = 0; j < g.size(); ++j) row.push_back(g.weight(i, j));
        adj.push_back(row);
    }
    nlohmann::ordered_json j{{"image_id", g.image_id},
                             {"nodes", nodes},
                             {"edges", edges},
                             {"adjacency", adj}};
    return j.dump(2) + "\n";
}

} // namespace wheelrel
