#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "wheelrel/geometry.hpp"
#include "wheelrel/gmm.hpp"
#include "wheelrel/scene.hpp"
#include "wheelrel/util.hpp"

namespace wheelrel {

struct PairSamples {
    std::vector<double> wv; // log ratio, wheel against its owner vehicle
    std::vector<double> ww; // log ratio, rear wheel against front wheel
    std::size_t skipped_zero_distance = 0;
};

// Harvests log distance-ratio samples from labeled scenes. Wheel-vehicle pairs
// come from every relation; wheel-wheel pairs only when a vehicle owns exactly
// two wheels, measured rear wheel (larger center x, ties by box id) to front.
inline PairSamples collect_pair_samples(const std::vector<Scene>& scenes) {
    PairSamples out;
    for (const auto& scene : scenes) {
        std::map<int, std::vector<int>> wheels_of; // vehicle id -> wheel ids
        for (const auto& rel : scene.relations) {
            const DetBox* v = scene.find_box(rel.first);
            const DetBox* w = scene.find_box(rel.second);
            PairGeometry g = pair_geometry(*v, *w, scene.width, scene.height);
            if (g.log_ratio)
                out.wv.push_back(*g.log_ratio);
            else
                ++out.skipped_zero_distance;
            wheels_of[rel.first].push_back(rel.second);
        }
        for (auto& [vid, wheel_ids] : wheels_of) {
            if (wheel_ids.size() != 2) continue;
            const DetBox* a = scene.find_box(wheel_ids[0]);
            const DetBox* b = scene.find_box(wheel_ids[1]);
            const DetBox* rear = a;
            const DetBox* front = b;
            if (b->center_x() > a->center_x() ||
                (b->center_x() == a->center_x() && b->box_id < a->box_id)) {
                rear = b;
                front = a;
            }
            PairGeometry g = pair_geometry(*rear, *front, scene.width, scene.height);
            if (g.log_ratio)
                out.ww.push_back(*g.log_ratio);
            else
                ++out.skipped_zero_distance;
        }
    }
    return out;
}

struct PriorModel {
    GaussianMixture wv;
    GaussianMixture ww;
    double pdf_max_wv = 1.0;
    double pdf_max_ww = 1.0;
};

// Peak density of a 1-D mixture, found on a grid spanning every component's
// mean +/- 8 sigma and sharpened with a ternary search around the best cell.
inline double locate_pdf_max(const GaussianMixture& mix) {
    if (mix.components.empty()) throw ValidationError("locate_pdf_max: empty mixture");
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (const auto& c : mix.components) {
        lo = std::min(lo, c.mean - 8.0 * c.stddev);
        hi = std::max(hi, c.mean + 8.0 * c.stddev);
    }
    constexpr int grid = 4096;
    double best_x = lo, best_p = -1.0;
    for (int i = 0; i <= grid; ++i) {
        double x = lo + (hi - lo) * static_cast<double>(i) / grid;
        double p = mix.pdf(x);
        if (p > best_p) {
            best_p = p;
            best_x = x;
        }
    }
    double step = (hi - lo) / grid;
    double a = best_x - step, b = best_x + step;
    for (int it = 0; it < 200; ++it) {
        double m1 = a + (b - a) / 3.0;
        double m2 = b - (b - a) / 3.0;
        if (mix.pdf(m1) < mix.pdf(m2))
            a = m1;
        else
            b = m2;
    }
    return mix.pdf(0.5 * (a + b));
}

inline PriorModel make_prior_model(GaussianMixture wv, GaussianMixture ww) {
    PriorModel m;
    m.wv = std::move(wv);
    m.ww = std::move(ww);
    m.pdf_max_wv = locate_pdf_max(m.wv);
    m.pdf_max_ww = locate_pdf_max(m.ww);
    return m;
}

// Density at the pair's log ratio, rescaled so the mixture's peak maps to 1.
// A coincident pair (no log ratio) is maximally plausible.
inline double prior_probability(const PriorModel& model, PairKind kind,
                                const std::optional<double>& log_ratio) {
    if (!log_ratio) return 1.0;
    const GaussianMixture& mix = kind == PairKind::WheelVehicle ? model.wv : model.ww;
    double peak = kind == PairKind::WheelVehicle ? model.pdf_max_wv : model.pdf_max_ww;
    double p = mix.pdf(*log_ratio) / peak;
    return std::clamp(p, 0.0, 1.0);
}

inline nlohmann::ordered_json mixture_to_json(const GaussianMixture& mix) {
    nlohmann::ordered_json comps = nlohmann::ordered_json::array();
    for (const auto& c : mix.components)
        comps.push_back(nlohmann::ordered_json::array({c.weight, c.mean, c.stddev}));
    return nlohmann::ordered_json{{"components", comps}};
}

inline GaussianMixture mixture_from_json(const nlohmann::json& j, PairKind kind,
                                         const std::string& where) {
    if (!j.is_object() || !j.contains("components") || !j["components"].is_array())
        throw ValidationError(where + ": expected object with a components array");
    GaussianMixture mix;
    mix.kind = kind;
    for (const auto& cj : j["components"]) {
        if (!cj.is_array() || cj.size() != 3)
            throw ValidationError(where + ": each component must be [weight, mean, stddev]");
        GaussianComponent c{cj[0].get<double>(), cj[1].get<double>(), cj[2].get<double>()};
        if (!(c.weight > 0.0) || !(c.stddev >= kSigmaFloor) || !std::isfinite(c.mean))
            throw ValidationError(where + ": component out of range");
        mix.components.push_back(c);
    }
    if (mix.components.empty()) throw ValidationError(where + ": no components");
    double wsum = 0.0;
    for (const auto& c : mix.components) wsum += c.weight;
    if (std::abs(wsum - 1.0) > 1e-6)
        throw ValidationError(where + ": component weights must sum to 1");
    return mix;
}

inline std::string prior_to_json(const PriorModel& model) {
    nlohmann::ordered_json j{{"wv", mixture_to_json(model.wv)},
                             {"ww", mixture_to_json(model.ww)}};
    return j.dump(2) + "\n";
}

inline PriorModel prior_from_json(const std::string& text, const std::string& name = "prior") {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError(name + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("wv") || !j.contains("ww"))
        throw ValidationError(name + ": expected object with wv and ww mixtures");
    return make_prior_model(mixture_from_json(j["wv"], PairKind::WheelVehicle, name + ".wv"),
                            mixture_from_json(j["ww"], PairKind::WheelWheel, name + ".ww"));
}

// One-call path from labeled scenes to a ready prior.
inline PriorModel fit_prior(const std::vector<Scene>& scenes, std::size_t k_wv, std::size_t k_ww,
                            std::uint64_t seed, GmmFitDiagnostics* diag_wv = nullptr,
                            GmmFitDiagnostics* diag_ww = nullptr) {
    PairSamples samples = collect_pair_samples(scenes);
    GaussianMixture wv = fit_gmm(samples.wv, k_wv, seed, PairKind::WheelVehicle, diag_wv);
    GaussianMixture ww =
        fit_gmm(samples.ww, k_ww, derive_seed(seed, 1), PairKind::WheelWheel, diag_ww);
    return make_prior_model(std::move(wv), std::move(ww));
}

} // namespace wheelrel
