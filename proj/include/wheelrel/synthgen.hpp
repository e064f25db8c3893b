#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "wheelrel/nn.hpp"
#include "wheelrel/rng.hpp"
#include "wheelrel/scene.hpp"
#include "wheelrel/util.hpp"

namespace wheelrel {

enum class Difficulty { Easy, Hard, Mixed };

inline const char* difficulty_name(Difficulty d) {
    switch (d) {
        case Difficulty::Easy: return "easy";
        case Difficulty::Hard: return "hard";
        default: return "mixed";
    }
}

inline Difficulty difficulty_from_name(const std::string& s) {
    if (s == "easy") return Difficulty::Easy;
    if (s == "hard") return Difficulty::Hard;
    if (s == "mixed") return Difficulty::Mixed;
    throw ValidationError("unknown difficulty: " + s);
}

struct GenConfig {
    std::uint64_t seed = 1;
    std::size_t n_scenes = 100;
    Difficulty difficulty = Difficulty::Mixed;
    double width = 1280.0, height = 720.0;
    std::size_t easy_min = 1, easy_max = 3; // vehicles per easy scene
    std::size_t hard_min = 4, hard_max = 8; // vehicles per hard scene
    double overlap_rate = 0.0; // fraction of scenes forced to hold a doubly-contained wheel
};

inline void validate_gen_config(const GenConfig& c) {
    if (c.width <= 0 || c.height <= 0) throw ValidationError("gen: dimensions must be positive");
    if (!(c.overlap_rate >= 0.0 && c.overlap_rate <= 1.0))
        throw ValidationError("gen: overlap_rate must be in [0,1]");
    if (c.easy_min < 1 || c.easy_min > c.easy_max || c.easy_max > 3)
        throw ValidationError("gen: easy vehicle range must satisfy 1 <= min <= max <= 3");
    if (c.hard_min < 4 || c.hard_min > c.hard_max)
        throw ValidationError("gen: hard vehicle range must satisfy 4 <= min <= max");
}

constexpr std::size_t kPatchRenderSize = 56; // matches the patch encoder's input

namespace genconst {
// All layout knobs are fractions of the image so any reasonable dimensions
// work. Wheel minima are sized so wheels clear the default 0.02 small-object
// mask at 16:9 shapes.
constexpr double kVehMinH = 0.22, kVehMaxH = 0.42;   // of image height
constexpr double kAspectMin = 1.6, kAspectMax = 2.6; // vehicle width / height
constexpr double kWheelRMin = 0.14, kWheelRMax = 0.22; // wheel h / vehicle h
constexpr double kWheelAspMin = 1.25, kWheelAspMax = 1.5;
constexpr double kHostWheelRMin = 0.175;  // forced scenes need a biggish wheel
constexpr double kImpRMin = 0.24, kImpRMax = 0.34; // wheel h / impostor h
constexpr double kImpMinHFrac = 0.078;    // of image width; keeps the impostor's own wheel unmasked
constexpr double kImpShrink = 0.85;       // impostor height/aspect stay below the host's
} // namespace genconst

namespace detail {

struct PlacedVehicle {
    DetBox box;
    double aspect = 0.0;
    std::vector<DetBox> wheels;
};

inline bool boxes_disjoint(const DetBox& a, const DetBox& b, double gap) {
    return a.x2 + gap <= b.x1 || b.x2 + gap <= a.x1 || a.y2 + gap <= b.y1 ||
           b.y2 + gap <= a.y1;
}

// Perspective-flavored vertical placement: taller (nearer) vehicles sit lower.
inline double vehicle_bottom(double h, double hmin, double hmax, double height, Rng& rng) {
    double frac = (h - hmin) / std::max(hmax - hmin, 1e-9);
    double y2 = height * (0.55 + 0.42 * frac + rng.uniform(-0.035, 0.035));
    return std::clamp(y2, std::max(h, 0.52 * height), height);
}

inline DetBox make_wheel(const DetBox& veh, double r, Rng& rng, bool rear, bool single) {
    double s = r * veh.height();
    double ww = s * rng.uniform(genconst::kWheelAspMin, genconst::kWheelAspMax);
    double y2 = veh.y2 - rng.uniform(0.0, 0.06) * veh.height();
    double x1;
    if (single) {
        x1 = veh.x1 + rng.uniform(0.05, 0.95 - ww / veh.width()) * veh.width();
    } else if (rear) {
        x1 = veh.x2 - rng.uniform(0.02, 0.12) * veh.width() - ww;
    } else {
        x1 = veh.x1 + rng.uniform(0.02, 0.12) * veh.width();
    }
    DetBox w;
    w.x1 = x1;
    w.x2 = x1 + ww;
    w.y1 = y2 - s;
    w.y2 = y2;
    w.class_id = BoxClass::Wheel;
    return w;
}

inline void add_wheels(PlacedVehicle& v, Rng& rng, double r_min_first) {
    std::size_t n = 1 + rng.next_below(2);
    for (std::size_t k = 0; k < n; ++k) {
        double rlo = k == 0 ? r_min_first : genconst::kWheelRMin;
        double r = rng.uniform(rlo, genconst::kWheelRMax);
        v.wheels.push_back(make_wheel(v.box, r, rng, /*rear=*/k == 1, /*single=*/n == 1));
    }
}

// Builds a smaller vehicle that fully contains `wheel` (a wheel of a bigger
// host), with the wheel oversized relative to the new vehicle. The overlap
// heuristic then prefers the impostor (contained wheel, smaller container
// wins IoU) while the wheel/vehicle size relation marks it as implausible.
inline PlacedVehicle make_impostor(const PlacedVehicle& host, const DetBox& wheel,
                                   const GenConfig& cfg, Rng& rng) {
    double s = wheel.height();
    double r_lo = std::max(genconst::kImpRMin, s / (genconst::kImpShrink * host.box.height()));
    double r_hi = std::min(genconst::kImpRMax, s / (genconst::kImpMinHFrac * cfg.width));
    if (!(r_lo < r_hi))
        throw ValidationError("generate: image dimensions cannot host the forced-overlap "
                              "construction (too wide relative to height)");
    double r = rng.uniform(r_lo, r_hi);
    PlacedVehicle imp;
    imp.aspect = host.aspect * rng.uniform(genconst::kImpShrink, 1.0);
    double h = s / r;
    double w = h * imp.aspect;
    double x_lo = std::max(0.0, wheel.x2 - w);
    double x_hi = std::min(wheel.x1, cfg.width - w);
    double y2_lo = std::max(wheel.y2, h);
    double y2_hi = std::min(wheel.y1 + h, cfg.height);
    imp.box.x1 = rng.uniform(x_lo, x_hi);
    imp.box.x2 = imp.box.x1 + w;
    imp.box.y2 = rng.uniform(y2_lo, y2_hi);
    imp.box.y1 = imp.box.y2 - h;
    imp.box.class_id = BoxClass::Vehicle;
    double rw = rng.uniform(0.20, genconst::kWheelRMax);
    DetBox iw = make_wheel(imp.box, rw, rng, false, true);
    // widen slightly if the draw came out under the mask-safe aspect
    double min_w = iw.height() * 1.35;
    if (iw.width() < min_w) iw.x2 = iw.x1 + min_w;
    imp.wheels.push_back(iw);
    return imp;
}

} // namespace detail

// Deterministic labeled-scene generator. Easy scenes hold 1-3 mutually
// disjoint vehicles; hard scenes pack 4-8 vehicles with free overlap. A
// configurable fraction of scenes is "forced": one or more wheels are made to
// sit completely inside a second, smaller vehicle, reproducing the
// containment ambiguity that defeats pure-overlap assignment.
inline std::vector<Scene> generate(const GenConfig& cfg) {
    validate_gen_config(cfg);
    const double hmax = std::min(genconst::kVehMaxH * cfg.height, cfg.width / 2.8);
    const double hmin = genconst::kVehMinH * cfg.height;
    if (!(hmin < hmax))
        throw ValidationError("generate: image dimensions too small for vehicle layout");
    const Camera cameras[4] = {Camera::Front, Camera::Left, Camera::Right, Camera::Rear};

    std::vector<Scene> scenes;
    scenes.reserve(cfg.n_scenes);
    for (std::size_t i = 0; i < cfg.n_scenes; ++i) {
        Rng rng(derive_seed(cfg.seed, i));
        bool easy = cfg.difficulty == Difficulty::Easy ||
                    (cfg.difficulty == Difficulty::Mixed && i % 2 == 0);
        if (cfg.difficulty == Difficulty::Hard) easy = false;
        bool forced = std::floor((static_cast<double>(i) + 1.0) * cfg.overlap_rate + 1e-9) >
                      std::floor(static_cast<double>(i) * cfg.overlap_rate + 1e-9);

        std::size_t lo = easy ? cfg.easy_min : cfg.hard_min;
        std::size_t hi = easy ? cfg.easy_max : cfg.hard_max;
        std::size_t n_veh = lo + rng.next_below(hi - lo + 1);
        if (forced && n_veh < 2) n_veh = 2;
        std::size_t n_pairs = forced ? (easy ? 1 : n_veh / 2) : 0;

        std::vector<detail::PlacedVehicle> placed;
        auto sample_vehicle = [&](double wheel_r_min) {
            detail::PlacedVehicle v;
            double h = rng.uniform(hmin, hmax);
            v.aspect = rng.uniform(genconst::kAspectMin, genconst::kAspectMax);
            double w = h * v.aspect;
            v.box.y2 = detail::vehicle_bottom(h, hmin, hmax, cfg.height, rng);
            v.box.y1 = v.box.y2 - h;
            v.box.x1 = rng.uniform(0.0, cfg.width - w);
            v.box.x2 = v.box.x1 + w;
            v.box.class_id = BoxClass::Vehicle;
            detail::add_wheels(v, rng, wheel_r_min);
            return v;
        };
        auto place_disjoint = [&](double wheel_r_min) -> bool {
            for (int attempt = 0; attempt < 60; ++attempt) {
                detail::PlacedVehicle v = sample_vehicle(wheel_r_min);
                bool ok = true;
                for (const auto& other : placed)
                    if (!detail::boxes_disjoint(v.box, other.box, 4.0)) ok = false;
                if (ok) {
                    placed.push_back(std::move(v));
                    return true;
                }
            }
            return false;
        };

        // forced host/impostor pairs go in first so the construction always fits
        for (std::size_t p = 0; p < n_pairs; ++p) {
            if (easy) {
                if (!place_disjoint(genconst::kHostWheelRMin))
                    throw ValidationError("generate: could not place forced pair host");
            } else {
                placed.push_back(sample_vehicle(genconst::kHostWheelRMin));
            }
            detail::PlacedVehicle& host = placed.back();
            placed.push_back(detail::make_impostor(host, host.wheels[0], cfg, rng));
        }
        std::size_t remaining = n_veh - 2 * n_pairs;
        for (std::size_t v = 0; v < remaining; ++v) {
            if (easy) {
                if (!place_disjoint(genconst::kWheelRMin)) break; // keep what fits; >= min holds
            } else {
                placed.push_back(sample_vehicle(genconst::kWheelRMin));
            }
        }
        if (placed.size() < std::max<std::size_t>(lo, forced ? 2 : 1))
            throw ValidationError("generate: scene placement infeasible for given dimensions");

        Scene scene;
        char idbuf[32];
        std::snprintf(idbuf, sizeof idbuf, "scene_%06zu", i);
        scene.image_id = idbuf;
        scene.camera = cameras[i % 4];
        scene.width = cfg.width;
        scene.height = cfg.height;
        int next_id = 0;
        for (auto& v : placed) {
            v.box.box_id = next_id++;
            v.box.score = rng.uniform(0.7, 0.99);
            scene.boxes.push_back(v.box);
            for (auto& w : v.wheels) {
                w.box_id = next_id++;
                w.score = rng.uniform(0.7, 0.99);
                scene.boxes.push_back(w);
                scene.relations.push_back({v.box.box_id, w.box_id});
            }
        }
        validate_scene(scene);
        scenes.push_back(std::move(scene));
    }
    return scenes;
}

// ---- procedural patches ----

namespace detail {

inline std::array<double, 3> hsv_to_rgb(double h, double s, double v) {
    h = h - std::floor(h);
    double c = v * s;
    double hp = h * 6.0;
    double x = c * (1.0 - std::abs(std::fmod(hp, 2.0) - 1.0));
    double r = 0, g = 0, b = 0;
    if (hp < 1)      { r = c; g = x; }
    else if (hp < 2) { r = x; g = c; }
    else if (hp < 3) { g = c; b = x; }
    else if (hp < 4) { g = x; b = c; }
    else if (hp < 5) { r = x; b = c; }
    else             { r = c; b = x; }
    double m = v - c;
    return {r + m, g + m, b + m};
}

} // namespace detail

// Golden-ratio hue palette: well-separated hues for small indices.
inline double palette_hue(std::size_t index) {
    double h = 0.6180339887498949 * static_cast<double>(index) + 0.15;
    return h - std::floor(h);
}

// 56x56 RGB stand-in for a cropped detection: vehicles get banded bodywork,
// wheels a tire-and-hub disc, both tinted with the owning vehicle's palette
// hue so appearance carries an ownership cue. Deterministic per scene + box.
inline Tensor render_patch(const Scene& scene, int box_id) {
    const DetBox* box = scene.find_box(box_id);
    if (!box) throw ValidationError("render_patch: unknown box_id " +
                                    std::to_string(box_id) + " in " + scene.image_id);
    // palette slot: vehicles use their rank among vehicles; wheels inherit
    // their owner's slot, unowned wheels get a slot past the vehicles
    std::size_t slot = 0;
    if (box->class_id == BoxClass::Vehicle) {
        std::size_t rank = 0;
        for (const DetBox& b : scene.boxes) {
            if (b.box_id == box_id) break;
            if (b.class_id == BoxClass::Vehicle) ++rank;
        }
        slot = rank;
    } else {
        std::optional<int> owner = scene.owner_of(box_id);
        std::size_t n_veh = 0, rank = 0;
        bool found = false;
        for (const DetBox& b : scene.boxes) {
            if (b.class_id != BoxClass::Vehicle) continue;
            if (owner && b.box_id == *owner) {
                slot = rank;
                found = true;
            }
            ++rank;
            ++n_veh;
        }
        if (!found) slot = n_veh + static_cast<std::size_t>(box_id);
    }
    double hue = palette_hue(slot);
    bool is_wheel = box->class_id == BoxClass::Wheel;

    Rng noise(fnv1a64(scene.image_id) ^
              (0x9E3779B97F4A7C15ull * (static_cast<std::uint64_t>(box_id) + 1)));
    Tensor t({3, kPatchRenderSize, kPatchRenderSize});
    for (std::size_t y = 0; y < kPatchRenderSize; ++y) {
        for (std::size_t x = 0; x < kPatchRenderSize; ++x) {
            double yf = static_cast<double>(y) / (kPatchRenderSize - 1);
            double xf = static_cast<double>(x) / (kPatchRenderSize - 1);
            double sat, val;
            if (is_wheel) {
                double rr = std::hypot(xf - 0.5, yf - 0.5) / 0.5;
                if (rr > 1.0)       { sat = 0.45; val = 0.62; } // body behind the wheel
                else if (rr > 0.55) { sat = 0.15; val = 0.18; } // tire
                else if (rr > 0.22) { sat = 0.55; val = 0.50; } // rim
                else                { sat = 0.25; val = 0.85; } // hub
            } else {
                if (yf < 0.40)      { sat = 0.30; val = 0.42; } // glass band
                else if (yf < 0.82) { sat = 0.75; val = 0.78; } // body
                else                { sat = 0.55; val = 0.30; } // sill shadow
            }
            val = std::clamp(val + noise.uniform(-0.02, 0.02), 0.0, 1.0);
            auto rgb = detail::hsv_to_rgb(hue, sat, val);
            for (std::size_t c = 0; c < 3; ++c)
                t(c, y, x) = std::clamp(rgb[c], 0.0, 1.0);
        }
    }
    return t;
}

} // namespace wheelrel
