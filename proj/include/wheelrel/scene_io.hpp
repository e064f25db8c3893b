#pragma once

#include <filesystem>
#include <fstream>
#include <istream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "wheelrel/scene.hpp"
#include "wheelrel/util.hpp"

namespace wheelrel {

// Scene files are JSON lines, one scene object per LF-terminated line:
//   {"image_id":...,"camera":"front|left|right|rear","width":...,"height":...,
//    "boxes":[[x1,y1,x2,y2,score,class_id,box_id],...],"relations":[[v,w],...]}
// Box arrays carry exactly those seven attributes in that order.

namespace detail {

inline double require_number(const nlohmann::ordered_json& j, const char* field,
                             const std::string& where) {
    if (!j.contains(field) || !j[field].is_number())
        throw ValidationError(where + ": missing or non-numeric field '" + field + "'");
    return j[field].get<double>();
}

inline int require_int(const nlohmann::ordered_json& v, const char* field,
                       const std::string& where) {
    if (!v.is_number_integer())
        throw ValidationError(where + ": field '" + std::string(field) + "' must be an integer");
    return v.get<int>();
}

} // namespace detail

inline Scene scene_from_json_line(const std::string& line, const std::string& where) {
    nlohmann::ordered_json j;
    try {
        j = nlohmann::ordered_json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(where + ": invalid JSON: " + e.what());
    }
    if (!j.is_object()) throw ValidationError(where + ": record is not a JSON object");

    Scene s;
    if (!j.contains("image_id") || !j["image_id"].is_string())
        throw ValidationError(where + ": missing or non-string field 'image_id'");
    s.image_id = j["image_id"].get<std::string>();

    if (!j.contains("camera") || !j["camera"].is_string())
        throw ValidationError(where + ": missing or non-string field 'camera'");
    auto cam = camera_from_name(j["camera"].get<std::string>());
    if (!cam)
        throw ValidationError(where + ": unknown camera '" + j["camera"].get<std::string>() +
                              "' (expected front|left|right|rear)");
    s.camera = *cam;

    s.width = detail::require_number(j, "width", where);
    s.height = detail::require_number(j, "height", where);

    if (!j.contains("boxes") || !j["boxes"].is_array())
        throw ValidationError(where + ": missing or non-array field 'boxes'");
    for (std::size_t i = 0; i < j["boxes"].size(); ++i) {
        const auto& arr = j["boxes"][i];
        const std::string btag = where + ": boxes[" + std::to_string(i) + "]";
        if (!arr.is_array() || arr.size() != 7)
            throw ValidationError(btag + ": box record must be an array of 7 values");
        for (const auto& v : arr)
            if (!v.is_number()) throw ValidationError(btag + ": non-numeric box attribute");
        DetBox b;
        b.x1 = arr[0].get<double>();
        b.y1 = arr[1].get<double>();
        b.x2 = arr[2].get<double>();
        b.y2 = arr[3].get<double>();
        b.score = arr[4].get<double>();
        int cls = detail::require_int(arr[5], "class_id", btag);
        if (cls != 0 && cls != 1)
            throw ValidationError(btag + ": class_id must be 0 (vehicle) or 1 (wheel)");
        b.class_id = static_cast<BoxClass>(cls);
        b.box_id = detail::require_int(arr[6], "box_id", btag);
        s.boxes.push_back(b);
    }

    if (!j.contains("relations") || !j["relations"].is_array())
        throw ValidationError(where + ": missing or non-array field 'relations'");
    for (std::size_t i = 0; i < j["relations"].size(); ++i) {
        const auto& arr = j["relations"][i];
        const std::string rtag = where + ": relations[" + std::to_string(i) + "]";
        if (!arr.is_array() || arr.size() != 2)
            throw ValidationError(rtag + ": relation must be a [vehicle_id, wheel_id] pair");
        int v = detail::require_int(arr[0], "vehicle_box_id", rtag);
        int w = detail::require_int(arr[1], "wheel_box_id", rtag);
        s.relations.emplace_back(v, w);
    }

    std::string defect = scene_defect(s);
    if (!defect.empty()) throw ValidationError(where + ": " + defect);
    return s;
}

inline nlohmann::ordered_json scene_to_json(const Scene& s) {
    nlohmann::ordered_json j;
    j["image_id"] = s.image_id;
    j["camera"] = camera_name(s.camera);
    j["width"] = s.width;
    j["height"] = s.height;
    auto boxes = nlohmann::ordered_json::array();
    for (const auto& b : s.boxes) {
        boxes.push_back({b.x1, b.y1, b.x2, b.y2, b.score, static_cast<int>(b.class_id), b.box_id});
    }
    j["boxes"] = std::move(boxes);
    auto rels = nlohmann::ordered_json::array();
    for (const auto& [v, w] : s.relations) rels.push_back({v, w});
    j["relations"] = std::move(rels);
    return j;
}

inline std::string scenes_to_jsonl(const std::vector<Scene>& scenes) {
    std::string out;
    for (const auto& s : scenes) {
        out += scene_to_json(s).dump();
        out += '\n';
    }
    return out;
}

inline std::vector<Scene> read_scenes(std::istream& in, const std::string& source_name) {
    std::vector<Scene> scenes;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        scenes.push_back(scene_from_json_line(line, source_name + ":" + std::to_string(line_no)));
    }
    return scenes;
}

inline std::vector<Scene> read_scene_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open scene file: " + path.string());
    return read_scenes(in, path.filename().string());
}

inline void write_scene_file(const std::vector<Scene>& scenes, const std::filesystem::path& path) {
    for (const auto& s : scenes) validate_scene(s);
    util::write_text_file(path, scenes_to_jsonl(scenes));
}

} // namespace wheelrel
