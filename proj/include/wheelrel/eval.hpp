#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "wheelrel/scene.hpp"
#include "wheelrel/util.hpp"

namespace wheelrel {

struct ErrorItem {
    std::string image_id;
    int wheel_id = -1;
    int expected_vehicle = -1;
    int predicted_vehicle = -1; // -1 when the wheel stayed unassigned
};

struct SplitScores {
    double assignment_accuracy = 1.0;
    double pair_precision = 1.0;
    double pair_recall = 1.0;
    std::size_t labeled = 0, correct = 0, wrong = 0, unassigned = 0;
    std::size_t pair_tp = 0, pair_fp = 0, pair_fn = 0;
    std::vector<ErrorItem> errors;
};

// Per-wheel owner accuracy plus precision/recall over the reported pair set.
// Predictions are matched to scenes by image id; a prediction naming an
// unknown scene or box is an input error. Scenes without a prediction count
// all their labeled wheels as unassigned.
inline SplitScores score_predictions(const std::vector<Scene>& scenes,
                                     const std::vector<OwnershipPrediction>& predictions) {
    std::map<std::string, const Scene*> by_id;
    for (const Scene& s : scenes) by_id[s.image_id] = &s;
    std::map<std::string, const OwnershipPrediction*> pred_of;
    for (const OwnershipPrediction& p : predictions) {
        auto it = by_id.find(p.image_id);
        if (it == by_id.end())
            throw ValidationError("score_predictions: prediction for unknown scene " + p.image_id);
        if (!pred_of.emplace(p.image_id, &p).second)
            throw ValidationError("score_predictions: duplicate prediction for " + p.image_id);
    }
    static const OwnershipPrediction empty_pred;
    SplitScores out;
    for (const Scene& scene : scenes) {
        auto pit = pred_of.find(scene.image_id);
        const OwnershipPrediction& pred = pit == pred_of.end() ? empty_pred : *pit->second;
        for (const auto& [wid, vid] : pred.assignments) {
            if (!scene.find_box(wid) || !scene.find_box(vid))
                throw ValidationError("score_predictions: assignment names unknown box in " +
                                      scene.image_id);
        }
        std::set<std::pair<int, int>> truth;
        for (const auto& rel : scene.relations) truth.insert({rel.first, rel.second});
        std::set<std::pair<int, int>> predicted;
        for (const auto& pair : pred.pairs) {
            if (!scene.find_box(pair.vehicle_id) || !scene.find_box(pair.wheel_id))
                throw ValidationError("score_predictions: pair names unknown box in " +
                                      scene.image_id);
            predicted.insert({pair.vehicle_id, pair.wheel_id});
        }
        for (const auto& pr : predicted)
            truth.count(pr) ? ++out.pair_tp : ++out.pair_fp;
        for (const auto& tr : truth)
            if (!predicted.count(tr)) ++out.pair_fn;
        for (const auto& rel : scene.relations) {
            ++out.labeled;
            auto ait = pred.assignments.find(rel.second);
            if (ait == pred.assignments.end()) {
                ++out.unassigned;
                out.errors.push_back({scene.image_id, rel.second, rel.first, -1});
            } else if (ait->second == rel.first) {
                ++out.correct;
            } else {
                ++out.wrong;
                out.errors.push_back({scene.image_id, rel.second, rel.first, ait->second});
            }
        }
    }
    out.assignment_accuracy =
        out.labeled ? static_cast<double>(out.correct) / static_cast<double>(out.labeled) : 1.0;
    std::size_t pdenom = out.pair_tp + out.pair_fp;
    std::size_t rdenom = out.pair_tp + out.pair_fn;
    out.pair_precision = pdenom ? static_cast<double>(out.pair_tp) / static_cast<double>(pdenom) : 1.0;
    out.pair_recall = rdenom ? static_cast<double>(out.pair_tp) / static_cast<double>(rdenom) : 1.0;
    return out;
}

// A report holds one scored split per name (easy/hard/mixed/...).
using EvalReport = std::map<std::string, SplitScores>;

inline nlohmann::ordered_json split_scores_to_json(const SplitScores& s) {
    nlohmann::ordered_json errors = nlohmann::ordered_json::array();
    for (const auto& e : s.errors)
        errors.push_back(nlohmann::ordered_json{{"image_id", e.image_id},
                                                {"wheel_id", e.wheel_id},
                                                {"expected_vehicle", e.expected_vehicle},
                                                {"predicted_vehicle", e.predicted_vehicle}});
    return nlohmann::ordered_json{{"assignment_accuracy", s.assignment_accuracy},
                                  {"pair_precision", s.pair_precision},
                                  {"pair_recall", s.pair_recall},
                                  {"labeled", s.labeled},
                                  {"correct", s.correct},
                                  {"wrong", s.wrong},
                                  {"unassigned", s.unassigned},
                                  {"pair_tp", s.pair_tp},
                                  {"pair_fp", s.pair_fp},
                                  {"pair_fn", s.pair_fn},
                                  {"errors", errors}};
}

inline std::string report_to_json(const EvalReport& report) {
    nlohmann::ordered_json splits;
    for (const auto& [name, scores] : report) splits[name] = split_scores_to_json(scores);
    return nlohmann::ordered_json{{"splits", splits}}.dump(2) + "\n";
}

inline EvalReport report_from_json(const std::string& text, const std::string& name = "report") {
    EvalReport report;
    try {
        nlohmann::json j = nlohmann::json::parse(text);
        if (!j.is_object() || !j.contains("splits") || !j["splits"].is_object())
            throw ValidationError(name + ": expected {splits: {...}}");
        for (const auto& [split, sj] : j["splits"].items()) {
            SplitScores s;
            s.assignment_accuracy = sj.at("assignment_accuracy").get<double>();
            s.pair_precision = sj.at("pair_precision").get<double>();
            s.pair_recall = sj.at("pair_recall").get<double>();
            s.labeled = sj.at("labeled").get<std::size_t>();
            s.correct = sj.at("correct").get<std::size_t>();
            s.wrong = sj.at("wrong").get<std::size_t>();
            s.unassigned = sj.at("unassigned").get<std::size_t>();
            s.pair_tp = sj.at("pair_tp").get<std::size_t>();
            s.pair_fp = sj.at("pair_fp").get<std::size_t>();
            s.pair_fn = sj.at("pair_fn").get<std::size_t>();
            if (sj.contains("errors"))
                for (const auto& ej : sj["errors"])
                    s.errors.push_back({ej.at("image_id").get<std::string>(),
                                        ej.at("wheel_id").get<int>(),
                                        ej.at("expected_vehicle").get<int>(),
                                        ej.at("predicted_vehicle").get<int>()});
            report[split] = std::move(s);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(name + ": " + e.what());
    }
    return report;
}

// ---- prediction files: one JSON object per line ----

inline nlohmann::ordered_json prediction_to_json(const OwnershipPrediction& pred) {
    nlohmann::ordered_json pairs = nlohmann::ordered_json::array();
    for (const auto& p : pred.pairs)
        pairs.push_back(nlohmann::ordered_json::array({p.vehicle_id, p.wheel_id, p.score}));
    nlohmann::ordered_json assignments = nlohmann::ordered_json::array();
    for (const auto& [wid, vid] : pred.assignments)
        assignments.push_back(nlohmann::ordered_json::array({wid, vid}));
    return nlohmann::ordered_json{
        {"image_id", pred.image_id}, {"pairs", pairs}, {"assignments", assignments}};
}

inline std::string predictions_to_jsonl(const std::vector<OwnershipPrediction>& preds) {
    std::string out;
    for (const auto& p : preds) out += prediction_to_json(p).dump() + "\n";
    return out;
}

inline std::vector<OwnershipPrediction> predictions_from_jsonl(const std::string& text,
                                                               const std::string& name =
                                                                   "predictions") {
    std::vector<OwnershipPrediction> out;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::string where = name + ":" + std::to_string(lineno);
        OwnershipPrediction p;
        try {
            nlohmann::json j = nlohmann::json::parse(line);
            if (!j.is_object() || !j.contains("image_id") || !j["image_id"].is_string())
                throw ValidationError(where + ": expected object with image_id");
            p.image_id = j["image_id"].get<std::string>();
            for (const auto& pj : j.value("pairs", nlohmann::json::array())) {
                if (!pj.is_array() || pj.size() != 3)
                    throw ValidationError(where + ": pair must be [vehicle_id, wheel_id, score]");
                double score = pj[2].get<double>();
                if (!std::isfinite(score))
                    throw ValidationError(where + ": non-finite pair score");
                p.pairs.push_back({pj[0].get<int>(), pj[1].get<int>(), score});
            }
            for (const auto& aj : j.value("assignments", nlohmann::json::array())) {
                if (!aj.is_array() || aj.size() != 2)
                    throw ValidationError(where + ": assignment must be [wheel_id, vehicle_id]");
                p.assignments[aj[0].get<int>()] = aj[1].get<int>();
            }
        } catch (const nlohmann::json::exception& e) {
            throw ValidationError(where + ": " + e.what());
        }
        out.push_back(std::move(p));
    }
    return out;
}

// ---- baseline-vs-model comparison ----

struct ComparisonRow {
    std::string split;
    double baseline_accuracy = 0.0;
    double model_accuracy = 0.0;
    double delta_points = 0.0; // (model - baseline) in percentage points
};

inline std::vector<ComparisonRow> compare_reports(const EvalReport& baseline,
                                                  const EvalReport& model) {
    for (const auto& [split, _] : baseline)
        if (!model.count(split))
            throw ValidationError("compare_reports: split " + split + " missing from model report");
    for (const auto& [split, _] : model)
        if (!baseline.count(split))
            throw ValidationError("compare_reports: split " + split +
                                  " missing from baseline report");
    auto rank = [](const std::string& s) {
        if (s == "easy") return 0;
        if (s == "hard") return 1;
        if (s == "mixed") return 2;
        return 3;
    };
    std::vector<ComparisonRow> rows;
    for (const auto& [split, b] : baseline) {
        const SplitScores& m = model.at(split);
        rows.push_back({split, b.assignment_accuracy, m.assignment_accuracy,
                        (m.assignment_accuracy - b.assignment_accuracy) * 100.0});
    }
    std::sort(rows.begin(), rows.end(), [&](const ComparisonRow& a, const ComparisonRow& b) {
        int ra = rank(a.split), rb = rank(b.split);
        return ra != rb ? ra < rb : a.split < b.split;
    });
    return rows;
}

inline std::string comparison_to_json(const std::vector<ComparisonRow>& rows) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& r : rows)
        arr.push_back(nlohmann::ordered_json{{"split", r.split},
                                             {"baseline_accuracy", r.baseline_accuracy},
                                             {"model_accuracy", r.model_accuracy},
                                             {"delta_points", r.delta_points}});
    return nlohmann::ordered_json{{"rows", arr}}.dump(2) + "\n";
}

inline std::string comparison_text(const std::vector<ComparisonRow>& rows) {
    std::string out = "split      baseline     model     delta\n";
    char buf[96];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%-8s   %8.4f  %8.4f    %+6.2f\n", r.split.c_str(),
                      r.baseline_accuracy, r.model_accuracy, r.delta_points);
        out += buf;
    }
    return out;
}

} // namespace wheelrel
