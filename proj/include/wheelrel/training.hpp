#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "wheelrel/eval.hpp"
#include "wheelrel/graph.hpp"
#include "wheelrel/prior.hpp"
#include "wheelrel/relnet.hpp"
#include "wheelrel/rng.hpp"
#include "wheelrel/scene.hpp"
#include "wheelrel/util.hpp"

namespace wheelrel {

struct TrainConfig {
    std::size_t epochs = 30;
    double learning_rate = 1e-3;
    double neg_weight = 0.1;           // loss weight of negative pairs, in (0,1]
    double neg_downsample_ratio = 0.0; // negatives kept per positive; <= 0 keeps all
    double mask_tau = 0.02;
    double edge_epsilon = 1e-3;
    std::uint64_t seed = 1;
    std::size_t batch_scenes = 1; // scenes accumulated per optimizer step
    double val_fraction = 0.1;
};

inline void validate_train_config(const TrainConfig& c) {
    if (c.epochs < 1) throw ValidationError("train: epochs must be at least 1");
    if (!(c.learning_rate >= 0.0) || !std::isfinite(c.learning_rate))
        throw ValidationError("train: learning_rate must be non-negative");
    if (!(c.neg_weight > 0.0 && c.neg_weight <= 1.0))
        throw ValidationError("train: neg_weight must be in (0,1]");
    if (c.batch_scenes < 1) throw ValidationError("train: batch_scenes must be at least 1");
    if (!(c.val_fraction >= 0.0 && c.val_fraction < 1.0))
        throw ValidationError("train: val_fraction must be in [0,1)");
    if (!(c.mask_tau >= 0.0)) throw ValidationError("train: mask_tau must be non-negative");
    if (!(c.edge_epsilon >= 0.0))
        throw ValidationError("train: edge_epsilon must be non-negative");
}

// ---- weighted square loss over candidate pairs ----

struct PairLossResult {
    double loss = 0.0;
    std::vector<double> grad; // d loss / d score, aligned with scores
    bool empty = false;       // no pairs at all; callers skip such scenes
};

inline PairLossResult pair_loss(const std::vector<double>& scores,
                                const std::vector<double>& labels,
                                const std::vector<double>& weights) {
    if (scores.size() != labels.size() || scores.size() != weights.size())
        throw ValidationError("pair_loss: scores, labels, weights must align");
    PairLossResult out;
    if (scores.empty()) {
        out.empty = true;
        return out;
    }
    double wsum = 0.0, acc = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (labels[i] != 0.0 && labels[i] != 1.0)
            throw ValidationError("pair_loss: labels must be 0 or 1");
        double d = scores[i] - labels[i];
        acc += weights[i] * d * d;
        wsum += weights[i];
    }
    out.loss = acc / wsum;
    out.grad.resize(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i)
        out.grad[i] = 2.0 * weights[i] * (scores[i] - labels[i]) / wsum;
    return out;
}

// ---- Adam ----

struct Adam {
    double lr = 1e-3, beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    std::size_t t = 0;
    std::vector<Tensor> m, v;

    explicit Adam(const std::vector<Parameter*>& params, double lr_) : lr(lr_) {
        for (const Parameter* p : params) {
            m.push_back(Tensor::zeros(p->value.shape));
            v.push_back(Tensor::zeros(p->value.shape));
        }
    }

    void step(const std::vector<Parameter*>& params) {
        ++t;
        double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
        double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
        for (std::size_t pi = 0; pi < params.size(); ++pi) {
            Parameter& p = *params[pi];
            for (std::size_t i = 0; i < p.value.data.size(); ++i) {
                double g = p.grad.data[i];
                m[pi].data[i] = beta1 * m[pi].data[i] + (1.0 - beta1) * g;
                v[pi].data[i] = beta2 * v[pi].data[i] + (1.0 - beta2) * g * g;
                double mhat = m[pi].data[i] / bc1;
                double vhat = v[pi].data[i] / bc2;
                p.value.data[i] -= lr * mhat / (std::sqrt(vhat) + eps);
            }
        }
    }
};

// ---- per-scene precomputation ----

using PatchRenderer = std::function<Tensor(const Scene&, int box_id)>;

struct CandidatePair {
    std::size_t vehicle_node = 0;
    std::size_t wheel_node = 0;
    double label = 0.0;
    double weight = 1.0;
};

struct ScenePrep {
    const Scene* scene = nullptr;
    RelGraph graph;
    std::vector<Tensor> inputs;
    std::vector<CandidatePair> candidates;
    std::size_t n_pos = 0;
};

inline std::vector<Tensor> make_node_inputs(const Scene& scene, const RelGraph& graph,
                                            NodeMode mode, const PatchRenderer& renderer) {
    if (mode == NodeMode::Geometric) return make_geom_inputs(graph);
    if (!renderer) throw ValidationError("patch mode requires a patch renderer");
    std::vector<Tensor> inputs(graph.size());
    for (std::size_t i = 0; i < graph.size(); ++i) {
        if (!graph.kept[i]) continue;
        const DetBox* box = scene.find_box(graph.nodes[i].box_id);
        inputs[i] = make_patch_input(renderer(scene, box->box_id), *box, scene.width,
                                     scene.height);
    }
    return inputs;
}

// Builds the graph, node inputs, and the training candidate list for one
// scene. Candidates are the connected vehicle-wheel pairs; negatives can be
// down-sampled to the highest-prior ones (the closest lookalikes).
inline ScenePrep prepare_scene(const Scene& scene, const PriorModel& prior, NodeMode mode,
                               const TrainConfig& cfg,
                               const PatchRenderer& renderer = nullptr) {
    ScenePrep prep;
    prep.scene = &scene;
    prep.graph = build_graph(scene, prior, {cfg.edge_epsilon, cfg.mask_tau});
    prep.inputs = make_node_inputs(scene, prep.graph, mode, renderer);
    std::set<std::pair<int, int>> truth;
    for (const auto& rel : scene.relations) truth.insert({rel.first, rel.second});
    std::vector<std::pair<double, CandidatePair>> negatives; // prior weight, pair
    for (const GraphEdge& e : prep.graph.edges) {
        if (e.kind != PairKind::WheelVehicle) continue;
        int vid = prep.graph.nodes[e.a].box_id;
        int wid = prep.graph.nodes[e.b].box_id;
        if (truth.count({vid, wid})) {
            prep.candidates.push_back({e.a, e.b, 1.0, 1.0});
            ++prep.n_pos;
        } else {
            negatives.push_back({e.weight, {e.a, e.b, 0.0, cfg.neg_weight}});
        }
    }
    if (cfg.neg_downsample_ratio > 0.0) {
        std::sort(negatives.begin(), negatives.end(), [&](const auto& x, const auto& y) {
            if (x.first != y.first) return x.first > y.first;
            int xv = prep.graph.nodes[x.second.vehicle_node].box_id;
            int yv = prep.graph.nodes[y.second.vehicle_node].box_id;
            if (xv != yv) return xv < yv;
            return prep.graph.nodes[x.second.wheel_node].box_id <
                   prep.graph.nodes[y.second.wheel_node].box_id;
        });
        std::size_t keep = static_cast<std::size_t>(
            std::ceil(cfg.neg_downsample_ratio * static_cast<double>(prep.n_pos)));
        if (negatives.size() > keep) negatives.resize(keep);
    }
    for (const auto& [w, cand] : negatives) prep.candidates.push_back(cand);
    return prep;
}

// ---- training loop ----

struct EpochStats {
    std::size_t epoch = 0; // 1-based
    double loss = 0.0;     // mean per-scene pair loss over the train split
    double val_acc = 0.0;  // assignment accuracy on the held-out split
};

struct TrainResult {
    RelNet net;
    std::vector<EpochStats> history;
    bool diverged = false;
    std::size_t skipped_scenes = 0; // scenes with no candidate pairs
};

inline std::string history_to_jsonl(const std::vector<EpochStats>& history) {
    std::string out;
    for (const auto& e : history) {
        nlohmann::ordered_json j{{"epoch", e.epoch}, {"loss", e.loss}, {"val_acc", e.val_acc}};
        out += j.dump() + "\n";
    }
    return out;
}

namespace detail {

inline std::vector<Tensor> snapshot_params(std::vector<Parameter*>& params) {
    std::vector<Tensor> out;
    for (const Parameter* p : params) out.push_back(p->value);
    return out;
}

inline void restore_params(std::vector<Parameter*>& params, const std::vector<Tensor>& snap) {
    for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = snap[i];
}

template <typename RngT>
inline void shuffle_indices(std::vector<std::size_t>& idx, RngT& rng) {
    for (std::size_t i = idx.size(); i > 1; --i)
        std::swap(idx[i - 1], idx[rng.next_below(i)]);
}

// Scores a scene's candidate pairs, accumulating parameter gradients when a
// loss gradient is requested. Returns the per-scene loss.
inline double scene_loss(RelNet& net, const ScenePrep& prep, bool with_grad) {
    SceneForward fwd = forward_scene(net, prep.graph, prep.inputs);
    const std::size_t f = net.config.feature_dim;
    std::vector<double> scores(prep.candidates.size());
    std::vector<double> labels(prep.candidates.size());
    std::vector<double> weights(prep.candidates.size());
    for (std::size_t i = 0; i < prep.candidates.size(); ++i) {
        const CandidatePair& c = prep.candidates[i];
        double dot = 0.0;
        for (std::size_t d = 0; d < f; ++d)
            dot += fwd.embeddings.data[c.vehicle_node * f + d] *
                   fwd.embeddings.data[c.wheel_node * f + d];
        scores[i] = dot;
        labels[i] = c.label;
        weights[i] = c.weight;
    }
    PairLossResult res = pair_loss(scores, labels, weights);
    ensure_finite(res.loss, "scene_loss");
    if (with_grad) {
        Tensor g_emb = Tensor::zeros(fwd.embeddings.shape);
        for (std::size_t i = 0; i < prep.candidates.size(); ++i) {
            const CandidatePair& c = prep.candidates[i];
            for (std::size_t d = 0; d < f; ++d) {
                g_emb.data[c.vehicle_node * f + d] +=
                    res.grad[i] * fwd.embeddings.data[c.wheel_node * f + d];
                g_emb.data[c.wheel_node * f + d] +=
                    res.grad[i] * fwd.embeddings.data[c.vehicle_node * f + d];
            }
        }
        backward_scene(net, fwd, g_emb);
    }
    return res.loss;
}

} // namespace detail

inline double validation_accuracy(RelNet& net, const std::vector<const ScenePrep*>& val) {
    std::vector<Scene> scenes;
    std::vector<OwnershipPrediction> preds;
    for (const ScenePrep* prep : val) {
        scenes.push_back(*prep->scene);
        SceneForward fwd = forward_scene(net, prep->graph, prep->inputs);
        preds.push_back(match_pairs(prep->graph, fwd.embeddings, net.config.threshold));
    }
    return score_predictions(scenes, preds).assignment_accuracy;
}

// Full training run: precompute per-scene graphs and candidates, split
// 90/10 by scene (seeded), then per-epoch shuffled Adam updates over scene
// batches. A non-finite loss aborts the run and rolls the parameters back to
// the end of the last completed epoch.
inline TrainResult train(const std::vector<Scene>& scenes, const PriorModel& prior,
                         const ModelConfig& model_config, const TrainConfig& cfg,
                         const PatchRenderer& renderer = nullptr,
                         const std::function<void(const EpochStats&)>& on_epoch = nullptr) {
    validate_train_config(cfg);
    if (scenes.empty()) throw ValidationError("train: no scenes");

    std::vector<ScenePrep> preps;
    preps.reserve(scenes.size());
    TrainResult result;
    std::size_t total_pos = 0;
    for (const Scene& s : scenes) {
        preps.push_back(prepare_scene(s, prior, model_config.mode, cfg, renderer));
        if (preps.back().candidates.empty()) ++result.skipped_scenes;
        total_pos += preps.back().n_pos;
    }
    if (total_pos == 0) throw ValidationError("train: no positive pairs in any scene");

    std::vector<std::size_t> order(preps.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng split_rng(derive_seed(cfg.seed, 0));
    detail::shuffle_indices(order, split_rng);
    std::size_t n_val = static_cast<std::size_t>(static_cast<double>(order.size()) *
                                                 cfg.val_fraction);
    std::vector<std::size_t> train_idx(order.begin(), order.end() - n_val);
    std::vector<std::size_t> val_idx(order.end() - n_val, order.end());
    if (train_idx.empty()) std::swap(train_idx, val_idx);
    if (val_idx.empty()) val_idx = train_idx; // small runs validate on the train split

    std::vector<const ScenePrep*> val_preps;
    for (std::size_t i : val_idx) val_preps.push_back(&preps[i]);

    result.net = init_relnet(model_config, derive_seed(cfg.seed, 1));
    std::vector<Parameter*> params = result.net.parameters();
    Adam opt(params, cfg.learning_rate);

    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        std::vector<Tensor> snapshot = detail::snapshot_params(params);
        Rng epoch_rng(derive_seed(cfg.seed, 1000 + epoch));
        std::vector<std::size_t> epoch_order = train_idx;
        detail::shuffle_indices(epoch_order, epoch_rng);

        double loss_sum = 0.0, val_acc = 0.0;
        std::size_t n_scored = 0, in_batch = 0;
        bool ok = true;
        result.net.zero_grad();
        try {
            for (std::size_t idx : epoch_order) {
                const ScenePrep& prep = preps[idx];
                if (prep.candidates.empty()) continue;
                loss_sum += detail::scene_loss(result.net, prep, true);
                ++n_scored;
                if (++in_batch == cfg.batch_scenes) {
                    opt.step(params);
                    result.net.zero_grad();
                    in_batch = 0;
                }
            }
            if (in_batch > 0) {
                opt.step(params);
                result.net.zero_grad();
            }
            val_acc = validation_accuracy(result.net, val_preps);
        } catch (const NumericError&) {
            ok = false;
        }
        double mean_loss = n_scored ? loss_sum / static_cast<double>(n_scored) : 0.0;
        if (!ok || !std::isfinite(mean_loss)) {
            detail::restore_params(params, snapshot);
            result.diverged = true;
            break;
        }
        result.history.push_back({epoch, mean_loss, val_acc});
        if (on_epoch) on_epoch(result.history.back());
    }
    return result;
}

} // namespace wheelrel
