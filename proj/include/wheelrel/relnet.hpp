#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "wheelrel/graph.hpp"
#include "wheelrel/nn.hpp"
#include "wheelrel/rng.hpp"
#include "wheelrel/scene.hpp"
#include "wheelrel/util.hpp"

namespace wheelrel {

enum class NodeMode { Patch, Geometric };

inline const char* node_mode_name(NodeMode m) {
    return m == NodeMode::Patch ? "patch" : "geometric";
}

inline NodeMode node_mode_from_name(const std::string& s) {
    if (s == "patch") return NodeMode::Patch;
    if (s == "geometric") return NodeMode::Geometric;
    throw ValidationError("unknown node mode: " + s);
}

struct ModelConfig {
    NodeMode mode = NodeMode::Geometric;
    std::size_t feature_dim = 64; // embedding width F
    std::size_t gcn_layers = 2;
    double threshold = 0.5; // cosine cut for reporting a pair
};

constexpr std::size_t kPatchSize = 56;
constexpr std::size_t kPatchChannels = 7; // rgb + four constant box-coordinate planes
constexpr std::size_t kGeomHidden = 64;

struct FcParams {
    Parameter w, b;
};

struct GeomEncoderParams {
    FcParams fc1; // kGeomFeatureDim -> kGeomHidden
    FcParams fc2; // kGeomHidden -> F
};

struct PatchEncoderParams {
    Parameter conv1, conv2, conv3, conv4; // 3x3 stride-2 kernels, 7->16->32->64->64
    FcParams fc;                          // 256 -> F
};

// Embedding network: a per-node encoder followed by graph message passing
// where each edge's prior weight is rescaled by learned attention. The
// node transforms are shared across message-passing rounds; attention is
// recomputed each round from the current embeddings.
struct RelNet {
    ModelConfig config;
    std::optional<GeomEncoderParams> geom;
    std::optional<PatchEncoderParams> patch;
    FcParams att1;            // 2F -> F
    FcParams att2;            // F -> 1
    Parameter self_w, self_b; // F -> F applied to the node itself
    Parameter nbr_w;          // F -> F applied to incoming messages

    std::vector<Parameter*> parameters() {
        std::vector<Parameter*> out;
        if (geom) {
            out.push_back(&geom->fc1.w);
            out.push_back(&geom->fc1.b);
            out.push_back(&geom->fc2.w);
            out.push_back(&geom->fc2.b);
        }
        if (patch) {
            out.push_back(&patch->conv1);
            out.push_back(&patch->conv2);
            out.push_back(&patch->conv3);
            out.push_back(&patch->conv4);
            out.push_back(&patch->fc.w);
            out.push_back(&patch->fc.b);
        }
        out.push_back(&att1.w);
        out.push_back(&att1.b);
        out.push_back(&att2.w);
        out.push_back(&att2.b);
        out.push_back(&self_w);
        out.push_back(&self_b);
        out.push_back(&nbr_w);
        return out;
    }

    void zero_grad() {
        for (Parameter* p : parameters()) p->zero_grad();
    }
};

inline RelNet init_relnet(const ModelConfig& config, std::uint64_t seed) {
    if (config.feature_dim == 0 || config.gcn_layers == 0)
        throw ValidationError("init_relnet: feature_dim and gcn_layers must be positive");
    Rng rng(seed);
    const std::size_t f = config.feature_dim;
    RelNet net;
    net.config = config;
    auto make_fc = [&](const std::string& name, std::size_t in, std::size_t out) {
        FcParams p;
        p.w = Parameter(name + ".w", glorot_uniform({in, out}, in, out, rng));
        p.b = Parameter(name + ".b", Tensor::zeros({out}));
        return p;
    };
    auto make_conv = [&](const std::string& name, std::size_t out, std::size_t in) {
        return Parameter(name, glorot_uniform({out, in, 3, 3}, in * 9, out * 9, rng));
    };
    if (config.mode == NodeMode::Geometric) {
        GeomEncoderParams enc;
        enc.fc1 = make_fc("geom.fc1", kGeomFeatureDim, kGeomHidden);
        enc.fc2 = make_fc("geom.fc2", kGeomHidden, f);
        net.geom = std::move(enc);
    } else {
        PatchEncoderParams enc;
        enc.conv1 = make_conv("patch.conv1", 16, kPatchChannels);
        enc.conv2 = make_conv("patch.conv2", 32, 16);
        enc.conv3 = make_conv("patch.conv3", 64, 32);
        enc.conv4 = make_conv("patch.conv4", 64, 64);
        enc.fc = make_fc("patch.fc", 64 * 2 * 2, f);
        net.patch = std::move(enc);
    }
    net.att1 = make_fc("att.fc1", 2 * f, f);
    net.att2 = make_fc("att.fc2", f, 1);
    net.self_w = Parameter("gcn.self.w", glorot_uniform({f, f}, f, f, rng));
    net.self_b = Parameter("gcn.self.b", Tensor::zeros({f}));
    net.nbr_w = Parameter("gcn.nbr.w", glorot_uniform({f, f}, f, f, rng));
    return net;
}

// ---- node inputs ----

inline Tensor make_geom_input(const std::array<double, kGeomFeatureDim>& features) {
    Tensor t({1, kGeomFeatureDim});
    std::copy(features.begin(), features.end(), t.data.begin());
    return t;
}

// Stacks four constant planes holding the box's normalized corners on top of
// the rgb crop, so the patch encoder sees where the crop came from.
inline Tensor make_patch_input(const Tensor& rgb, const DetBox& box, double width,
                               double height) {
    if (rgb.shape != std::vector<std::size_t>{3, kPatchSize, kPatchSize})
        throw ValidationError("make_patch_input: rgb must be [3,56,56]");
    Tensor t({kPatchChannels, kPatchSize, kPatchSize});
    std::copy(rgb.data.begin(), rgb.data.end(), t.data.begin());
    const double planes[4] = {box.x1 / width, box.y1 / height, box.x2 / width, box.y2 / height};
    const std::size_t plane = kPatchSize * kPatchSize;
    for (int p = 0; p < 4; ++p)
        std::fill_n(t.data.begin() + (3 + p) * plane, plane, planes[p]);
    return t;
}

inline std::vector<Tensor> make_geom_inputs(const RelGraph& g) {
    std::vector<Tensor> out(g.size());
    for (std::size_t i = 0; i < g.size(); ++i)
        if (g.kept[i]) out[i] = make_geom_input(g.nodes[i].features);
    return out;
}

// ---- forward traces ----

namespace detail {

inline Tensor row_of(const Tensor& m, std::size_t r) {
    Tensor out({1, m.dim(1)});
    std::copy_n(m.data.begin() + r * m.dim(1), m.dim(1), out.data.begin());
    return out;
}

inline void add_into_row(Tensor& m, std::size_t r, const Tensor& v) {
    for (std::size_t i = 0; i < m.dim(1); ++i) m.data[r * m.dim(1) + i] += v.data[i];
}

inline void set_row(Tensor& m, std::size_t r, const Tensor& v) {
    std::copy_n(v.data.begin(), m.dim(1), m.data.begin() + r * m.dim(1));
}

} // namespace detail

struct EncoderTrace {
    std::size_t node = 0;
    Tensor x;                 // encoder input
    std::vector<Tensor> pre;  // pre-activation outputs, in order
    std::vector<Tensor> post; // matching post-relu outputs
    Tensor flat;              // flattened conv output (patch mode)
    Tensor h;                 // [1,F]
};

struct AttEdgeTrace {
    std::size_t i = 0, j = 0; // attention of node i over neighbor j
    Tensor cat;               // [1,2F]
    Tensor z1;                // [1,F] pre-relu
    Tensor a1;                // [1,F]
    double logit = 0.0;
};

struct NodeAttention {
    std::size_t node = 0;
    std::vector<std::size_t> nbr;
    std::vector<double> prior;     // adjacency weights a_ij
    std::vector<double> logits;    // learned edge scores
    std::vector<double> scale;     // softmax of logits
    std::vector<double> corrected; // a_ij * scale_ij, the weight actually used
    std::vector<std::size_t> edge_trace; // indices into LayerTrace.att_edges
};

struct LayerTrace {
    Tensor h_in;    // [n,F]
    Tensor nbr_out; // [n,F], neighbor transform of h_in
    std::vector<AttEdgeTrace> att_edges;
    std::vector<NodeAttention> attention; // kept nodes only
    Tensor z;     // [n,F] pre-relu
    Tensor h_out; // [n,F]
};

struct SceneForward {
    std::size_t n = 0, f = 0;
    std::vector<std::size_t> kept_nodes;
    std::vector<EncoderTrace> enc;
    std::vector<LayerTrace> layers;
    Tensor h_final;    // [n,F] before normalization
    Tensor embeddings; // [n,F] unit rows for kept nodes, zero rows otherwise
};

// ---- encoder forward/backward ----

inline EncoderTrace encode_node(const RelNet& net, std::size_t node, const Tensor& input) {
    EncoderTrace t;
    t.node = node;
    t.x = input;
    if (net.config.mode == NodeMode::Geometric) {
        const GeomEncoderParams& e = *net.geom;
        if (input.shape != std::vector<std::size_t>{1, kGeomFeatureDim})
            throw ValidationError("encode_node: geometric input must be [1,16]");
        Tensor z1 = fc(input, e.fc1.w.value, e.fc1.b.value);
        Tensor a1 = relu(z1);
        t.h = fc(a1, e.fc2.w.value, e.fc2.b.value);
        t.pre.push_back(std::move(z1));
        t.post.push_back(std::move(a1));
    } else {
        const PatchEncoderParams& e = *net.patch;
        if (input.shape != std::vector<std::size_t>{kPatchChannels, kPatchSize, kPatchSize})
            throw ValidationError("encode_node: patch input must be [7,56,56]");
        const Parameter* kernels[4] = {&e.conv1, &e.conv2, &e.conv3, &e.conv4};
        Tensor cur({1, kPatchChannels, kPatchSize, kPatchSize});
        cur.data = input.data;
        t.x = cur; // batched view; gradients for the input itself are discarded
        for (const Parameter* k : kernels) {
            Tensor z = conv2d(cur, k->value, 2);
            t.post.push_back(relu(z));
            t.pre.push_back(std::move(z));
            cur = t.post.back();
        }
        t.flat = Tensor({1, cur.numel()});
        t.flat.data = cur.data;
        t.h = fc(t.flat, e.fc.w.value, e.fc.b.value);
    }
    ensure_finite(t.h, "encode_node");
    return t;
}

inline void encode_node_backward(RelNet& net, const EncoderTrace& t, const Tensor& gh) {
    if (net.config.mode == NodeMode::Geometric) {
        GeomEncoderParams& e = *net.geom;
        Tensor ga1 = Tensor::zeros(t.post[0].shape);
        fc_backward(t.post[0], e.fc2.w.value, gh, ga1, e.fc2.w.grad, e.fc2.b.grad);
        Tensor gz1 = Tensor::zeros(t.pre[0].shape);
        relu_backward(t.pre[0], ga1, gz1);
        Tensor gx = Tensor::zeros(t.x.shape);
        fc_backward(t.x, e.fc1.w.value, gz1, gx, e.fc1.w.grad, e.fc1.b.grad);
    } else {
        PatchEncoderParams& e = *net.patch;
        Tensor gflat = Tensor::zeros(t.flat.shape);
        fc_backward(t.flat, e.fc.w.value, gh, gflat, e.fc.w.grad, e.fc.b.grad);
        Tensor ga = Tensor::zeros(t.post[3].shape);
        ga.data = gflat.data;
        Parameter* kernels[4] = {&e.conv1, &e.conv2, &e.conv3, &e.conv4};
        for (int layer = 3; layer >= 0; --layer) {
            Tensor gz = Tensor::zeros(t.pre[layer].shape);
            relu_backward(t.pre[layer], ga, gz);
            const Tensor& in = layer == 0 ? t.x : t.post[layer - 1];
            Tensor gin = Tensor::zeros(in.shape);
            conv2d_backward(in, kernels[layer]->value, 2, gz, gin, kernels[layer]->grad);
            ga = std::move(gin);
        }
    }
}

// ---- message passing ----

inline double gat_logit(const RelNet& net, const Tensor& hi, const Tensor& hj,
                        AttEdgeTrace& trace) {
    trace.cat = concat_rows(hi, hj);
    trace.z1 = fc(trace.cat, net.att1.w.value, net.att1.b.value);
    trace.a1 = relu(trace.z1);
    Tensor out = fc(trace.a1, net.att2.w.value, net.att2.b.value);
    trace.logit = out.data[0];
    return trace.logit;
}

// One round of attention for every kept node: learned softmax over each
// node's neighbors, multiplied into the prior edge weight.
inline void attention_correct(const RelNet& net, const RelGraph& g, LayerTrace& layer) {
    const std::size_t n = g.size();
    for (std::size_t i = 0; i < n; ++i) {
        if (!g.kept[i]) continue;
        NodeAttention att;
        att.node = i;
        att.nbr = g.neighbors(i);
        Tensor hi = detail::row_of(layer.h_in, i);
        for (std::size_t j : att.nbr) {
            att.prior.push_back(g.weight(i, j));
            AttEdgeTrace et;
            et.i = i;
            et.j = j;
            att.logits.push_back(gat_logit(net, hi, detail::row_of(layer.h_in, j), et));
            att.edge_trace.push_back(layer.att_edges.size());
            layer.att_edges.push_back(std::move(et));
        }
        att.scale = softmax_vec(att.logits);
        att.corrected.resize(att.nbr.size());
        for (std::size_t k = 0; k < att.nbr.size(); ++k)
            att.corrected[k] = att.prior[k] * att.scale[k];
        layer.attention.push_back(std::move(att));
    }
}

inline SceneForward forward_scene(const RelNet& net, const RelGraph& g,
                                  const std::vector<Tensor>& inputs) {
    if (inputs.size() != g.size())
        throw ValidationError("forward_scene: one input per graph node required");
    const std::size_t n = g.size();
    const std::size_t f = net.config.feature_dim;
    SceneForward fwd;
    fwd.n = n;
    fwd.f = f;
    Tensor h({n, f});
    for (std::size_t i = 0; i < n; ++i) {
        if (!g.kept[i]) continue;
        fwd.kept_nodes.push_back(i);
        fwd.enc.push_back(encode_node(net, i, inputs[i]));
        detail::set_row(h, i, fwd.enc.back().h);
    }
    for (std::size_t l = 0; l < net.config.gcn_layers; ++l) {
        LayerTrace layer;
        layer.h_in = h;
        layer.nbr_out = Tensor::zeros({n, f});
        for (std::size_t i : fwd.kept_nodes) {
            Tensor hi = detail::row_of(layer.h_in, i);
            Tensor out = fc(hi, net.nbr_w.value, Tensor::zeros({f}));
            detail::set_row(layer.nbr_out, i, out);
        }
        attention_correct(net, g, layer);
        layer.z = Tensor::zeros({n, f});
        for (const NodeAttention& att : layer.attention) {
            Tensor hi = detail::row_of(layer.h_in, att.node);
            Tensor zi = fc(hi, net.self_w.value, net.self_b.value);
            for (std::size_t k = 0; k < att.nbr.size(); ++k) {
                double w = att.corrected[k];
                const std::size_t j = att.nbr[k];
                for (std::size_t d = 0; d < f; ++d)
                    zi.data[d] += w * layer.nbr_out.data[j * f + d];
            }
            detail::set_row(layer.z, att.node, zi);
        }
        layer.h_out = relu(layer.z);
        h = layer.h_out;
        fwd.layers.push_back(std::move(layer));
    }
    fwd.h_final = h;
    fwd.embeddings = l2_normalize_rows(h);
    ensure_finite(fwd.embeddings, "forward_scene");
    return fwd;
}

// Accumulates parameter gradients from a gradient over the normalized
// embeddings. Mirrors forward_scene step by step, in reverse.
inline void backward_scene(RelNet& net, const SceneForward& fwd, const Tensor& g_embeddings) {
    const std::size_t n = fwd.n, f = fwd.f;
    Tensor gh = Tensor::zeros({n, f});
    l2_normalize_rows_backward(fwd.h_final, g_embeddings, gh);
    for (std::size_t l = fwd.layers.size(); l-- > 0;) {
        const LayerTrace& layer = fwd.layers[l];
        Tensor gz = Tensor::zeros({n, f});
        relu_backward(layer.z, gh, gz);
        Tensor gh_in = Tensor::zeros({n, f});
        Tensor gnbr_out = Tensor::zeros({n, f});
        for (const NodeAttention& att : layer.attention) {
            const std::size_t i = att.node;
            Tensor gzi = detail::row_of(gz, i);
            // self transform
            Tensor hi = detail::row_of(layer.h_in, i);
            Tensor ghi = Tensor::zeros({1, f});
            fc_backward(hi, net.self_w.value, gzi, ghi, net.self_w.grad, net.self_b.grad);
            detail::add_into_row(gh_in, i, ghi);
            // messages and attention weights
            std::vector<double> g_corrected(att.nbr.size());
            for (std::size_t k = 0; k < att.nbr.size(); ++k) {
                const std::size_t j = att.nbr[k];
                double gw = 0.0;
                for (std::size_t d = 0; d < f; ++d) {
                    gw += gzi.data[d] * layer.nbr_out.data[j * f + d];
                    gnbr_out.data[j * f + d] += att.corrected[k] * gzi.data[d];
                }
                g_corrected[k] = gw;
            }
            std::vector<double> g_scale(att.nbr.size());
            for (std::size_t k = 0; k < att.nbr.size(); ++k)
                g_scale[k] = att.prior[k] * g_corrected[k];
            std::vector<double> g_logits = softmax_vec_backward(att.scale, g_scale);
            for (std::size_t k = 0; k < att.nbr.size(); ++k) {
                const AttEdgeTrace& et = layer.att_edges[att.edge_trace[k]];
                Tensor glogit({1, 1});
                glogit.data[0] = g_logits[k];
                Tensor ga1 = Tensor::zeros(et.a1.shape);
                fc_backward(et.a1, net.att2.w.value, glogit, ga1, net.att2.w.grad,
                            net.att2.b.grad);
                Tensor gz1 = Tensor::zeros(et.z1.shape);
                relu_backward(et.z1, ga1, gz1);
                Tensor gcat = Tensor::zeros(et.cat.shape);
                fc_backward(et.cat, net.att1.w.value, gz1, gcat, net.att1.w.grad,
                            net.att1.b.grad);
                for (std::size_t d = 0; d < f; ++d) {
                    gh_in.data[et.i * f + d] += gcat.data[d];
                    gh_in.data[et.j * f + d] += gcat.data[f + d];
                }
            }
        }
        // neighbor transform applied to every kept row of h_in
        for (std::size_t i = 0; i < n; ++i) {
            bool any = false;
            for (std::size_t d = 0; d < f; ++d)
                if (gnbr_out.data[i * f + d] != 0.0) any = true;
            if (!any) continue;
            Tensor hi = detail::row_of(layer.h_in, i);
            Tensor gout = detail::row_of(gnbr_out, i);
            Tensor ghi = Tensor::zeros({1, f});
            Tensor gb_unused = Tensor::zeros({f});
            fc_backward(hi, net.nbr_w.value, gout, ghi, net.nbr_w.grad, gb_unused);
            detail::add_into_row(gh_in, i, ghi);
        }
        gh = std::move(gh_in);
    }
    for (const EncoderTrace& t : fwd.enc)
        encode_node_backward(net, t, detail::row_of(gh, t.node));
}

// ---- pair scoring ----

struct PairScore {
    std::size_t vehicle_node = 0;
    std::size_t wheel_node = 0;
    double score = 0.0; // cosine of the two unit embeddings
};

inline std::vector<PairScore> pair_cosines(const RelGraph& g, const Tensor& embeddings) {
    std::vector<PairScore> out;
    const std::size_t f = embeddings.dim(1);
    for (const GraphEdge& e : g.edges) {
        if (e.kind != PairKind::WheelVehicle) continue;
        double dot = 0.0;
        for (std::size_t d = 0; d < f; ++d)
            dot += embeddings.data[e.a * f + d] * embeddings.data[e.b * f + d];
        out.push_back({e.a, e.b, dot});
    }
    return out;
}

// Thresholded pair report plus a per-wheel owner choice: every scored pair
// above the cut is listed, and each wheel keeps its best-scoring vehicle
// (ties go to the smaller vehicle box id).
inline OwnershipPrediction match_pairs(const RelGraph& g, const Tensor& embeddings,
                                       double threshold) {
    OwnershipPrediction pred;
    pred.image_id = g.image_id;
    std::map<int, std::pair<double, int>> best; // wheel id -> (score, vehicle id)
    for (const PairScore& p : pair_cosines(g, embeddings)) {
        if (!(p.score > threshold)) continue;
        int vid = g.nodes[p.vehicle_node].box_id;
        int wid = g.nodes[p.wheel_node].box_id;
        pred.pairs.push_back({vid, wid, p.score});
        auto it = best.find(wid);
        if (it == best.end() || p.score > it->second.first ||
            (p.score == it->second.first && vid < it->second.second))
            best[wid] = {p.score, vid};
    }
    std::sort(pred.pairs.begin(), pred.pairs.end(), [](const auto& a, const auto& b) {
        return a.wheel_id != b.wheel_id ? a.wheel_id < b.wheel_id : a.vehicle_id < b.vehicle_id;
    });
    for (const auto& [wid, sv] : best) pred.assignments[wid] = sv.second;
    return pred;
}

// ---- checkpoints ----

constexpr int kCheckpointVersion = 1;

inline std::string save_checkpoint(RelNet& net) {
    nlohmann::ordered_json tensors;
    for (Parameter* p : net.parameters()) tensors[p->name] = tensor_to_json(p->value);
    nlohmann::ordered_json j{
        {"format_version", kCheckpointVersion},
        {"arch",
         {{"mode", node_mode_name(net.config.mode)},
          {"feature_dim", net.config.feature_dim},
          {"gcn_layers", net.config.gcn_layers},
          {"threshold", net.config.threshold}}},
        {"tensors", tensors}};
    return j.dump(2) + "\n";
}

inline RelNet load_checkpoint(const std::string& text, const std::string& name = "checkpoint") {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError(name + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("format_version") || !j.contains("arch") ||
        !j.contains("tensors"))
        throw ValidationError(name + ": expected {format_version, arch, tensors}");
    if (j["format_version"].get<int>() != kCheckpointVersion)
        throw ValidationError(name + ": unsupported format version");
    const auto& arch = j["arch"];
    ModelConfig config;
    config.mode = node_mode_from_name(arch.at("mode").get<std::string>());
    config.feature_dim = arch.at("feature_dim").get<std::size_t>();
    config.gcn_layers = arch.at("gcn_layers").get<std::size_t>();
    config.threshold = arch.at("threshold").get<double>();
    RelNet net = init_relnet(config, 0);
    const auto& tensors = j["tensors"];
    for (Parameter* p : net.parameters()) {
        if (!tensors.contains(p->name))
            throw ValidationError(name + ": missing tensor " + p->name);
        Tensor t = tensor_from_json(tensors[p->name], name + "." + p->name);
        if (t.shape != p->value.shape)
            throw ValidationError(name + ": shape mismatch for " + p->name);
        p->value = std::move(t);
        ensure_finite(p->value, name + "." + p->name);
    }
    return net;
}

} // namespace wheelrel
