#include <catch2/catch_amalgamated.hpp>

#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

#include "wheelrel/relnet.hpp"
#include "wheelrel/synthgen.hpp"

#include "helpers.hpp"

using namespace wheelrel;
using testutil::flat_prior;

namespace {

// y = x . w + b for a single row, written as plain loops.
std::vector<double> manual_fc_row(const std::vector<double>& x, const Tensor& w,
                                  const Tensor& b) {
    const std::size_t in = w.dim(0), out = w.dim(1);
    REQUIRE(x.size() == in);
    std::vector<double> y(out);
    for (std::size_t o = 0; o < out; ++o) {
        double acc = b.numel() ? b.data[o] : 0.0;
        for (std::size_t i = 0; i < in; ++i) acc += x[i] * w.data[i * out + o];
        y[o] = acc;
    }
    return y;
}

std::vector<double> manual_relu(std::vector<double> v) {
    for (double& x : v) x = std::max(x, 0.0);
    return v;
}

std::vector<double> manual_encode(const RelNet& net,
                                  const std::array<double, kGeomFeatureDim>& f) {
    std::vector<double> x(f.begin(), f.end());
    auto a1 = manual_relu(manual_fc_row(x, net.geom->fc1.w.value, net.geom->fc1.b.value));
    return manual_fc_row(a1, net.geom->fc2.w.value, net.geom->fc2.b.value);
}

double manual_logit(const RelNet& net, const std::vector<double>& hi,
                    const std::vector<double>& hj) {
    std::vector<double> cat = hi;
    cat.insert(cat.end(), hj.begin(), hj.end());
    auto a1 = manual_relu(manual_fc_row(cat, net.att1.w.value, net.att1.b.value));
    return manual_fc_row(a1, net.att2.w.value, net.att2.b.value)[0];
}

std::vector<double> manual_softmax(const std::vector<double>& z) {
    double m = *std::max_element(z.begin(), z.end());
    std::vector<double> p(z.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) sum += p[i] = std::exp(z[i] - m);
    for (double& v : p) v /= sum;
    return p;
}

// Row r of a [n,f] tensor as a plain vector.
std::vector<double> row(const Tensor& m, std::size_t r) {
    const std::size_t f = m.dim(1);
    return {m.data.begin() + r * f, m.data.begin() + (r + 1) * f};
}

// Recomputes the whole forward pass with naive loops and returns the final
// normalized embeddings, one vector per node (zero rows for masked nodes).
std::vector<std::vector<double>> manual_forward(const RelNet& net, const RelGraph& g) {
    const std::size_t n = g.size();
    std::vector<std::vector<double>> h(n);
    for (std::size_t i = 0; i < n; ++i)
        h[i] = g.kept[i] ? manual_encode(net, g.nodes[i].features)
                         : std::vector<double>(net.config.feature_dim, 0.0);
    Tensor no_bias = Tensor::zeros({net.config.feature_dim});
    for (std::size_t l = 0; l < net.config.gcn_layers; ++l) {
        std::vector<std::vector<double>> next(n,
                                              std::vector<double>(net.config.feature_dim, 0.0));
        for (std::size_t i = 0; i < n; ++i) {
            if (!g.kept[i]) continue;
            std::vector<double> z =
                manual_fc_row(h[i], net.self_w.value, net.self_b.value);
            std::vector<std::size_t> nbr = g.neighbors(i);
            if (!nbr.empty()) {
                std::vector<double> logits;
                for (std::size_t j : nbr) logits.push_back(manual_logit(net, h[i], h[j]));
                std::vector<double> scale = manual_softmax(logits);
                for (std::size_t k = 0; k < nbr.size(); ++k) {
                    double w = g.weight(i, nbr[k]) * scale[k];
                    std::vector<double> msg =
                        manual_fc_row(h[nbr[k]], net.nbr_w.value, no_bias);
                    for (std::size_t d = 0; d < z.size(); ++d) z[d] += w * msg[d];
                }
            }
            next[i] = manual_relu(z);
        }
        h = std::move(next);
    }
    for (auto& v : h) {
        double sq = 0.0;
        for (double x : v) sq += x * x;
        double norm = std::max(std::sqrt(sq), 1e-12);
        for (double& x : v) x /= norm;
    }
    return h;
}

std::array<double, kGeomFeatureDim> fake_features(double a, double b) {
    std::array<double, kGeomFeatureDim> f{};
    for (std::size_t i = 0; i < kGeomFeatureDim; ++i)
        f[i] = std::sin(a + b * static_cast<double>(i));
    return f;
}

// A graph assembled by hand, with full control over the adjacency weights.
RelGraph hand_graph(std::vector<GraphNode> nodes,
                    const std::vector<GraphEdge>& edges) {
    RelGraph g;
    g.image_id = "hand";
    g.nodes = std::move(nodes);
    const std::size_t n = g.nodes.size();
    g.kept.assign(n, true);
    g.adjacency.assign(n * n, 0.0);
    for (const GraphEdge& e : edges) {
        g.adjacency[e.a * n + e.b] = e.weight;
        g.adjacency[e.b * n + e.a] = e.weight;
        g.edges.push_back(e);
    }
    return g;
}

} // namespace

TEST_CASE("the geometric encoder matches a naive recompute", "[relnet]") {
    RelNet net = init_relnet({NodeMode::Geometric, 8, 2, 0.5}, 17);
    Tensor input = make_geom_input(fake_features(0.3, 0.7));
    EncoderTrace t = encode_node(net, 0, input);
    REQUIRE(t.h.shape == std::vector<std::size_t>{1, 8});
    std::vector<double> expect = manual_encode(net, fake_features(0.3, 0.7));
    for (std::size_t d = 0; d < 8; ++d)
        REQUIRE(t.h.data[d] == Catch::Approx(expect[d]).margin(1e-12));

    SECTION("a zero input lands on the zero-initialized biases") {
        Tensor zero({1, kGeomFeatureDim});
        EncoderTrace z = encode_node(net, 0, zero);
        for (double v : z.h.data) CHECK(v == 0.0);
    }
    SECTION("wrong input shape is rejected") {
        Tensor bad({1, 4});
        CHECK_THROWS_AS(encode_node(net, 0, bad), ValidationError);
    }
}

TEST_CASE("the patch encoder produces an embedding from a 7-channel crop", "[relnet]") {
    RelNet net = init_relnet({NodeMode::Patch, 8, 1, 0.5}, 23);
    Scene s = testutil::one_vehicle_two_wheels();
    Tensor rgb = render_patch(s, 1);
    Tensor input = make_patch_input(rgb, *s.find_box(1), s.width, s.height);
    REQUIRE(input.shape == std::vector<std::size_t>{kPatchChannels, kPatchSize, kPatchSize});
    EncoderTrace t = encode_node(net, 0, input);
    REQUIRE(t.h.shape == std::vector<std::size_t>{1, 8});
    for (double v : t.h.data) REQUIRE(std::isfinite(v));
    // coordinate planes carry the normalized corners
    const std::size_t plane = kPatchSize * kPatchSize;
    CHECK(input.data[3 * plane] == Catch::Approx(130.0 / 1000.0));
    CHECK(input.data[4 * plane] == Catch::Approx(480.0 / 800.0));

    SECTION("rgb crop of the wrong shape is rejected") {
        Tensor bad({3, 10, 10});
        CHECK_THROWS_AS(make_patch_input(bad, *s.find_box(1), s.width, s.height),
                        ValidationError);
    }
}

TEST_CASE("attention logits match a naive recompute", "[relnet]") {
    RelNet net = init_relnet({NodeMode::Geometric, 6, 1, 0.5}, 29);
    Rng rng(4);
    Tensor hi({1, 6}), hj({1, 6});
    for (double& v : hi.data) v = rng.uniform(-1, 1);
    for (double& v : hj.data) v = rng.uniform(-1, 1);
    AttEdgeTrace trace;
    double logit = gat_logit(net, hi, hj, trace);
    CHECK(logit ==
          Catch::Approx(manual_logit(net, row(hi, 0), row(hj, 0))).margin(1e-12));

    SECTION("zero embeddings give a zero logit at initialization") {
        Tensor z({1, 6});
        AttEdgeTrace t2;
        CHECK(gat_logit(net, z, z, t2) == 0.0);
    }
}

TEST_CASE("attention rescales prior weights on the simplex", "[relnet]") {
    // one wheel (node 0) connected to two vehicles with identical features,
    // so both edges get the same learned logit
    std::vector<GraphNode> nodes(3);
    nodes[0] = {5, BoxClass::Wheel, fake_features(0.1, 0.4)};
    nodes[1] = {10, BoxClass::Vehicle, fake_features(0.9, 0.2)};
    nodes[2] = {20, BoxClass::Vehicle, fake_features(0.9, 0.2)};
    RelGraph g = hand_graph(nodes, {{1, 0, PairKind::WheelVehicle, 0.6},
                                    {2, 0, PairKind::WheelVehicle, 0.2}});
    RelNet net = init_relnet({NodeMode::Geometric, 8, 1, 0.5}, 31);
    SceneForward fwd = forward_scene(net, g, make_geom_inputs(g));
    REQUIRE(fwd.layers.size() == 1);

    const NodeAttention* wheel_att = nullptr;
    for (const NodeAttention& a : fwd.layers[0].attention)
        if (a.node == 0) wheel_att = &a;
    REQUIRE(wheel_att != nullptr);
    REQUIRE(wheel_att->nbr == std::vector<std::size_t>{1, 2});

    SECTION("equal logits split the softmax evenly") {
        CHECK(wheel_att->logits[0] ==
              Catch::Approx(wheel_att->logits[1]).margin(1e-12));
        CHECK(wheel_att->scale[0] == Catch::Approx(0.5).margin(1e-12));
        CHECK(wheel_att->scale[1] == Catch::Approx(0.5).margin(1e-12));
    }
    SECTION("corrected weights are prior times softmax: (0.6, 0.2) -> (0.3, 0.1)") {
        CHECK(wheel_att->corrected[0] == Catch::Approx(0.3).margin(1e-12));
        CHECK(wheel_att->corrected[1] == Catch::Approx(0.1).margin(1e-12));
    }
    SECTION("a single neighbor always gets scale one") {
        for (const NodeAttention& a : fwd.layers[0].attention)
            if (a.nbr.size() == 1) CHECK(a.scale[0] == Catch::Approx(1.0).margin(1e-15));
    }
}

TEST_CASE("attention invariants hold on random graphs", "[relnet]") {
    GenConfig cfg;
    cfg.n_scenes = 20;
    cfg.seed = 44;
    cfg.difficulty = Difficulty::Mixed;
    cfg.overlap_rate = 0.5;
    std::vector<Scene> scenes = generate(cfg);
    PriorModel prior = flat_prior();
    RelNet net = init_relnet({NodeMode::Geometric, 8, 2, 0.5}, 45);
    for (const Scene& s : scenes) {
        RelGraph g = build_graph(s, prior);
        SceneForward fwd = forward_scene(net, g, make_geom_inputs(g));
        for (const LayerTrace& layer : fwd.layers) {
            for (const NodeAttention& att : layer.attention) {
                if (!att.nbr.empty()) {
                    double sum = 0.0;
                    for (double v : att.scale) sum += v;
                    REQUIRE(sum == Catch::Approx(1.0).margin(1e-6));
                }
                for (std::size_t k = 0; k < att.nbr.size(); ++k) {
                    REQUIRE(att.prior[k] == g.weight(att.node, att.nbr[k]));
                    REQUIRE(att.corrected[k] ==
                            Catch::Approx(att.prior[k] * att.scale[k])
                                .epsilon(1e-12)
                                .margin(1e-300));
                    // zero-weight pairs never appear as neighbors
                    REQUIRE(att.prior[k] > 0.0);
                }
            }
        }
    }
}

TEST_CASE("message passing matches a naive per-node recompute", "[relnet]") {
    GenConfig cfg;
    cfg.n_scenes = 6;
    cfg.seed = 52;
    cfg.difficulty = Difficulty::Mixed;
    cfg.overlap_rate = 0.5;
    std::vector<Scene> scenes = generate(cfg);
    for (std::size_t layers : {std::size_t{1}, std::size_t{2}}) {
        RelNet net = init_relnet({NodeMode::Geometric, 8, layers, 0.5}, 60 + layers);
        for (const Scene& s : scenes) {
            RelGraph g = build_graph(s, flat_prior());
            SceneForward fwd = forward_scene(net, g, make_geom_inputs(g));
            auto expect = manual_forward(net, g);
            REQUIRE(fwd.embeddings.dim(0) == g.size());
            for (std::size_t i = 0; i < g.size(); ++i)
                for (std::size_t d = 0; d < 8; ++d)
                    REQUIRE(fwd.embeddings(i, d) ==
                            Catch::Approx(expect[i][d]).margin(1e-10));
        }
    }
}

TEST_CASE("a graph with no edges reduces to the self path", "[relnet]") {
    std::vector<GraphNode> nodes(2);
    nodes[0] = {1, BoxClass::Vehicle, fake_features(0.2, 0.5)};
    nodes[1] = {2, BoxClass::Vehicle, fake_features(0.8, 0.3)};
    RelGraph g = hand_graph(nodes, {});
    RelNet net = init_relnet({NodeMode::Geometric, 8, 2, 0.5}, 71);
    SceneForward fwd = forward_scene(net, g, make_geom_inputs(g));
    for (std::size_t i = 0; i < 2; ++i) {
        std::vector<double> h = manual_encode(net, g.nodes[i].features);
        for (std::size_t l = 0; l < 2; ++l)
            h = manual_relu(manual_fc_row(h, net.self_w.value, net.self_b.value));
        double sq = 0.0;
        for (double v : h) sq += v * v;
        double norm = std::max(std::sqrt(sq), 1e-12);
        for (std::size_t d = 0; d < 8; ++d)
            REQUIRE(fwd.embeddings(i, d) == Catch::Approx(h[d] / norm).margin(1e-12));
    }
}

TEST_CASE("masked nodes keep zero embeddings", "[relnet]") {
    Scene s = testutil::one_vehicle_two_wheels();
    s.boxes.push_back(testutil::wheel(800, 700, 812, 712, 9)); // below the mask
    RelGraph g = build_graph(s, flat_prior());
    REQUIRE_FALSE(g.kept[3]);
    RelNet net = init_relnet({NodeMode::Geometric, 8, 2, 0.5}, 80);
    SceneForward fwd = forward_scene(net, g, make_geom_inputs(g));
    for (std::size_t d = 0; d < 8; ++d) CHECK(fwd.embeddings(3, d) == 0.0);
    for (std::size_t i = 0; i < 3; ++i) {
        double sq = 0.0;
        for (std::size_t d = 0; d < 8; ++d) sq += fwd.embeddings(i, d) * fwd.embeddings(i, d);
        CHECK(sq == Catch::Approx(1.0).margin(1e-9));
    }
}

TEST_CASE("node order does not change the embeddings", "[relnet]") {
    GenConfig cfg;
    cfg.n_scenes = 3;
    cfg.seed = 83;
    cfg.overlap_rate = 0.5;
    cfg.difficulty = Difficulty::Mixed;
    std::vector<Scene> scenes = generate(cfg);
    RelNet net = init_relnet({NodeMode::Geometric, 8, 2, 0.5}, 84);
    for (const Scene& s : scenes) {
        Scene reversed = s;
        std::reverse(reversed.boxes.begin(), reversed.boxes.end());
        RelGraph ga = build_graph(s, flat_prior());
        RelGraph gb = build_graph(reversed, flat_prior());
        SceneForward fa = forward_scene(net, ga, make_geom_inputs(ga));
        SceneForward fb = forward_scene(net, gb, make_geom_inputs(gb));
        const std::size_t n = s.boxes.size();
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t d = 0; d < 8; ++d)
                REQUIRE(fa.embeddings(i, d) ==
                        Catch::Approx(fb.embeddings(n - 1 - i, d)).margin(1e-10));
    }
}

TEST_CASE("pair matching follows the cosine threshold rules", "[relnet]") {
    std::vector<GraphNode> nodes(3);
    nodes[0] = {10, BoxClass::Vehicle, {}};
    nodes[1] = {20, BoxClass::Vehicle, {}};
    nodes[2] = {5, BoxClass::Wheel, {}};
    RelGraph g = hand_graph(nodes, {{0, 2, PairKind::WheelVehicle, 1.0},
                                    {1, 2, PairKind::WheelVehicle, 1.0}});
    Tensor emb({3, 2});
    auto set_emb = [&](std::size_t node, double x, double y) {
        emb(node, 0) = x;
        emb(node, 1) = y;
    };

    SECTION("identical embeddings score one") {
        set_emb(0, 1, 0);
        set_emb(1, 0, 1);
        set_emb(2, 1, 0);
        OwnershipPrediction p = match_pairs(g, emb, 0.5);
        REQUIRE(p.pairs.size() == 1);
        CHECK(p.pairs[0].vehicle_id == 10);
        CHECK(p.pairs[0].wheel_id == 5);
        CHECK(p.pairs[0].score == Catch::Approx(1.0).margin(1e-15));
        CHECK(p.assignments.at(5) == 10);
    }
    SECTION("orthogonal embeddings retain nothing") {
        set_emb(0, 0, 1);
        set_emb(1, 0, 1);
        set_emb(2, 1, 0);
        OwnershipPrediction p = match_pairs(g, emb, 0.5);
        CHECK(p.pairs.empty());
        CHECK(p.assignments.empty());
    }
    SECTION("scores at the threshold are dropped (strictly greater survives)") {
        set_emb(0, 0.5, std::sqrt(0.75));
        set_emb(1, 0, 1);
        set_emb(2, 1, 0);
        OwnershipPrediction p = match_pairs(g, emb, 0.5);
        CHECK(p.pairs.empty());
    }
    SECTION("every retained pair is reported but the best one wins") {
        set_emb(0, 0.71, std::sqrt(1 - 0.71 * 0.71));
        set_emb(1, 0.88, std::sqrt(1 - 0.88 * 0.88));
        set_emb(2, 1, 0);
        OwnershipPrediction p = match_pairs(g, emb, 0.5);
        REQUIRE(p.pairs.size() == 2);
        CHECK(p.pairs[0].vehicle_id == 10); // sorted by wheel then vehicle id
        CHECK(p.pairs[0].score == Catch::Approx(0.71).margin(1e-12));
        CHECK(p.pairs[1].vehicle_id == 20);
        CHECK(p.pairs[1].score == Catch::Approx(0.88).margin(1e-12));
        REQUIRE(p.assignments.size() == 1);
        CHECK(p.assignments.at(5) == 20);
    }
    SECTION("exact ties go to the smaller vehicle id") {
        set_emb(0, 1, 0);
        set_emb(1, 1, 0);
        set_emb(2, 1, 0);
        OwnershipPrediction p = match_pairs(g, emb, 0.5);
        REQUIRE(p.pairs.size() == 2);
        CHECK(p.assignments.at(5) == 10);
    }
}

TEST_CASE("pair cosines stay in [-1, 1] for unit embeddings", "[relnet]") {
    GenConfig cfg;
    cfg.n_scenes = 10;
    cfg.seed = 90;
    cfg.overlap_rate = 0.5;
    std::vector<Scene> scenes = generate(cfg);
    RelNet net = init_relnet({NodeMode::Geometric, 8, 2, 0.5}, 91);
    for (const Scene& s : scenes) {
        RelGraph g = build_graph(s, flat_prior());
        SceneForward fwd = forward_scene(net, g, make_geom_inputs(g));
        for (const PairScore& p : pair_cosines(g, fwd.embeddings)) {
            REQUIRE(p.score >= -1.0 - 1e-12);
            REQUIRE(p.score <= 1.0 + 1e-12);
            REQUIRE(g.nodes[p.vehicle_node].cls == BoxClass::Vehicle);
            REQUIRE(g.nodes[p.wheel_node].cls == BoxClass::Wheel);
        }
    }
}

TEST_CASE("checkpoints restore the network exactly", "[relnet]") {
    for (NodeMode mode : {NodeMode::Geometric, NodeMode::Patch}) {
        RelNet net = init_relnet({mode, 8, 2, 0.42}, 95);
        std::string text = save_checkpoint(net);
        RelNet back = load_checkpoint(text);
        CHECK(back.config.mode == mode);
        CHECK(back.config.feature_dim == 8);
        CHECK(back.config.gcn_layers == 2);
        CHECK(back.config.threshold == 0.42);
        auto pa = net.parameters();
        auto pb = back.parameters();
        REQUIRE(pa.size() == pb.size());
        for (std::size_t i = 0; i < pa.size(); ++i) {
            REQUIRE(pa[i]->name == pb[i]->name);
            REQUIRE(pa[i]->value.shape == pb[i]->value.shape);
            REQUIRE(pa[i]->value.data == pb[i]->value.data); // bit-exact through json
        }
    }
    SECTION("a restored net forwards identically") {
        Scene s = testutil::one_vehicle_two_wheels();
        RelGraph g = build_graph(s, flat_prior());
        RelNet net = init_relnet({NodeMode::Geometric, 8, 2, 0.5}, 96);
        RelNet back = load_checkpoint(save_checkpoint(net));
        SceneForward fa = forward_scene(net, g, make_geom_inputs(g));
        SceneForward fb = forward_scene(back, g, make_geom_inputs(g));
        REQUIRE(fa.embeddings.data == fb.embeddings.data);
    }
}

TEST_CASE("corrupted checkpoints are rejected", "[relnet]") {
    RelNet net = init_relnet({NodeMode::Geometric, 4, 1, 0.5}, 97);
    std::string good = save_checkpoint(net);

    SECTION("broken json") {
        CHECK_THROWS_AS(load_checkpoint(good.substr(0, good.size() / 2)), ValidationError);
    }
    SECTION("missing tensor") {
        nlohmann::json j = nlohmann::json::parse(good);
        j["tensors"].erase("gcn.self.w");
        CHECK_THROWS_AS(load_checkpoint(j.dump()), ValidationError);
    }
    SECTION("wrong shape") {
        nlohmann::json j = nlohmann::json::parse(good);
        j["tensors"]["gcn.self.w"]["shape"] = std::vector<std::size_t>{2, 2};
        j["tensors"]["gcn.self.w"]["data"] = std::vector<double>{1, 2, 3, 4};
        CHECK_THROWS_AS(load_checkpoint(j.dump()), ValidationError);
    }
    SECTION("unsupported version") {
        nlohmann::json j = nlohmann::json::parse(good);
        j["format_version"] = 999;
        CHECK_THROWS_AS(load_checkpoint(j.dump()), ValidationError);
    }
    SECTION("non-finite weight") {
        std::string bad = good;
        auto pos = bad.find("\"data\"");
        REQUIRE(pos != std::string::npos);
        nlohmann::json j = nlohmann::json::parse(good);
        j["tensors"]["gcn.self.w"]["data"][0] = "not a number";
        CHECK_THROWS(load_checkpoint(j.dump()));
    }
}

TEST_CASE("the full network passes a gradient check", "[relnet]") {
    Scene s = testutil::one_vehicle_two_wheels();
    s.boxes.push_back(testutil::vehicle(700, 250, 960, 540, 3));
    s.boxes.push_back(testutil::wheel(720, 460, 790, 530, 4));
    s.relations.push_back({3, 4});
    REQUIRE(scene_defect(s).empty());
    RelGraph g = build_graph(s, flat_prior());
    REQUIRE(g.size() == 5);

    RelNet net = init_relnet({NodeMode::Geometric, 6, 2, 0.5}, 101);
    std::vector<Tensor> inputs = make_geom_inputs(g);
    Rng rng(5);
    Tensor coeff({g.size(), 6});
    for (double& v : coeff.data) v = rng.uniform(-1, 1);

    GradCheckTarget t;
    t.params = net.parameters();
    t.forward = [&] {
        SceneForward fwd = forward_scene(net, g, inputs);
        double loss = 0.0;
        for (std::size_t i = 0; i < fwd.embeddings.data.size(); ++i)
            loss += coeff.data[i] * fwd.embeddings.data[i];
        return loss;
    };
    t.accumulate_grad = [&] {
        SceneForward fwd = forward_scene(net, g, inputs);
        backward_scene(net, fwd, coeff);
    };
    GradCheckResult r = grad_check(t);
    INFO("worst parameter: " << r.worst_param << "[" << r.worst_index << "]");
    CHECK(r.max_rel_error < 1e-3);
}

TEST_CASE("initialization is deterministic in the seed", "[relnet]") {
    RelNet a = init_relnet({NodeMode::Geometric, 8, 2, 0.5}, 7);
    RelNet b = init_relnet({NodeMode::Geometric, 8, 2, 0.5}, 7);
    RelNet c = init_relnet({NodeMode::Geometric, 8, 2, 0.5}, 8);
    auto pa = a.parameters(), pb = b.parameters(), pc = c.parameters();
    bool all_equal = true, any_differs = false;
    for (std::size_t i = 0; i < pa.size(); ++i) {
        all_equal = all_equal && pa[i]->value.data == pb[i]->value.data;
        any_differs = any_differs || pa[i]->value.data != pc[i]->value.data;
    }
    CHECK(all_equal);
    CHECK(any_differs);
    CHECK_THROWS_AS(init_relnet({NodeMode::Geometric, 0, 2, 0.5}, 1), ValidationError);
}
