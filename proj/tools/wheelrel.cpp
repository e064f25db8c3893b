// wheelrel: wheel-to-vehicle ownership pipeline.
//
// Subcommands cover the full loop: generate synthetic scenes, fit the
// geometric prior, train the relation network, predict (learned or IoU
// baseline), score predictions, compare reports, and render SVG overlays.
// All outputs are written atomically and every artifact gets a
// "<path>.meta.json" sidecar echoing the effective configuration.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "wheelrel/baseline.hpp"
#include "wheelrel/eval.hpp"
#include "wheelrel/graph.hpp"
#include "wheelrel/prior.hpp"
#include "wheelrel/relnet.hpp"
#include "wheelrel/scene_io.hpp"
#include "wheelrel/svg.hpp"
#include "wheelrel/synthgen.hpp"
#include "wheelrel/training.hpp"
#include "wheelrel/util.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

namespace {

using nlohmann::ordered_json;
namespace fs = std::filesystem;
using namespace wheelrel;
using namespace wheelrel::util;

constexpr const char* kVersion = "0.1.0";

// Bad flag combinations that CLI11 cannot express declaratively.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void write_meta(const fs::path& artifact, const std::string& command, ordered_json config,
                const std::vector<std::string>& inputs) {
    ordered_json meta;
    meta["tool"] = std::string("wheelrel ") + kVersion;
    meta["command"] = command;
    meta["inputs"] = inputs;
    meta["config"] = std::move(config);
    atomic_write_text(artifact.string() + ".meta.json", meta.dump(2) + "\n");
}

std::vector<Scene> load_scenes(const std::string& path) {
    return read_scene_file(path);
}

// ---- gen ----

struct GenArgs {
    std::string out;
    GenConfig cfg;
    std::string difficulty = "mixed";
};

void run_gen(const GenArgs& a) {
    GenConfig cfg = a.cfg;
    cfg.difficulty = difficulty_from_name(a.difficulty);
    std::vector<Scene> scenes = generate(cfg);
    atomic_write_text(a.out, scenes_to_jsonl(scenes));
    ordered_json c{{"seed", cfg.seed},
                   {"n", cfg.n_scenes},
                   {"difficulty", difficulty_name(cfg.difficulty)},
                   {"width", cfg.width},
                   {"height", cfg.height},
                   {"easy_min", cfg.easy_min},
                   {"easy_max", cfg.easy_max},
                   {"hard_min", cfg.hard_min},
                   {"hard_max", cfg.hard_max},
                   {"overlap_rate", cfg.overlap_rate}};
    write_meta(a.out, "gen", c, {});
    std::cout << "wrote " << scenes.size() << " scenes -> " << a.out << "\n";
}

// ---- fit-prior ----

struct FitPriorArgs {
    std::string scenes;
    std::string out;
    std::string histogram; // optional dump of the raw log-ratio samples
    std::size_t k_wv = 2, k_ww = 2;
    std::uint64_t seed = 1;
};

ordered_json histogram_json(const std::vector<double>& samples, std::size_t skipped) {
    constexpr std::size_t kBins = 64;
    ordered_json h;
    h["count"] = samples.size();
    h["skipped_zero_distance"] = skipped;
    if (samples.empty()) {
        h["counts"] = ordered_json::array();
        return h;
    }
    auto [lo_it, hi_it] = std::minmax_element(samples.begin(), samples.end());
    double lo = *lo_it, hi = *hi_it;
    double width = (hi > lo) ? (hi - lo) / kBins : 1.0;
    std::vector<std::size_t> counts(kBins, 0);
    for (double x : samples) {
        auto b = static_cast<std::size_t>((x - lo) / width);
        counts[std::min(b, kBins - 1)]++;
    }
    h["min"] = lo;
    h["max"] = hi;
    h["bin_width"] = width;
    h["counts"] = counts;
    return h;
}

void run_fit_prior(const FitPriorArgs& a) {
    std::vector<Scene> scenes = load_scenes(a.scenes);
    GmmFitDiagnostics diag_wv, diag_ww;
    PriorModel model = fit_prior(scenes, a.k_wv, a.k_ww, a.seed, &diag_wv, &diag_ww);
    atomic_write_text(a.out, prior_to_json(model));
    ordered_json c{{"scenes", a.scenes},
                   {"k_wv", a.k_wv},
                   {"k_ww", a.k_ww},
                   {"seed", a.seed}};
    write_meta(a.out, "fit-prior", c, {a.scenes});
    if (!a.histogram.empty()) {
        PairSamples samples = collect_pair_samples(scenes);
        ordered_json h{{"wv", histogram_json(samples.wv, samples.skipped_zero_distance)},
                       {"ww", histogram_json(samples.ww, samples.skipped_zero_distance)}};
        atomic_write_text(a.histogram, h.dump(2) + "\n");
        write_meta(a.histogram, "fit-prior", c, {a.scenes});
    }
    std::cout << "fit wv: " << diag_wv.iterations << " iters, avg loglik "
              << diag_wv.final_avg_loglik << "\n"
              << "fit ww: " << diag_ww.iterations << " iters, avg loglik "
              << diag_ww.final_avg_loglik << "\n"
              << "wrote prior -> " << a.out << "\n";
}

// ---- train ----

struct TrainArgs {
    std::string scenes;
    std::string prior;
    std::string out;
    std::string report;
    std::string mode = "geometric";
    std::size_t feature_dim = 64;
    std::size_t gcn_layers = 2;
    double threshold = 0.5;
    TrainConfig cfg;
};

ordered_json train_config_json(const TrainArgs& a) {
    return ordered_json{{"scenes", a.scenes},
                        {"prior", a.prior},
                        {"mode", a.mode},
                        {"feature_dim", a.feature_dim},
                        {"gcn_layers", a.gcn_layers},
                        {"threshold", a.threshold},
                        {"edge_epsilon", a.cfg.edge_epsilon},
                        {"epochs", a.cfg.epochs},
                        {"learning_rate", a.cfg.learning_rate},
                        {"neg_weight", a.cfg.neg_weight},
                        {"neg_downsample_ratio", a.cfg.neg_downsample_ratio},
                        {"mask_tau", a.cfg.mask_tau},
                        {"seed", a.cfg.seed},
                        {"batch_scenes", a.cfg.batch_scenes},
                        {"val_fraction", a.cfg.val_fraction}};
}

void run_train(const TrainArgs& a) {
    std::vector<Scene> scenes = load_scenes(a.scenes);
    PriorModel prior = prior_from_json(read_text_file(a.prior), a.prior);
    ModelConfig mc{node_mode_from_name(a.mode), a.feature_dim, a.gcn_layers, a.threshold};
    PatchRenderer renderer;
    if (mc.mode == NodeMode::Patch) renderer = render_patch;

    TrainResult result = train(scenes, prior, mc, a.cfg, renderer, [](const EpochStats& e) {
        std::cout << "epoch " << e.epoch << " loss " << e.loss << " val_acc " << e.val_acc
                  << "\n";
    });
    if (result.diverged)
        std::cout << "training diverged; keeping the last finite snapshot\n";
    if (result.skipped_scenes)
        std::cout << result.skipped_scenes << " scenes had no candidate pairs\n";

    atomic_write_text(a.out, save_checkpoint(result.net));
    ordered_json c = train_config_json(a);
    write_meta(a.out, "train", c, {a.scenes, a.prior});
    if (!a.report.empty()) {
        atomic_write_text(a.report, history_to_jsonl(result.history));
        write_meta(a.report, "train", c, {a.scenes, a.prior});
    }
    std::cout << "wrote checkpoint -> " << a.out << "\n";
}

// ---- predict ----

struct PredictArgs {
    std::string scenes;
    std::string out;
    std::string model;
    std::string prior;
    std::string dump_graph;
    bool baseline = false;
    bool threshold_set = false;
    double threshold = 0.5;
    double mask_tau = 0.02;
    double edge_epsilon = 1e-3;
    std::size_t threads = 1;
};

void run_predict(const PredictArgs& a) {
    std::vector<Scene> scenes = load_scenes(a.scenes);
    std::vector<OwnershipPrediction> preds(scenes.size());
    ordered_json c{{"scenes", a.scenes},
                   {"baseline", a.baseline},
                   {"mask_tau", a.mask_tau},
                   {"threads", a.threads}};
    std::vector<std::string> inputs{a.scenes};

    if (a.baseline) {
        parallel_for(scenes.size(), a.threads,
                     [&](std::size_t i) { preds[i] = logic_assign(scenes[i], a.mask_tau); });
    } else {
        if (a.model.empty() || a.prior.empty())
            throw UsageError("predict needs --model and --prior unless --baseline is given");
        RelNet net = load_checkpoint(read_text_file(a.model), a.model);
        PriorModel prior = prior_from_json(read_text_file(a.prior), a.prior);
        double threshold = a.threshold_set ? a.threshold : net.config.threshold;
        PatchRenderer renderer;
        if (net.config.mode == NodeMode::Patch) renderer = render_patch;
        GraphConfig gc{a.edge_epsilon, a.mask_tau};

        std::vector<std::string> graph_dump(a.dump_graph.empty() ? 0 : scenes.size());
        parallel_for(scenes.size(), a.threads, [&](std::size_t i) {
            RelGraph g = build_graph(scenes[i], prior, gc);
            std::vector<Tensor> in =
                make_node_inputs(scenes[i], g, net.config.mode, renderer);
            SceneForward fwd = forward_scene(net, g, in);
            preds[i] = match_pairs(g, fwd.embeddings, threshold);
            if (!graph_dump.empty()) graph_dump[i] = graph_to_json(g);
        });
        c["model"] = a.model;
        c["prior"] = a.prior;
        c["threshold"] = threshold;
        c["edge_epsilon"] = a.edge_epsilon;
        inputs.push_back(a.model);
        inputs.push_back(a.prior);
        if (!a.dump_graph.empty()) {
            std::string all;
            for (const std::string& line : graph_dump) all += line + "\n";
            atomic_write_text(a.dump_graph, all);
            write_meta(a.dump_graph, "predict", c, inputs);
        }
    }

    atomic_write_text(a.out, predictions_to_jsonl(preds));
    write_meta(a.out, "predict", c, inputs);
    std::cout << "wrote " << preds.size() << " predictions -> " << a.out << "\n";
}

// ---- eval ----

struct EvalArgs {
    std::vector<std::string> splits; // name=scenes.jsonl:predictions.jsonl
    std::string out;
};

void run_eval(const EvalArgs& a) {
    EvalReport report;
    std::vector<std::string> inputs;
    for (const std::string& spec : a.splits) {
        auto eq = spec.find('=');
        auto colon = spec.find(':', eq == std::string::npos ? 0 : eq);
        if (eq == std::string::npos || colon == std::string::npos || eq == 0)
            throw UsageError("--split wants name=scenes.jsonl:predictions.jsonl, got '" +
                             spec + "'");
        std::string name = spec.substr(0, eq);
        std::string scenes_path = spec.substr(eq + 1, colon - eq - 1);
        std::string preds_path = spec.substr(colon + 1);
        if (report.count(name))
            throw UsageError("duplicate split name '" + name + "'");
        std::vector<Scene> scenes = load_scenes(scenes_path);
        std::vector<OwnershipPrediction> preds =
            predictions_from_jsonl(read_text_file(preds_path), preds_path);
        report[name] = score_predictions(scenes, preds);
        inputs.push_back(scenes_path);
        inputs.push_back(preds_path);
    }
    atomic_write_text(a.out, report_to_json(report));
    write_meta(a.out, "eval", ordered_json{{"splits", a.splits}}, inputs);
    for (const auto& [name, s] : report) {
        std::printf("%-8s acc %.4f  precision %.4f  recall %.4f  (%zu/%zu labeled)\n",
                    name.c_str(), s.assignment_accuracy, s.pair_precision, s.pair_recall,
                    s.correct, s.labeled);
    }
    std::cout << "wrote report -> " << a.out << "\n";
}

// ---- compare ----

struct CompareArgs {
    std::string baseline;
    std::string model;
    std::string out;
};

void run_compare(const CompareArgs& a) {
    EvalReport base = report_from_json(read_text_file(a.baseline), a.baseline);
    EvalReport model = report_from_json(read_text_file(a.model), a.model);
    std::vector<ComparisonRow> rows = compare_reports(base, model);
    std::cout << comparison_text(rows);
    if (!a.out.empty()) {
        atomic_write_text(a.out, comparison_to_json(rows));
        write_meta(a.out, "compare", ordered_json{{"baseline", a.baseline}, {"model", a.model}},
                   {a.baseline, a.model});
    }
}

// ---- render ----

struct RenderArgs {
    std::string scenes;
    std::string preds;
    std::string out_dir;
    std::size_t limit = 0;
    std::size_t threads = 1;
};

void run_render(const RenderArgs& a) {
    std::vector<Scene> scenes = load_scenes(a.scenes);
    std::map<std::string, OwnershipPrediction> by_id;
    if (!a.preds.empty()) {
        for (OwnershipPrediction& p : predictions_from_jsonl(read_text_file(a.preds), a.preds))
            by_id[p.image_id] = std::move(p);
    }
    if (a.limit > 0 && scenes.size() > a.limit) scenes.resize(a.limit);
    fs::create_directories(a.out_dir);
    parallel_for(scenes.size(), a.threads, [&](std::size_t i) {
        auto it = by_id.find(scenes[i].image_id);
        const OwnershipPrediction* pred = it == by_id.end() ? nullptr : &it->second;
        atomic_write_text(fs::path(a.out_dir) / (scenes[i].image_id + ".svg"),
                          scene_to_svg(scenes[i], pred));
    });
    ordered_json c{{"scenes", a.scenes},
                   {"predictions", a.preds},
                   {"limit", a.limit},
                   {"threads", a.threads}};
    std::vector<std::string> inputs{a.scenes};
    if (!a.preds.empty()) inputs.push_back(a.preds);
    write_meta(fs::path(a.out_dir) / "_render", "render", c, inputs);
    std::cout << "wrote " << scenes.size() << " svg files -> " << a.out_dir << "\n";
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"wheel-to-vehicle ownership pipeline"};
    app.set_version_flag("--version", std::string("wheelrel ") + kVersion);
    app.set_config("--config", "", "key=value defaults, one [section] per subcommand");
    app.require_subcommand(1);

    GenArgs gen;
    auto* g = app.add_subcommand("gen", "generate synthetic scenes (JSONL)");
    g->add_option("--out", gen.out, "output scenes file")->required();
    g->add_option("--n", gen.cfg.n_scenes, "number of scenes")->capture_default_str();
    g->add_option("--difficulty", gen.difficulty, "easy|hard|mixed")->capture_default_str();
    g->add_option("--seed", gen.cfg.seed, "generator seed")->capture_default_str();
    g->add_option("--width", gen.cfg.width, "image width")->capture_default_str();
    g->add_option("--height", gen.cfg.height, "image height")->capture_default_str();
    g->add_option("--overlap-rate", gen.cfg.overlap_rate,
                  "fraction of scenes forced to hold a doubly-contained wheel")
        ->capture_default_str();
    g->add_option("--easy-min", gen.cfg.easy_min, "min vehicles, easy")->capture_default_str();
    g->add_option("--easy-max", gen.cfg.easy_max, "max vehicles, easy")->capture_default_str();
    g->add_option("--hard-min", gen.cfg.hard_min, "min vehicles, hard")->capture_default_str();
    g->add_option("--hard-max", gen.cfg.hard_max, "max vehicles, hard")->capture_default_str();
    g->callback([&] { run_gen(gen); });

    FitPriorArgs fp;
    auto* f = app.add_subcommand("fit-prior", "fit the Gaussian-mixture geometric prior");
    f->add_option("--scenes", fp.scenes, "labeled scenes (JSONL)")->required();
    f->add_option("--out", fp.out, "output prior JSON")->required();
    f->add_option("--k-wv", fp.k_wv, "components, wheel-vehicle mixture")
        ->capture_default_str();
    f->add_option("--k-ww", fp.k_ww, "components, wheel-wheel mixture")->capture_default_str();
    f->add_option("--seed", fp.seed, "EM seed")->capture_default_str();
    f->add_option("--histogram", fp.histogram, "also dump a 64-bin log-ratio histogram JSON");
    f->callback([&] { run_fit_prior(fp); });

    TrainArgs tr;
    auto* t = app.add_subcommand("train", "train the relation network");
    t->add_option("--scenes", tr.scenes, "training scenes (JSONL)")->required();
    t->add_option("--prior", tr.prior, "fitted prior JSON")->required();
    t->add_option("--out", tr.out, "output checkpoint JSON")->required();
    t->add_option("--report", tr.report, "per-epoch history (JSONL)");
    t->add_option("--mode", tr.mode, "geometric|patch node inputs")->capture_default_str();
    t->add_option("--feature-dim", tr.feature_dim, "embedding width")->capture_default_str();
    t->add_option("--gcn-layers", tr.gcn_layers, "message-passing rounds")
        ->capture_default_str();
    t->add_option("--threshold", tr.threshold, "cosine threshold stored in the checkpoint")
        ->capture_default_str();
    t->add_option("--edge-epsilon", tr.cfg.edge_epsilon, "prune prior edges below this weight")
        ->capture_default_str();
    t->add_option("--epochs", tr.cfg.epochs, "training epochs")->capture_default_str();
    t->add_option("--lr", tr.cfg.learning_rate, "Adam learning rate")->capture_default_str();
    t->add_option("--neg-weight", tr.cfg.neg_weight, "loss weight of negative pairs")
        ->capture_default_str();
    t->add_option("--neg-downsample", tr.cfg.neg_downsample_ratio,
                  "negatives kept per positive (<=0 keeps all)")
        ->capture_default_str();
    t->add_option("--mask-tau", tr.cfg.mask_tau, "small-object mask threshold")
        ->capture_default_str();
    t->add_option("--seed", tr.cfg.seed, "training seed")->capture_default_str();
    t->add_option("--batch-scenes", tr.cfg.batch_scenes, "scenes per optimizer step")
        ->capture_default_str();
    t->add_option("--val-fraction", tr.cfg.val_fraction, "held-out fraction for val accuracy")
        ->capture_default_str();
    t->callback([&] { run_train(tr); });

    PredictArgs pr;
    auto* p = app.add_subcommand("predict", "predict wheel ownership for scenes");
    p->add_option("--scenes", pr.scenes, "input scenes (JSONL)")->required();
    p->add_option("--out", pr.out, "output predictions (JSONL)")->required();
    p->add_flag("--baseline", pr.baseline, "use the IoU logic baseline instead of a model");
    p->add_option("--model", pr.model, "checkpoint JSON (learned mode)");
    p->add_option("--prior", pr.prior, "prior JSON (learned mode)");
    auto* thr = p->add_option("--threshold", pr.threshold,
                              "cosine threshold (default: checkpoint value)");
    p->add_option("--mask-tau", pr.mask_tau, "small-object mask threshold")
        ->capture_default_str();
    p->add_option("--edge-epsilon", pr.edge_epsilon, "prune prior edges below this weight")
        ->capture_default_str();
    p->add_option("--threads", pr.threads, "worker threads (1 = bit-reproducible order)")
        ->capture_default_str();
    p->add_option("--dump-graph", pr.dump_graph, "also dump built graphs (JSONL)");
    p->callback([&] {
        pr.threshold_set = thr->count() > 0;
        run_predict(pr);
    });

    EvalArgs ev;
    auto* e = app.add_subcommand("eval", "score predictions against labeled scenes");
    e->add_option("--split", ev.splits, "name=scenes.jsonl:predictions.jsonl (repeatable)")
        ->required();
    e->add_option("--out", ev.out, "output report JSON")->required();
    e->callback([&] { run_eval(ev); });

    CompareArgs cp;
    auto* c = app.add_subcommand("compare", "compare two eval reports (baseline vs model)");
    c->add_option("--baseline", cp.baseline, "baseline report JSON")->required();
    c->add_option("--model", cp.model, "model report JSON")->required();
    c->add_option("--out", cp.out, "optional comparison JSON");
    c->callback([&] { run_compare(cp); });

    RenderArgs rn;
    auto* r = app.add_subcommand("render", "render scenes (and predictions) as SVG");
    r->add_option("--scenes", rn.scenes, "input scenes (JSONL)")->required();
    r->add_option("--preds", rn.preds, "predictions to overlay (JSONL)");
    r->add_option("--out-dir", rn.out_dir, "output directory")->required();
    r->add_option("--limit", rn.limit, "render at most this many scenes (0 = all)")
        ->capture_default_str();
    r->add_option("--threads", rn.threads, "worker threads")->capture_default_str();
    r->callback([&] { run_render(rn); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        int rc = app.exit(err);
        return rc == 0 ? 0 : 2;
    } catch (const UsageError& err) {
        std::cerr << "usage error: " << err.what() << "\n";
        return 2;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 1;
    }
    return 0;
}
