// physvid: recover interpretable physical parameters from a short video by
// fitting neural implicit appearance fields jointly with an ODE through a
// differentiable renderer.
//
// Subcommands: synth, fit, render, eval, edit. Exit codes: 0 success,
// 2 config error, 3 data error, 4 numerical failure.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>

#include "physvid/config.hpp"
#include "physvid/init.hpp"
#include "physvid/metrics.hpp"
#include "physvid/synthgen.hpp"
#include "physvid/training.hpp"

namespace fs = std::filesystem;
using namespace physvid;
using nlohmann::json;

namespace {

struct CommonArgs {
    std::string config_path;
    std::string dataset;
    std::string checkpoint;
    std::string out = ".";
    int64_t seed = -1;
    std::vector<std::string> sets;
    std::string frames;  // "a..b"
};

json load_json_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config " + path);
    json j;
    try {
        is >> j;
    } catch (const json::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
    return j;
}

std::pair<int, int> parse_frame_range(const std::string& spec, int max_count) {
    size_t dots = spec.find("..");
    if (dots == std::string::npos)
        throw ConfigError("--frames expects a..b, got '" + spec + "'");
    int a = 0, b = 0;
    try {
        a = std::stoi(spec.substr(0, dots));
        b = std::stoi(spec.substr(dots + 2));
    } catch (const std::exception&) {
        throw ConfigError("--frames expects integer bounds, got '" + spec + "'");
    }
    if (a < 0 || b < a) throw ConfigError("--frames range is empty");
    if (max_count > 0 && b >= max_count)
        throw DataError("--frames upper bound " + std::to_string(b) +
                        " exceeds available frames");
    return {a, b};
}

void write_json(const fs::path& path, const json& j) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw DataError("cannot write " + path.string());
    os << j.dump(2) << "\n";
}

struct LoadedCheckpoint {
    RunConfig cfg;
    SceneModel scene;
    Checkpoint ck;
};

LoadedCheckpoint load_scene(const std::string& path) {
    Checkpoint ck = load_checkpoint(path);
    json j;
    try {
        j = json::parse(ck.config_json);
    } catch (const json::exception& e) {
        throw DataError("checkpoint config: " + std::string(e.what()));
    }
    RunConfig cfg = run_config_from_json(j, {});
    SceneModel scene = scene_from_checkpoint(cfg.scene, ck);
    return {std::move(cfg), std::move(scene), std::move(ck)};
}

// Resolves render times from --dataset (preferred) or --frames + config fps.
struct RenderPlan {
    double t0 = 0.0;
    std::vector<double> times;
    std::vector<int> labels;  // output frame numbers
    PixelGrid grid;
};

RenderPlan plan_render(const RunConfig& cfg, const CommonArgs& args, int fallback_w,
                       int fallback_h) {
    RenderPlan plan;
    if (!args.dataset.empty()) {
        FrameDataset data = FrameDataset::load(args.dataset);
        std::vector<int> train = data.train_indices();
        plan.t0 = data.times[static_cast<size_t>(*std::min_element(train.begin(), train.end()))];
        int lo = 0, hi = data.frame_count() - 1;
        if (!args.frames.empty())
            std::tie(lo, hi) = parse_frame_range(args.frames, data.frame_count());
        for (int i = lo; i <= hi; ++i) {
            plan.times.push_back(data.times[static_cast<size_t>(i)]);
            plan.labels.push_back(i);
        }
        plan.grid = data.grid;
    } else {
        if (args.frames.empty())
            throw ConfigError("render/edit needs --dataset or --frames with fps in the config");
        if (!(cfg.fps > 0.0))
            throw ConfigError("--frames without --dataset requires a positive fps in the config");
        auto [lo, hi] = parse_frame_range(args.frames, -1);
        plan.t0 = lo / cfg.fps;
        for (int i = lo; i <= hi; ++i) {
            plan.times.push_back(i / cfg.fps);
            plan.labels.push_back(i);
        }
        plan.grid = PixelGrid(fallback_w, fallback_h);
    }
    return plan;
}

void write_rendered(const fs::path& out, const std::vector<RenderedFrame>& frames,
                    const std::vector<int>& labels) {
    fs::create_directories(out / "frames");
    for (size_t k = 0; k < frames.front().occupancy.size(); ++k)
        fs::create_directories(out / "masks" / ("obj" + std::to_string(k)));
    for (size_t i = 0; i < frames.size(); ++i) {
        std::string name = frame_name(labels[i]);
        write_ppm(out / "frames" / (name + ".ppm"), frames[i].rgb);
        for (size_t k = 0; k < frames[i].occupancy.size(); ++k) {
            ImageGray hard = frames[i].occupancy[k];
            for (auto& v : hard.data) v = v >= 0.5 ? 1.0 : 0.0;
            write_pgm(out / "masks" / ("obj" + std::to_string(k)) / (name + ".pgm"), hard);
        }
    }
}

int cmd_synth(const CommonArgs& args) {
    json j = load_json_file(args.config_path);
    for (const auto& kv : args.sets) {
        auto eq = kv.find('=');
        if (eq == std::string::npos) throw ConfigError("--set expects key=value");
        json parsed;
        try {
            parsed = json::parse(kv.substr(eq + 1));
        } catch (const json::exception&) {
            parsed = kv.substr(eq + 1);
        }
        j[kv.substr(0, eq)] = parsed;
    }
    Scenario sc = scenario_from_json(j);
    if (args.seed >= 0) sc.seed = static_cast<uint64_t>(args.seed);
    fs::create_directories(args.out);
    generate(sc, args.out);
    std::printf("dataset written to %s (%d frames at %gx%g)\n", args.out.c_str(), sc.frames,
                static_cast<double>(sc.width), static_cast<double>(sc.height));
    return 0;
}

int cmd_fit(const CommonArgs& args) {
    RunConfig cfg = load_run_config(args.config_path, args.sets);
    if (args.seed >= 0) cfg.seed = static_cast<uint64_t>(args.seed);
    if (!args.dataset.empty()) cfg.dataset = args.dataset;
    if (cfg.dataset.empty()) throw ConfigError("fit needs a dataset (--dataset or config)");
    if (cfg.threads > 0) set_num_threads(cfg.threads);

    FrameDataset data = FrameDataset::load(cfg.dataset);
    fs::create_directories(args.out);

    Rng rng(cfg.seed);
    SceneModel scene = SceneModel::create(cfg.scene, rng);
    initialize_scene(scene, data, data.train_indices(), cfg.init);

    FitResult result = fit(data, scene, cfg, args.out);
    save_checkpoint(fs::path(args.out) / "checkpoint.pvk", result.checkpoint);

    json hist = json::array();
    for (const auto& r : result.history) {
        hist.push_back({{"epoch", r.epoch},
                        {"loss", r.loss},
                        {"data", r.data},
                        {"reg", r.reg},
                        {"seg", r.seg},
                        {"attach", r.attach},
                        {"outside", r.outside},
                        {"lr_mlp", r.lr_mlp},
                        {"lr_param", r.lr_param},
                        {"active_frames", r.active_frames},
                        {"physics", r.physics}});
    }
    write_json(fs::path(args.out) / "history.json", hist);

    std::vector<int> eval_idx = data.test_indices();
    if (eval_idx.empty()) eval_idx = data.train_indices();
    MetricsReport rep = evaluate(scene, data, eval_idx, cfg.train.substeps,
                                 to_hex(config_hash(cfg)));
    write_json(fs::path(args.out) / "metrics.json", rep.to_json());
    std::fputs(rep.summary().c_str(), stdout);
    std::printf("checkpoint written to %s\n",
                (fs::path(args.out) / "checkpoint.pvk").c_str());
    return 0;
}

int cmd_render(const CommonArgs& args, bool is_edit) {
    LoadedCheckpoint lc = load_scene(args.checkpoint);
    if (lc.cfg.threads > 0) set_num_threads(lc.cfg.threads);
    if (is_edit)
        for (const auto& kv : args.sets) {
            auto eq = kv.find('=');
            if (eq == std::string::npos) throw ConfigError("--set expects key=value");
            double v = 0;
            try {
                v = std::stod(kv.substr(eq + 1));
            } catch (const std::exception&) {
                throw ConfigError("edit --set expects numeric values, got '" + kv + "'");
            }
            lc.scene.set_named_value(kv.substr(0, eq), v);
        }

    int fw = 64, fh = 64;
    if (!args.dataset.empty()) {
        // grid comes from the dataset inside plan_render
    }
    RenderPlan plan = plan_render(lc.cfg, args, fw, fh);
    std::vector<RenderedFrame> frames =
        render_sequence(lc.scene, plan.t0, plan.times, lc.cfg.train.substeps, plan.grid);
    fs::create_directories(args.out);
    write_rendered(args.out, frames, plan.labels);
    std::printf("%zu frames rendered to %s\n", frames.size(), args.out.c_str());
    return 0;
}

int cmd_eval(const CommonArgs& args) {
    LoadedCheckpoint lc = load_scene(args.checkpoint);
    if (lc.cfg.threads > 0) set_num_threads(lc.cfg.threads);
    if (args.dataset.empty()) throw ConfigError("eval needs --dataset");
    FrameDataset data = FrameDataset::load(args.dataset);
    std::vector<int> idx = data.test_indices();
    if (!args.frames.empty()) {
        auto [lo, hi] = parse_frame_range(args.frames, data.frame_count());
        idx.clear();
        for (int i = lo; i <= hi; ++i) idx.push_back(i);
    }
    if (idx.empty()) idx = data.train_indices();
    MetricsReport rep =
        evaluate(lc.scene, data, idx, lc.cfg.train.substeps, to_hex(config_hash(lc.cfg)));
    fs::create_directories(args.out);
    write_json(fs::path(args.out) / "metrics.json", rep.to_json());
    std::fputs(rep.summary().c_str(), stdout);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"physical parameter inference from short videos"};
    app.require_subcommand(1);

    CommonArgs args;
    auto add_common = [&](CLI::App* sub, bool needs_config, bool needs_checkpoint) {
        if (needs_config)
            sub->add_option("--config", args.config_path, "run/scenario config file")
                ->required();
        if (needs_checkpoint)
            sub->add_option("--checkpoint", args.checkpoint, "checkpoint file")->required();
        sub->add_option("--dataset", args.dataset, "dataset directory");
        sub->add_option("--out", args.out, "output directory");
        sub->add_option("--seed", args.seed, "seed override");
        sub->add_option("--set", args.sets, "key=value override (repeatable)");
        sub->add_option("--frames", args.frames, "frame index range a..b");
    };

    CLI::App* synth = app.add_subcommand("synth", "generate a synthetic dataset");
    add_common(synth, true, false);
    CLI::App* fit_cmd = app.add_subcommand("fit", "fit a scene to a dataset");
    add_common(fit_cmd, true, false);
    CLI::App* render = app.add_subcommand("render", "render frames from a checkpoint");
    add_common(render, false, true);
    CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint against a dataset");
    add_common(eval_cmd, false, true);
    CLI::App* edit = app.add_subcommand("edit", "re-render with modified physical parameters");
    add_common(edit, false, true);

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth->parsed()) return cmd_synth(args);
        if (fit_cmd->parsed()) return cmd_fit(args);
        if (render->parsed()) return cmd_render(args, false);
        if (eval_cmd->parsed()) return cmd_eval(args);
        if (edit->parsed()) return cmd_render(args, true);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 3;
    } catch (const NumericError& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return 4;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
