#include "physvid/config.hpp"

#include <fstream>

namespace physvid {

using nlohmann::json;

std::vector<std::string> preset_names() {
    return {"spring", "pendulum-mask", "pendulum-synth", "real-pendulum", "block", "ball"};
}

json preset_json(const std::string& name) {
    json j;
    if (name == "spring") {
        j["scene"] = {{"family", "spring"}, {"objects", 2}, {"background", true}, {"homography", false},
                      {"bg_field", {{"layers", 6}, {"width", 64}, {"fourier", 64}, {"sigma", 5.0}}},
                      {"obj_field", {{"layers", 6}, {"width", 64}, {"fourier", 64}, {"sigma", 2.2}}}};
        j["train"] = {{"epochs", 1200}, {"lr_mlp", 1e-3}, {"lr_param", 5e-3},
                      {"decay_beta", 0.99954}, {"decay_step", 50},
                      {"curriculum_start", 2}, {"curriculum_interval", 30}, {"data_term", "photo"}};
        j["loss"] = {{"reg", 0.0}, {"reg_epoch", -1}, {"seg0", 0.01}, {"seg_decay", 0.2},
                     {"seg_interval", 100}, {"attach", 0.05}, {"outside", 1.0}};
        j["init"] = {{"spring_k", 1.5}};
    } else if (name == "pendulum-mask") {
        j["scene"] = {{"family", "pendulum"}, {"objects", 1}, {"background", false}, {"homography", false},
                      {"obj_field", {{"layers", 6}, {"width", 64}, {"fourier", 64}, {"sigma", 0.1}}}};
        j["train"] = {{"epochs", 2000}, {"lr_mlp", 5e-3}, {"lr_param", 1e-2},
                      {"decay_beta", 1.0},
                      {"curriculum_start", 5}, {"curriculum_interval", 20}, {"data_term", "bce"}};
        j["loss"] = {{"reg", 0.0}, {"reg_epoch", -1}};
        j["init"] = {{"length", 1.5}, {"damping", 0.25}};
    } else if (name == "pendulum-synth") {
        j["scene"] = {{"family", "pendulum"}, {"objects", 1}, {"background", true}, {"homography", false},
                      {"bg_field", {{"layers", 8}, {"width", 512}, {"fourier", 256}, {"sigma", 30.0}}},
                      {"obj_field", {{"layers", 8}, {"width", 128}, {"fourier", 256}, {"sigma", 10.0}}}};
        j["train"] = {{"epochs", 1200}, {"lr_mlp", 9e-4}, {"lr_param", 1e-3},
                      {"decay_beta", 0.9}, {"decay_step", 25},
                      {"curriculum_start", 5}, {"curriculum_interval", 10}, {"data_term", "photo"}};
        j["loss"] = {{"reg", 5e-4}, {"reg_epoch", 400}};
        j["init"] = {{"length", 1.9}, {"damping", 0.6}};
    } else if (name == "real-pendulum") {
        j["scene"] = {{"family", "pendulum"}, {"objects", 1}, {"background", true}, {"homography", true},
                      {"bg_field", {{"layers", 8}, {"width", 512}, {"fourier", 256}, {"sigma", 50.0}}},
                      {"obj_field", {{"layers", 8}, {"width", 128}, {"fourier", 128}, {"sigma", 15.0}}}};
        j["train"] = {{"epochs", 1200}, {"lr_mlp", 9e-4}, {"lr_param", 1e-3},
                      {"decay_beta", 0.9}, {"decay_step", 25},
                      {"curriculum_start", 5}, {"curriculum_interval", 20}, {"data_term", "photo"}};
        j["loss"] = {{"reg", 1e-3}, {"reg_epoch", 100}};
        j["init"] = {{"length", 0.4}, {"damping", 0.5}};
    } else if (name == "block") {
        j["scene"] = {{"family", "block"}, {"objects", 1}, {"background", true}, {"homography", true},
                      {"bg_field", {{"layers", 8}, {"width", 512}, {"fourier", 256}, {"sigma", 30.0}}},
                      {"obj_field", {{"layers", 8}, {"width", 128}, {"fourier", 128}, {"sigma", 15.0}}}};
        j["train"] = {{"epochs", 1200}, {"lr_mlp", 9e-4}, {"lr_param", 1e-3},
                      {"decay_beta", 0.9}, {"decay_step", 25},
                      {"curriculum_start", 5}, {"curriculum_interval", 10}, {"data_term", "photo"}};
        j["loss"] = {{"reg", 1e-3}, {"reg_epoch", 100}};
        j["init"] = {{"mu", 0.0}};
    } else if (name == "ball") {
        j["scene"] = {{"family", "ball"}, {"objects", 1}, {"background", true}, {"homography", true},
                      {"bg_field", {{"layers", 8}, {"width", 512}, {"fourier", 256}, {"sigma", 30.0}}},
                      {"obj_field", {{"layers", 8}, {"width", 128}, {"fourier", 128}, {"sigma", 5.0}}}};
        j["train"] = {{"epochs", 1200}, {"lr_mlp", 9e-4}, {"lr_param", 1e-3},
                      {"decay_beta", 0.9}, {"decay_step", 25},
                      {"curriculum_start", 8}, {"curriculum_interval", 10}, {"data_term", "photo"}};
        j["loss"] = {{"reg", 1e-3}, {"reg_epoch", 100}};
        j["init"] = {};
    } else {
        throw ConfigError("unknown preset '" + name + "'");
    }
    return j;
}

namespace {

FieldConfig field_from_json(const json& j, FieldConfig base) {
    if (j.contains("layers")) base.layers = j.at("layers").get<int>();
    if (j.contains("width")) base.width = j.at("width").get<int>();
    if (j.contains("fourier")) base.fourier = j.at("fourier").get<int>();
    if (j.contains("sigma")) base.sigma = j.at("sigma").get<double>();
    return base;
}

template <typename T>
void get_if(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

RunConfig config_from_json(const json& j) {
    RunConfig cfg;
    try {
        get_if(j, "preset", cfg.preset);
        get_if(j, "dataset", cfg.dataset);
        get_if(j, "seed", cfg.seed);
        get_if(j, "threads", cfg.threads);
        get_if(j, "fps", cfg.fps);
        get_if(j, "outside_stride", cfg.outside_stride);

        if (j.contains("scene")) {
            const json& s = j.at("scene");
            if (s.contains("family"))
                cfg.scene.family = family_from_string(s.at("family").get<std::string>());
            get_if(s, "background", cfg.scene.use_background);
            get_if(s, "homography", cfg.scene.use_homography);
            if (s.contains("objects")) cfg.scene.n_objects = s.at("objects").get<int>();
            if (s.contains("bg_field"))
                cfg.scene.background = field_from_json(s.at("bg_field"), cfg.scene.background);
            if (s.contains("obj_field"))
                cfg.scene.object = field_from_json(s.at("obj_field"), cfg.scene.object);
        }
        if (j.contains("train")) {
            const json& t = j.at("train");
            get_if(t, "epochs", cfg.train.epochs);
            get_if(t, "lr_mlp", cfg.train.lr_mlp);
            get_if(t, "lr_param", cfg.train.lr_param);
            get_if(t, "decay_beta", cfg.train.decay_beta);
            get_if(t, "decay_step", cfg.train.decay_step);
            get_if(t, "decay_physics", cfg.train.decay_physics);
            get_if(t, "batch", cfg.train.batch);
            get_if(t, "curriculum_start", cfg.train.curriculum_start);
            get_if(t, "curriculum_interval", cfg.train.curriculum_interval);
            get_if(t, "curriculum_unit", cfg.train.curriculum_unit);
            get_if(t, "substeps", cfg.train.substeps);
            get_if(t, "adam_beta1", cfg.train.adam_beta1);
            get_if(t, "adam_beta2", cfg.train.adam_beta2);
            get_if(t, "adam_eps", cfg.train.adam_eps);
            get_if(t, "data_term", cfg.train.data_term);
        }
        if (j.contains("loss")) {
            const json& l = j.at("loss");
            get_if(l, "photo", cfg.loss.photo);
            get_if(l, "reg", cfg.loss.reg);
            get_if(l, "reg_epoch", cfg.loss.reg_epoch);
            get_if(l, "seg0", cfg.loss.seg0);
            get_if(l, "seg_decay", cfg.loss.seg_decay);
            get_if(l, "seg_interval", cfg.loss.seg_interval);
            get_if(l, "attach", cfg.loss.attach);
            get_if(l, "outside", cfg.loss.outside);
        }
        if (j.contains("init")) {
            const json& i = j.at("init");
            get_if(i, "length", cfg.init.length);
            get_if(i, "damping", cfg.init.damping);
            get_if(i, "spring_k", cfg.init.spring_k);
            get_if(i, "mu", cfg.init.mu);
            get_if(i, "scale", cfg.init.scale);
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad config: ") + e.what());
    }

    if (cfg.train.epochs < 0) throw ConfigError("train.epochs must be >= 0");
    if (cfg.train.batch < 1) throw ConfigError("train.batch must be >= 1");
    if (!(cfg.train.decay_beta > 0.0 && cfg.train.decay_beta <= 1.0))
        throw ConfigError("train.decay_beta must be in (0, 1]");
    if (cfg.train.curriculum_start < 1) throw ConfigError("train.curriculum_start must be >= 1");
    if (cfg.train.curriculum_interval < 1)
        throw ConfigError("train.curriculum_interval must be >= 1");
    if (cfg.train.substeps < 1) throw ConfigError("train.substeps must be >= 1");
    if (cfg.train.data_term != "photo" && cfg.train.data_term != "bce")
        throw ConfigError("train.data_term must be 'photo' or 'bce'");
    if (cfg.train.curriculum_unit != "steps" && cfg.train.curriculum_unit != "epochs")
        throw ConfigError("train.curriculum_unit must be 'steps' or 'epochs'");
    if (cfg.scene.n_objects < 1) throw ConfigError("scene.objects must be >= 1");
    if (cfg.train.data_term == "photo" && !cfg.scene.use_background)
        throw ConfigError("photometric training requires scene.background");
    return cfg;
}

json config_to_json(const RunConfig& cfg) {
    json j;
    j["preset"] = cfg.preset;
    j["dataset"] = cfg.dataset;
    j["seed"] = cfg.seed;
    j["threads"] = cfg.threads;
    j["fps"] = cfg.fps;
    j["outside_stride"] = cfg.outside_stride;
    j["scene"] = {{"family", family_to_string(cfg.scene.family)},
                  {"background", cfg.scene.use_background},
                  {"homography", cfg.scene.use_homography},
                  {"objects", cfg.scene.n_objects},
                  {"bg_field",
                   {{"layers", cfg.scene.background.layers},
                    {"width", cfg.scene.background.width},
                    {"fourier", cfg.scene.background.fourier},
                    {"sigma", cfg.scene.background.sigma}}},
                  {"obj_field",
                   {{"layers", cfg.scene.object.layers},
                    {"width", cfg.scene.object.width},
                    {"fourier", cfg.scene.object.fourier},
                    {"sigma", cfg.scene.object.sigma}}}};
    j["train"] = {{"epochs", cfg.train.epochs},
                  {"lr_mlp", cfg.train.lr_mlp},
                  {"lr_param", cfg.train.lr_param},
                  {"decay_beta", cfg.train.decay_beta},
                  {"decay_step", cfg.train.decay_step},
                  {"decay_physics", cfg.train.decay_physics},
                  {"batch", cfg.train.batch},
                  {"curriculum_start", cfg.train.curriculum_start},
                  {"curriculum_interval", cfg.train.curriculum_interval},
                  {"curriculum_unit", cfg.train.curriculum_unit},
                  {"substeps", cfg.train.substeps},
                  {"adam_beta1", cfg.train.adam_beta1},
                  {"adam_beta2", cfg.train.adam_beta2},
                  {"adam_eps", cfg.train.adam_eps},
                  {"data_term", cfg.train.data_term}};
    j["loss"] = {{"photo", cfg.loss.photo},
                 {"reg", cfg.loss.reg},
                 {"reg_epoch", cfg.loss.reg_epoch},
                 {"seg0", cfg.loss.seg0},
                 {"seg_decay", cfg.loss.seg_decay},
                 {"seg_interval", cfg.loss.seg_interval},
                 {"attach", cfg.loss.attach},
                 {"outside", cfg.loss.outside}};
    j["init"] = {{"length", cfg.init.length},
                 {"damping", cfg.init.damping},
                 {"spring_k", cfg.init.spring_k},
                 {"mu", cfg.init.mu},
                 {"scale", cfg.init.scale}};
    return j;
}

RunConfig run_config_from_json(json j, const std::vector<std::string>& overrides) {
    if (j.contains("preset")) {
        json base = preset_json(j.at("preset").get<std::string>());
        base.merge_patch(j);
        j = std::move(base);
    }
    for (const auto& kv : overrides) {
        auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw ConfigError("--set expects key=value, got '" + kv + "'");
        std::string key = kv.substr(0, eq);
        std::string val = kv.substr(eq + 1);
        json parsed;
        try {
            parsed = json::parse(val);
        } catch (const json::exception&) {
            parsed = val;  // plain string
        }
        json* at = &j;
        size_t pos = 0;
        while (true) {
            size_t dot = key.find('.', pos);
            std::string part = key.substr(pos, dot - pos);
            if (dot == std::string::npos) {
                (*at)[part] = parsed;
                break;
            }
            at = &(*at)[part];
            pos = dot + 1;
        }
    }
    return config_from_json(j);
}

RunConfig load_run_config(const std::filesystem::path& path,
                          const std::vector<std::string>& overrides) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config " + path.string());
    json j;
    try {
        is >> j;
    } catch (const json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return run_config_from_json(std::move(j), overrides);
}

uint64_t config_hash(const RunConfig& cfg) { return fnv1a64(config_to_json(cfg).dump()); }

}  // namespace physvid
