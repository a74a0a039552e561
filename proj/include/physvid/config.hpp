#pragma once

// Run configuration: one JSON file per run with named presets carrying the
// experiment defaults; --set key=value overrides dotted paths.

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "physvid/init.hpp"
#include "physvid/losses.hpp"
#include "physvid/scene.hpp"

namespace physvid {

struct TrainSection {
    int epochs = 1200;
    double lr_mlp = 9e-4;
    double lr_param = 1e-3;
    double decay_beta = 0.9;  // 1.0 disables decay
    int decay_step = 25;
    bool decay_physics = false;  // the physics group keeps its rate
    int batch = 65536;
    int curriculum_start = 5;
    int curriculum_interval = 10;
    std::string curriculum_unit = "steps";  // "steps" | "epochs"
    int substeps = 20;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    std::string data_term = "photo";  // "photo" | "bce"
};

struct RunConfig {
    std::string preset;
    std::string dataset;
    uint64_t seed = 1;
    int threads = 0;  // 0 keeps the library default
    double fps = 0.0; // fallback for rendering without a dataset
    TrainSection train;
    LossWeights loss;
    int outside_stride = 2;  // band sampling stride (spring outside loss)
    SceneConfig scene;
    InitDefaults init;
};

std::vector<std::string> preset_names();

nlohmann::json preset_json(const std::string& name);

RunConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const RunConfig& cfg);

// Load file, resolve "preset", apply --set overrides (key=value, values parsed
// as JSON scalars with string fallback).
RunConfig load_run_config(const std::filesystem::path& path,
                          const std::vector<std::string>& overrides);
RunConfig run_config_from_json(nlohmann::json j, const std::vector<std::string>& overrides);

// FNV-1a of the canonical (sorted-key) serialization.
uint64_t config_hash(const RunConfig& cfg);

}  // namespace physvid
