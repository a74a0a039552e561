#pragma once

// SceneModel: every learnable quantity of a run (appearance MLPs, physical
// parameters and initial state, transform extras, homography) plus the
// checkpoint representation used by fit/render/eval/edit.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "physvid/dynamics.hpp"
#include "physvid/fields.hpp"
#include "physvid/geometry.hpp"

namespace physvid {

enum class ParamGroup { Mlp, Physics };

struct SceneParam {
    std::string name;
    ParamGroup group;
    Tensor tensor;
};

struct FieldConfig {
    int layers = 6;
    int width = 64;
    int fourier = 64;
    double sigma = 5.0;
};

struct SceneConfig {
    Family family = Family::Pendulum;
    bool use_background = true;
    bool use_homography = false;
    int n_objects = 1;
    FieldConfig background;
    FieldConfig object;
};

class SceneModel {
public:
    // Samples Fourier matrices and MLP weights from rng; physics parameters
    // start at neutral values and are overwritten by the initializer.
    static SceneModel create(const SceneConfig& cfg, Rng& rng);

    // Stable-order registry of every learnable tensor.
    std::vector<SceneParam> params();

    // Positive-space physics accessors (record softplus ops when on tape).
    RhsParams rhs_params() const;
    Tensor scale() const;  // block/ball pixel-scale, positive

    Trajectory simulate(const std::vector<double>& times, int substeps) const;

    // Global points -> local coordinates of object k given the family state.
    Tensor object_local(int k, const Tensor& state, const Tensor& pts_global) const;

    // Convenience setters used by the initializer and `edit`.
    void set_positive(Tensor& raw, double value);
    void set_named_value(const std::string& key, double value);
    double get_named_value(const std::string& key) const;

    SceneConfig cfg;

    std::optional<BackgroundField> bg;
    std::vector<ObjectField> objects;

    Tensor z0;  // unconstrained state at t0

    // family-specific raw parameters (softplus domain where positive)
    Tensor length_raw, damping_raw;     // pendulum
    Tensor k_raw, l_rest_raw;           // spring
    Tensor alpha, mu_raw;               // block (alpha unconstrained)
    Tensor scale_raw;                   // block, ball
    Tensor pivot;                       // pendulum
    Tensor track_origin, track_angle;   // block
    std::vector<Tensor> attach;         // spring, per object
    Homography hom;                     // shared per scene
};

// Checkpoint: versioned binary dump of all parameters, Adam moments, step
// counter and the resolved run-config JSON (which embeds the config hash).
struct Checkpoint {
    std::string config_json;
    int64_t step = 0;
    int64_t epoch = 0;

    struct Entry {
        std::string name;
        int group = 0;
        Shape shape;
        std::vector<double> values;
        std::vector<double> adam_m;
        std::vector<double> adam_v;
    };
    struct Fixed {
        std::string name;
        Shape shape;
        std::vector<double> values;
    };
    std::vector<Entry> entries;
    std::vector<Fixed> fixed;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Scene <-> checkpoint glue. Adam moments are supplied/returned by the trainer.
Checkpoint scene_to_checkpoint(SceneModel& scene, const std::string& config_json);
SceneModel scene_from_checkpoint(const SceneConfig& cfg, const Checkpoint& ck);

}  // namespace physvid
