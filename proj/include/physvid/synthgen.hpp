#pragma once

// Ground-truth scenario generator: simulates a dynamics family with known
// parameters, rasterizes a textured sprite over a procedural background via
// the exact inverse of the geometry transforms, and emits frames + masks +
// timestamps + a ground-truth parameter file.

#include <filesystem>
#include <json.hpp>
#include <string>
#include <vector>

#include "physvid/dataset.hpp"
#include "physvid/geometry.hpp"

namespace physvid {

enum class BackgroundKind { Checker, Noise, Flat };

struct SpriteSpec {
    // pendulum: rod from the local origin along +y plus a bob disk
    double rod_length = 0.9;
    double rod_width = 0.14;
    double bob_radius = 0.22;
    // spring blobs / ball disks
    double blob_radius = 0.24;
    // block rectangle
    double block_w = 0.5, block_h = 0.3;
};

struct Scenario {
    Family family = Family::Pendulum;
    int width = 64, height = 64;
    double fps = 10.0;
    int frames = 41;
    uint64_t seed = 1;
    bool mask_only = false;
    int substeps = 100;  // truth integration accuracy

    BackgroundKind background = BackgroundKind::Noise;
    double noise_cells = 6.0;  // base lattice frequency / checker cells
    SpriteSpec sprite;

    std::map<std::string, double> params;  // family parameters (positive space)
    std::vector<double> z0;
    std::vector<double> pivot;         // pendulum
    std::vector<double> track_origin;  // block
    double track_angle = 0.0;          // block
    double scale = 0.1;                // block/ball
    std::array<double, 9> homography = {1, 0, 0, 0, 1, 0, 0, 0, 1};

    std::vector<int> train_indices, test_indices;
};

Scenario scenario_from_json(const nlohmann::json& j);
nlohmann::json scenario_to_json(const Scenario& s);

// A sprite: texture + silhouette alpha on its own texel grid covering the
// local box [x0,x1] x [y0,y1].
struct Sprite {
    ImageRGB texture;
    ImageGray alpha;
    double x0 = 0, y0 = 0, x1 = 1, y1 = 1;

    // bilinear sample at local coordinates; alpha 0 outside the box
    void sample(double lx, double ly, double rgb[3], double& a) const;
};

Sprite build_sprite(const Scenario& sc, int object_index, Rng& rng);
ImageRGB build_background(const Scenario& sc, Rng& rng);

struct SpriteRaster {
    ImageRGB rgb;     // premultiplied contribution is NOT applied; plain texture colors
    ImageGray alpha;  // [0,1]
    ImageGray mask;   // alpha >= 0.5
};

// Per-pixel inverse-transform sampling: local_xy holds the local coordinates
// of every grid pixel (2 doubles per pixel, row-major).
SpriteRaster rasterize_sprite(const Sprite& sprite, const std::vector<double>& local_xy,
                              const PixelGrid& grid);

// Simulates, rasterizes and writes the dataset directory.
void generate(const Scenario& sc, const std::filesystem::path& out_dir);

}  // namespace physvid
