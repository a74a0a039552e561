#pragma once

// Dataset directory layout (shared with the generator):
//   frames/NNNN.ppm        P6, 8-bit (absent for mask-only data)
//   masks/obj{K}/NNNN.pgm  P5 binary masks (optional)
//   times.txt              one real seconds value per line
//   truth.json             family, parameters, split (optional)

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "physvid/dynamics.hpp"
#include "physvid/image.hpp"
#include "physvid/renderer.hpp"

namespace physvid {

struct GroundTruth {
    Family family = Family::Pendulum;
    std::map<std::string, double> params;  // length, damping, k, l_rest, alpha, mu, scale
    std::vector<double> z0;
    std::vector<double> pivot;             // pendulum only
    std::array<double, 9> homography = {1, 0, 0, 0, 1, 0, 0, 0, 1};
    double fps = 0.0;
    std::vector<int> train_indices;
    std::vector<int> test_indices;
};

std::string frame_name(int index);  // "0007"

struct FrameDataset {
    std::filesystem::path dir;
    PixelGrid grid;
    std::vector<double> times;
    std::vector<ImageRGB> frames;               // empty for mask-only datasets
    std::vector<std::vector<ImageGray>> masks;  // [object][frame], thresholded at 0.5
    std::optional<GroundTruth> truth;

    static FrameDataset load(const std::filesystem::path& dir);

    int frame_count() const { return static_cast<int>(times.size()); }
    int object_count() const { return static_cast<int>(masks.size()); }
    bool has_frames() const { return !frames.empty(); }

    // Train indices from truth.json, else every frame.
    std::vector<int> train_indices() const;
    std::vector<int> test_indices() const;
};

void write_ground_truth(const std::filesystem::path& path, const GroundTruth& truth);
GroundTruth read_ground_truth(const std::filesystem::path& path);

}  // namespace physvid
