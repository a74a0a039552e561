#pragma once

// Evaluation metrics: PSNR, IoU, relative parameter errors, homography
// deviation, and the report emitted by `eval`.

#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "physvid/dataset.hpp"
#include "physvid/scene.hpp"

namespace physvid {

constexpr double kPsnrCap = 120.0;  // returned when MSE < 1e-12

// 10*log10(1/MSE) with MAX = 1; inputs must share a shape and live in [0,1].
double psnr(const ImageRGB& a, const ImageRGB& b);

// |a & b| / |a | b| after binarizing at 0.5; both empty -> 1.
double iou(const ImageGray& a, const ImageGray& b);

// ||H - I||_F over all 9 entries.
double homography_deviation(const Homography& h);

struct ParamError {
    std::string name;
    double estimated = 0.0;
    double truth = 0.0;
    double error = 0.0;   // relative when `relative`, else absolute (flagged)
    bool relative = true;
};

// Per-parameter errors |est - true| / |true|; true == 0 entries are reported
// as absolute errors with relative = false. The pendulum pivot error is the
// Euclidean distance over the image diagonal.
std::vector<ParamError> param_report(const SceneModel& scene, const GroundTruth& truth,
                                     const PixelGrid& grid);

struct MetricsReport {
    std::vector<int> frame_indices;
    std::vector<double> psnr_per_frame;
    double psnr_mean = 0.0;
    std::vector<double> iou_per_frame;
    double iou_mean = 0.0;
    std::vector<ParamError> param_errors;
    std::optional<double> delta_h;
    double wall_seconds = 0.0;
    std::string config_hash;

    nlohmann::json to_json() const;
    std::string summary() const;  // human-readable lines
};

// Renders the checkpointed scene at the dataset's times for `indices` and
// compares against frames/masks/truth. Substeps from the run config.
MetricsReport evaluate(const SceneModel& scene, const FrameDataset& data,
                       const std::vector<int>& indices, int substeps,
                       const std::string& config_hash_hex);

}  // namespace physvid
