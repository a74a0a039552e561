#pragma once

// The optimization loop: Adam with per-group learning rates, exponential LR
// decay on the MLP group, large pixel batches sampled without replacement per
// epoch, and the online frame curriculum.

#include <filesystem>
#include <map>
#include <span>

#include "physvid/config.hpp"
#include "physvid/dataset.hpp"
#include "physvid/losses.hpp"

namespace physvid {

// r(e) = r0 * beta^(e / n_decay), real-valued exponent
double lr_schedule(double epoch, double r0, double beta, int n_decay);

// min(total, n_fr0 + floor(step / n_incrT))
int frame_curriculum(int64_t step, int n_fr0, int n_incrT, int total_frames);

struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
};

// Standard bias-corrected Adam; t is the 1-based step count.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               int64_t t, double rate, double beta1, double beta2, double eps);

struct EpochRecord {
    int epoch = 0;
    double loss = 0.0, data = 0.0, reg = 0.0, seg = 0.0, attach = 0.0, outside = 0.0;
    double lr_mlp = 0.0, lr_param = 0.0;
    int active_frames = 0;
    std::map<std::string, double> physics;  // positive-space snapshot
};

struct FitResult {
    Checkpoint checkpoint;  // parameters + Adam moments + step counter
    std::vector<EpochRecord> history;
    int64_t steps = 0;
};

// Trains the scene in place. emergency_dir receives a checkpoint dump when the
// loss goes non-finite (the error is rethrown).
FitResult fit(const FrameDataset& data, SceneModel& scene, const RunConfig& cfg,
              const std::filesystem::path& emergency_dir);

// Positive-space snapshot of the physical parameters (for history/reports).
std::map<std::string, double> physics_snapshot(const SceneModel& scene);

// Rows gathered from a 2-d constant; used for cached background features.
Tensor gather_rows(const Tensor& src, const std::vector<int64_t>& rows);

}  // namespace physvid
