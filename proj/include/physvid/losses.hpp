#pragma once

// Training objectives: photometric MSE, occupancy regularizer, mask BCE, and
// the spring-specific auxiliary losses, combined with epoch-dependent weights.

#include <vector>

#include "physvid/renderer.hpp"
#include "physvid/scene.hpp"

namespace physvid {

struct LossWeights {
    double photo = 1.0;          // fixed by convention
    double reg = 0.0;            // occupancy regularizer weight
    int reg_epoch = -1;          // activation epoch N_reg; negative disables
    double seg0 = 0.01;          // spring coarse-mask BCE, initial weight
    double seg_decay = 0.2;      // multiplied in every seg_interval epochs
    int seg_interval = 100;
    double attach = 0.05;
    double outside = 1.0;
};

constexpr double kBceEps = 1e-7;

// lambda_seg(epoch) = seg0 * seg_decay^floor(epoch / seg_interval)
double seg_weight(const LossWeights& w, int epoch);

// Mean over pixels, frames and channels of the squared difference. Channels
// are passed as equal-length column tensors.
Tensor photometric_mse(const std::vector<Tensor>& pred, const std::vector<Tensor>& target);

// mean of o(1-o) over every supplied opacity tensor
Tensor occupancy_regularizer(const std::vector<Tensor>& opacities);

// mean of -[m log o + (1-m) log(1-o)] with o clamped to [kBceEps, 1-kBceEps];
// targets must be binary.
Tensor mask_bce(const Tensor& opacity, const Tensor& target);

enum class DataTerm { Photometric, MaskBce };

// One frame's slice of a training batch. Constants only; gradients flow
// through the scene.
struct FrameBatch {
    int frame_index = 0;
    size_t traj_index = 0;           // position of this frame in the trajectory
    Tensor pts;                      // N x 2 pixel-center coordinates
    Tensor gamma_bg;                 // N x 2F cached background features (if bg)
    std::vector<Tensor> target_rgb;  // 3 x (N x 1), photometric datasets
    Tensor target_mask;              // N x 1, mask datasets
};

struct LossBatch {
    std::vector<FrameBatch> frames;
    // spring-only inputs
    Tensor band_pts;                   // M x 2 outside band (empty disables)
    Tensor frame0_pts;                 // full first-frame grid
    std::vector<Tensor> coarse_masks;  // per object, matching frame0_pts rows
    size_t frame0_traj_index = 0;
};

struct LossParts {
    double photo = 0.0;
    double reg = 0.0;
    double seg = 0.0;
    double attach = 0.0;
    double outside = 0.0;
    Tensor total;
};

// lambda_photo*photo + [epoch >= N_reg]*lambda_reg*reg
//   + lambda_seg(epoch)*seg + lambda_attach*attach + lambda_outside*outside
// (spring terms only for the spring family; BCE replaces photo for mask-only
// datasets).
LossParts total_loss(const SceneModel& scene, const Trajectory& traj, const LossBatch& batch,
                     int epoch, const LossWeights& weights, DataTerm term);

}  // namespace physvid
