#pragma once

// Mask-based initialization of the initial state and transform extras:
// pendulum pivot from the averaged masks, initial angle via PCA of the
// foreground pixels, velocities via frame differencing.

#include <utility>
#include <vector>

#include "physvid/dataset.hpp"
#include "physvid/scene.hpp"

namespace physvid {

// arg-max pixel of the per-pixel mean mask, in normalized coordinates; ties
// resolve to the first pixel in row-major order.
std::pair<double, double> estimate_pivot(const std::vector<ImageGray>& masks,
                                         const PixelGrid& grid);

// Angle between the first principal axis of the foreground pixels and the
// downward vertical, wrapped to (-pi/2, pi/2].
double estimate_angle_pca(const ImageGray& mask);

// (angle1 - angle0)/dt with the difference wrapped into (-pi/2, pi/2].
double estimate_angular_velocity(const ImageGray& mask0, const ImageGray& mask1, double dt);

struct PositionVelocity {
    std::vector<std::pair<double, double>> centroids;  // normalized coords
    std::pair<double, double> velocity;                // normalized units / s
};

PositionVelocity estimate_position_velocity(const std::vector<ImageGray>& masks,
                                            const std::vector<double>& times,
                                            const PixelGrid& grid);

// Family-specific remaining defaults (paper appendix values live in presets).
struct InitDefaults {
    double length = 1.9;
    double damping = 0.6;
    double spring_k = 1.5;
    double mu = 0.0;
    double scale = 0.1;
};

// Applies the estimators to the dataset masks and writes z0/extras into the
// scene. Train indices select which masks participate.
void initialize_scene(SceneModel& scene, const FrameDataset& data,
                      const std::vector<int>& train, const InitDefaults& defaults);

}  // namespace physvid
