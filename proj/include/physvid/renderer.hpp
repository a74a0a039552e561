#pragma once

// Differentiable per-pixel compositing of the background and object fields on
// a regular pixel grid: c = (1 - o) c_bg + o c_obj, with max-opacity layering
// for multiple objects.

#include <utility>
#include <vector>

#include "physvid/image.hpp"
#include "physvid/scene.hpp"

namespace physvid {

struct PixelGrid {
    int width = 0, height = 0;
    double scale = 0.0;  // normalized units per pixel (longer side spans [-1,1])

    PixelGrid() = default;
    PixelGrid(int w, int h);

    std::pair<double, double> normalized(double x_pix, double y_pix) const;
    int64_t count() const { return static_cast<int64_t>(width) * height; }

    // (W*H) x 2 constant of pixel-center coordinates, row-major (y outer).
    Tensor coords() const;
    Tensor coords_for(const std::vector<int64_t>& pixel_indices) const;
};

// Batched colors/opacities for N global points at one trajectory state.
// Channels are N x 1 tensors; rgb is empty for background-less scenes.
struct PixelRender {
    std::vector<Tensor> rgb;        // 3 channels when present
    Tensor combined_opacity;        // N x 1
    std::vector<Tensor> opacities;  // per object, N x 1
};

// gamma_bg, when given, must be fourier_features of pts under the background
// mapping (cached for static grids; the mapping itself has no gradient).
PixelRender render_points(const SceneModel& scene, const Tensor& state, const Tensor& pts,
                          const Tensor* gamma_bg = nullptr);

// Max-opacity layering: combined value plus per-pixel winning object index
// (ties -> lowest index). Gradient flows only through the winner.
std::pair<Tensor, std::vector<int>> layered_opacity(const std::vector<Tensor>& opacities);

struct RenderedFrame {
    ImageRGB rgb;
    std::vector<ImageGray> occupancy;
    ImageGray combined;
};

RenderedFrame render_frame(const SceneModel& scene, const Tensor& state, const PixelGrid& grid);

// Single-pixel convenience (1-row batch), mostly for tests.
std::vector<double> render_pixel(const SceneModel& scene, const Tensor& state, double nx,
                                 double ny);

// Integrates from t0 and renders each requested time (all must be >= t0).
std::vector<RenderedFrame> render_sequence(const SceneModel& scene, double t0,
                                           const std::vector<double>& times, int substeps,
                                           const PixelGrid& grid);

}  // namespace physvid
