#pragma once

// Time-dependent transforms from global (normalized image) coordinates to each
// object's local frame, plus the learnable homography applied to global points
// before the affine part. All functions operate on N x 2 point batches and are
// differentiable with respect to states, extras and the homography.

#include <array>

#include "physvid/tensor.hpp"

namespace physvid {

// 8 learnable entries h11 h12 h13 h21 h22 h23 h31 h32; h33 is fixed to 1.
struct Homography {
    Tensor h;

    static Homography identity();
    static Homography from_matrix(const std::array<double, 9>& m);  // m[8] must be 1
    std::array<double, 9> matrix() const;  // row-major 3x3 with h33 = 1
};

// Perspective warp with division guard (|denominator| must stay > 1e-8).
Tensor apply_homography(const Homography& H, const Tensor& pts);

// R(-phi) applied to each point: output row i is R(-phi) * pts_i.
Tensor rotate_by_minus(const Tensor& pts, const Tensor& phi);

// pts - point for a {2} tensor broadcast over rows.
Tensor subtract_point(const Tensor& pts, const Tensor& point);

// Family transforms. xh is the (already homography-corrected) N x 2 batch.
Tensor pendulum_local(const Tensor& xh, const Tensor& phi, const Tensor& pivot);
Tensor spring_local(const Tensor& xh, const Tensor& position, const Tensor& attach);
Tensor block_local(const Tensor& xh, const Tensor& arc_position, const Tensor& track_origin,
                   const Tensor& track_angle, const Tensor& scale);
Tensor ball_local(const Tensor& xh, const Tensor& position, const Tensor& scale);

}  // namespace physvid
