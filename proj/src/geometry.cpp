#include "physvid/geometry.hpp"

#include <cmath>

namespace physvid {

Homography Homography::identity() {
    return Homography{Tensor::constant({8}, {1, 0, 0, 0, 1, 0, 0, 0})};
}

Homography Homography::from_matrix(const std::array<double, 9>& m) {
    if (m[8] != 1.0) throw NumericError("homography must have h33 = 1");
    return Homography{Tensor::constant({8}, {m[0], m[1], m[2], m[3], m[4], m[5], m[6], m[7]})};
}

std::array<double, 9> Homography::matrix() const {
    const auto v = h.values();
    return {v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7], 1.0};
}

namespace {

Tensor col(const Tensor& pts, int64_t c) {
    return slice(pts, 0, pts.shape()[0], c, 1);
}

Tensor entry(const Tensor& v, int64_t i) { return slice(v, i, 1); }

}  // namespace

Tensor apply_homography(const Homography& H, const Tensor& pts) {
    if (pts.shape().size() != 2 || pts.shape()[1] != 2)
        throw ShapeError("apply_homography: expected N x 2 points, got " + shape_str(pts.shape()));
    Tensor x = col(pts, 0), y = col(pts, 1);
    Tensor h11 = entry(H.h, 0), h12 = entry(H.h, 1), h13 = entry(H.h, 2);
    Tensor h21 = entry(H.h, 3), h22 = entry(H.h, 4), h23 = entry(H.h, 5);
    Tensor h31 = entry(H.h, 6), h32 = entry(H.h, 7);
    Tensor den = add(add(mul(h31, x), mul(h32, y)), Tensor::scalar(1.0));
    for (double d : den.values())
        if (std::abs(d) <= 1e-8)
            throw NumericError("apply_homography: point too close to the plane at infinity "
                               "(|denominator| <= 1e-8)");
    Tensor xn = div(add(add(mul(h11, x), mul(h12, y)), h13), den);
    Tensor yn = div(add(add(mul(h21, x), mul(h22, y)), h23), den);
    return concat({xn, yn}, 1);
}

Tensor rotate_by_minus(const Tensor& pts, const Tensor& phi) {
    Tensor c = cos(phi), s = sin(phi);
    Tensor x = col(pts, 0), y = col(pts, 1);
    // R(-phi) = [[cos, sin], [-sin, cos]]
    Tensor lx = add(mul(c, x), mul(s, y));
    Tensor ly = sub(mul(c, y), mul(s, x));
    return concat({lx, ly}, 1);
}

Tensor subtract_point(const Tensor& pts, const Tensor& point) {
    if (point.size() != 2) throw ShapeError("subtract_point: point must have 2 entries");
    Tensor x = sub(col(pts, 0), entry(point, 0));
    Tensor y = sub(col(pts, 1), entry(point, 1));
    return concat({x, y}, 1);
}

Tensor pendulum_local(const Tensor& xh, const Tensor& phi, const Tensor& pivot) {
    return rotate_by_minus(subtract_point(xh, pivot), phi);
}

Tensor spring_local(const Tensor& xh, const Tensor& position, const Tensor& attach) {
    return subtract_point(subtract_point(xh, position), attach);
}

Tensor block_local(const Tensor& xh, const Tensor& arc_position, const Tensor& track_origin,
                   const Tensor& track_angle, const Tensor& scale) {
    Tensor rotated = rotate_by_minus(subtract_point(xh, track_origin), track_angle);
    Tensor along = sub(col(rotated, 0), mul(scale, arc_position));
    return concat({along, col(rotated, 1)}, 1);
}

Tensor ball_local(const Tensor& xh, const Tensor& position, const Tensor& scale) {
    Tensor x = sub(col(xh, 0), mul(scale, entry(position, 0)));
    Tensor y = sub(col(xh, 1), mul(scale, entry(position, 1)));
    return concat({x, y}, 1);
}

}  // namespace physvid
