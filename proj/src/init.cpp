#include "physvid/init.hpp"

#include <array>
#include <cmath>

namespace physvid {

namespace {

constexpr double kPi = 3.14159265358979323846;

double wrap_half_pi(double a) {
    while (a <= -kPi / 2) a += kPi;
    while (a > kPi / 2) a -= kPi;
    return a;
}

struct Moments {
    double cx, cy;        // mean pixel coordinates
    double sxx, sxy, syy; // central second moments
    int64_t count;
};

Moments mask_moments(const ImageGray& mask) {
    Moments m{0, 0, 0, 0, 0, 0};
    for (int y = 0; y < mask.height; ++y)
        for (int x = 0; x < mask.width; ++x)
            if (mask.at(y, x) >= 0.5) {
                m.cx += x;
                m.cy += y;
                ++m.count;
            }
    if (m.count == 0) throw DataError("mask has no foreground pixels");
    m.cx /= static_cast<double>(m.count);
    m.cy /= static_cast<double>(m.count);
    for (int y = 0; y < mask.height; ++y)
        for (int x = 0; x < mask.width; ++x)
            if (mask.at(y, x) >= 0.5) {
                double dx = x - m.cx, dy = y - m.cy;
                m.sxx += dx * dx;
                m.sxy += dx * dy;
                m.syy += dy * dy;
            }
    double n = static_cast<double>(m.count);
    m.sxx /= n;
    m.sxy /= n;
    m.syy /= n;
    return m;
}

}  // namespace

std::pair<double, double> estimate_pivot(const std::vector<ImageGray>& masks,
                                         const PixelGrid& grid) {
    if (masks.size() < 2) throw DataError("pivot estimation needs at least 2 masks");
    int w = masks[0].width, h = masks[0].height;
    std::vector<double> mean(static_cast<size_t>(w) * h, 0.0);
    for (const auto& m : masks) {
        bool any = false;
        for (size_t i = 0; i < mean.size(); ++i) {
            double v = m.data[i] >= 0.5 ? 1.0 : 0.0;
            mean[i] += v;
            any = any || v > 0.0;
        }
        if (!any) throw DataError("pivot estimation: empty mask");
    }
    size_t best = 0;
    for (size_t i = 1; i < mean.size(); ++i)
        if (mean[i] > mean[best]) best = i;
    int y = static_cast<int>(best) / w;
    int x = static_cast<int>(best) % w;
    return grid.normalized(x, y);
}

double estimate_angle_pca(const ImageGray& mask) {
    Moments m = mask_moments(mask);
    if (m.count < 2) throw DataError("pca angle: need at least 2 foreground pixels");
    // principal eigenvector of [[sxx, sxy], [sxy, syy]]
    double tr = m.sxx + m.syy;
    double det = m.sxx * m.syy - m.sxy * m.sxy;
    double disc = std::sqrt(std::max(0.0, tr * tr / 4.0 - det));
    double lambda = tr / 2.0 + disc;
    double ux, uy;
    if (std::abs(m.sxy) > 1e-12) {
        ux = m.sxy;
        uy = lambda - m.sxx;
    } else {
        // axis-aligned distribution
        if (std::abs(m.sxx - m.syy) < 1e-12 && m.sxx < 1e-12)
            throw DataError("pca angle: degenerate covariance");
        if (m.sxx >= m.syy) {
            ux = 1.0;
            uy = 0.0;
        } else {
            ux = 0.0;
            uy = 1.0;
        }
    }
    // the rendered rod direction is R(phi)*(0,1) = (-sin phi, cos phi)
    return wrap_half_pi(std::atan2(-ux, uy));
}

double estimate_angular_velocity(const ImageGray& mask0, const ImageGray& mask1, double dt) {
    if (!(dt > 0.0)) throw DataError("angular velocity: dt must be positive");
    double a0 = estimate_angle_pca(mask0);
    double a1 = estimate_angle_pca(mask1);
    return wrap_half_pi(a1 - a0) / dt;
}

PositionVelocity estimate_position_velocity(const std::vector<ImageGray>& masks,
                                            const std::vector<double>& times,
                                            const PixelGrid& grid) {
    if (masks.size() < 2) throw DataError("position/velocity estimation needs 2 masks");
    if (times.size() != masks.size()) throw DataError("times/masks count mismatch");
    PositionVelocity pv;
    for (const auto& m : masks) {
        Moments mm = mask_moments(m);
        pv.centroids.push_back(grid.normalized(mm.cx, mm.cy));
    }
    double dt = times[1] - times[0];
    if (!(dt > 0.0)) throw DataError("position/velocity estimation: non-increasing times");
    pv.velocity = {(pv.centroids[1].first - pv.centroids[0].first) / dt,
                   (pv.centroids[1].second - pv.centroids[0].second) / dt};
    return pv;
}

void initialize_scene(SceneModel& scene, const FrameDataset& data,
                      const std::vector<int>& train, const InitDefaults& defaults) {
    if (data.masks.empty())
        throw DataError("initialization requires masks (at least the first two frames)");
    if (train.size() < 2) throw DataError("initialization needs at least 2 training frames");
    int f0 = train[0], f1 = train[1];
    double dt = data.times[static_cast<size_t>(f1)] - data.times[static_cast<size_t>(f0)];

    switch (scene.cfg.family) {
        case Family::Pendulum: {
            const auto& seq = data.masks[0];
            std::vector<ImageGray> train_masks;
            for (int idx : train)
                if (idx < static_cast<int>(seq.size()))
                    train_masks.push_back(seq[static_cast<size_t>(idx)]);
            auto [px, py] = estimate_pivot(train_masks, data.grid);
            scene.pivot.values_mut()[0] = px;
            scene.pivot.values_mut()[1] = py;
            double phi0 = estimate_angle_pca(seq[static_cast<size_t>(f0)]);
            double omega0 = estimate_angular_velocity(seq[static_cast<size_t>(f0)],
                                                      seq[static_cast<size_t>(f1)], dt);
            scene.z0.values_mut()[0] = phi0;
            scene.z0.values_mut()[1] = omega0;
            scene.set_positive(scene.length_raw, defaults.length);
            scene.set_positive(scene.damping_raw, defaults.damping);
            break;
        }
        case Family::Spring: {
            if (data.masks.size() < 2)
                throw DataError("spring initialization needs masks for both objects");
            std::array<PositionVelocity, 2> pv;
            for (int k = 0; k < 2; ++k) {
                std::vector<ImageGray> two = {data.masks[static_cast<size_t>(k)][static_cast<size_t>(f0)],
                                              data.masks[static_cast<size_t>(k)][static_cast<size_t>(f1)]};
                std::vector<double> tt = {data.times[static_cast<size_t>(f0)],
                                          data.times[static_cast<size_t>(f1)]};
                pv[static_cast<size_t>(k)] = estimate_position_velocity(two, tt, data.grid);
            }
            auto z = scene.z0.values_mut();
            z[0] = pv[0].centroids[0].first;
            z[1] = pv[0].centroids[0].second;
            z[2] = pv[1].centroids[0].first;
            z[3] = pv[1].centroids[0].second;
            z[4] = pv[0].velocity.first;
            z[5] = pv[0].velocity.second;
            z[6] = pv[1].velocity.first;
            z[7] = pv[1].velocity.second;
            scene.set_positive(scene.k_raw, defaults.spring_k);
            double dist = std::hypot(z[0] - z[2], z[1] - z[3]);
            scene.set_positive(scene.l_rest_raw, std::max(dist, 1e-3));
            break;
        }
        case Family::Block: {
            const auto& seq = data.masks[0];
            std::vector<ImageGray> two = {seq[static_cast<size_t>(f0)], seq[static_cast<size_t>(f1)]};
            std::vector<double> tt = {data.times[static_cast<size_t>(f0)],
                                      data.times[static_cast<size_t>(f1)]};
            PositionVelocity pv = estimate_position_velocity(two, tt, data.grid);
            scene.track_origin.values_mut()[0] = pv.centroids[0].first;
            scene.track_origin.values_mut()[1] = pv.centroids[0].second;
            double speed = std::hypot(pv.velocity.first, pv.velocity.second);
            double track = std::atan2(pv.velocity.second, pv.velocity.first);
            scene.track_angle.values_mut()[0] = track;
            scene.set_positive(scene.scale_raw, defaults.scale);
            auto z = scene.z0.values_mut();
            z[0] = 0.0;
            z[1] = speed / defaults.scale;
            scene.alpha.values_mut()[0] = std::abs(track);
            scene.set_positive(scene.mu_raw, std::max(defaults.mu, 1e-3));
            break;
        }
        case Family::Ball: {
            const auto& seq = data.masks[0];
            std::vector<ImageGray> two = {seq[static_cast<size_t>(f0)], seq[static_cast<size_t>(f1)]};
            std::vector<double> tt = {data.times[static_cast<size_t>(f0)],
                                      data.times[static_cast<size_t>(f1)]};
            PositionVelocity pv = estimate_position_velocity(two, tt, data.grid);
            scene.set_positive(scene.scale_raw, defaults.scale);
            auto z = scene.z0.values_mut();
            z[0] = pv.centroids[0].first / defaults.scale;
            z[1] = pv.centroids[0].second / defaults.scale;
            z[2] = pv.velocity.first / defaults.scale;
            z[3] = pv.velocity.second / defaults.scale;
            break;
        }
    }
}

}  // namespace physvid
