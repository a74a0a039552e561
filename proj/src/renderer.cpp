#include "physvid/renderer.hpp"

#include <algorithm>

namespace physvid {

PixelGrid::PixelGrid(int w, int h) : width(w), height(h) {
    if (w <= 0 || h <= 0) throw DataError("pixel grid needs positive dimensions");
    scale = 2.0 / static_cast<double>(std::max(w, h));
}

std::pair<double, double> PixelGrid::normalized(double x_pix, double y_pix) const {
    return {(x_pix + 0.5 - 0.5 * width) * scale, (y_pix + 0.5 - 0.5 * height) * scale};
}

Tensor PixelGrid::coords() const {
    std::vector<double> v(static_cast<size_t>(count()) * 2);
    size_t i = 0;
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
            auto [nx, ny] = normalized(x, y);
            v[i++] = nx;
            v[i++] = ny;
        }
    return Tensor::constant({count(), 2}, std::move(v));
}

Tensor PixelGrid::coords_for(const std::vector<int64_t>& pixel_indices) const {
    std::vector<double> v(pixel_indices.size() * 2);
    size_t i = 0;
    for (int64_t idx : pixel_indices) {
        int y = static_cast<int>(idx / width);
        int x = static_cast<int>(idx % width);
        auto [nx, ny] = normalized(x, y);
        v[i++] = nx;
        v[i++] = ny;
    }
    return Tensor::constant({static_cast<int64_t>(pixel_indices.size()), 2}, std::move(v));
}

std::pair<Tensor, std::vector<int>> layered_opacity(const std::vector<Tensor>& opacities) {
    if (opacities.empty()) throw ShapeError("layered_opacity: no objects");
    Tensor combined = opacities[0];
    for (size_t k = 1; k < opacities.size(); ++k) combined = maximum(combined, opacities[k]);
    int64_t n = opacities[0].size();
    std::vector<int> winner(static_cast<size_t>(n), 0);
    for (int64_t i = 0; i < n; ++i) {
        double best = opacities[0].at(i);
        for (size_t k = 1; k < opacities.size(); ++k) {
            double v = opacities[k].at(i);
            if (v > best) {
                best = v;
                winner[static_cast<size_t>(i)] = static_cast<int>(k);
            }
        }
    }
    return {combined, std::move(winner)};
}

PixelRender render_points(const SceneModel& scene, const Tensor& state, const Tensor& pts,
                          const Tensor* gamma_bg) {
    int64_t n = pts.shape()[0];
    PixelRender out;

    std::vector<std::vector<Tensor>> obj_rgb;  // [object][channel]
    for (size_t k = 0; k < scene.objects.size(); ++k) {
        Tensor local = scene.object_local(static_cast<int>(k), state, pts);
        Tensor o4 = scene.objects[k].eval(local);
        out.opacities.push_back(slice(o4, 0, n, 3, 1));
        obj_rgb.push_back({slice(o4, 0, n, 0, 1), slice(o4, 0, n, 1, 1), slice(o4, 0, n, 2, 1)});
    }

    auto [combined, winner] = layered_opacity(out.opacities);
    out.combined_opacity = combined;

    if (!scene.bg) return out;

    std::vector<Tensor> obj_c(3);
    if (scene.objects.size() == 1) {
        obj_c = obj_rgb[0];
    } else {
        // hard selection of the arg-max object's color; the 0/1 masks are
        // constants, so the gradient reaches only the winner
        for (int c = 0; c < 3; ++c) {
            Tensor acc;
            for (size_t k = 0; k < scene.objects.size(); ++k) {
                std::vector<double> mask(static_cast<size_t>(n));
                for (int64_t i = 0; i < n; ++i)
                    mask[static_cast<size_t>(i)] = winner[static_cast<size_t>(i)] == static_cast<int>(k) ? 1.0 : 0.0;
                Tensor term = mul(Tensor::constant({n, 1}, std::move(mask)), obj_rgb[k][c]);
                acc = acc.defined() ? add(acc, term) : term;
            }
            obj_c[static_cast<size_t>(c)] = acc;
        }
    }

    Tensor bg_rgb = gamma_bg ? scene.bg->eval_features(*gamma_bg) : scene.bg->eval(pts);
    Tensor one_minus_o = sub(Tensor::scalar(1.0), combined);
    out.rgb.resize(3);
    for (int c = 0; c < 3; ++c) {
        Tensor bg_c = slice(bg_rgb, 0, n, c, 1);
        out.rgb[static_cast<size_t>(c)] =
            add(mul(one_minus_o, bg_c), mul(combined, obj_c[static_cast<size_t>(c)]));
    }
    return out;
}

RenderedFrame render_frame(const SceneModel& scene, const Tensor& state, const PixelGrid& grid) {
    Tensor pts = grid.coords();
    PixelRender pr = render_points(scene, state, pts);
    RenderedFrame frame;
    frame.rgb = ImageRGB(grid.width, grid.height);
    frame.combined = ImageGray(grid.width, grid.height);
    int64_t n = grid.count();
    if (!pr.rgb.empty()) {
        for (int64_t i = 0; i < n; ++i) {
            frame.rgb.data[static_cast<size_t>(i) * 3 + 0] = pr.rgb[0].at(i);
            frame.rgb.data[static_cast<size_t>(i) * 3 + 1] = pr.rgb[1].at(i);
            frame.rgb.data[static_cast<size_t>(i) * 3 + 2] = pr.rgb[2].at(i);
        }
    } else {
        // mask-only scenes render their occupancy as grayscale
        for (int64_t i = 0; i < n; ++i) {
            double o = pr.combined_opacity.at(i);
            for (int c = 0; c < 3; ++c) frame.rgb.data[static_cast<size_t>(i) * 3 + c] = o;
        }
    }
    for (int64_t i = 0; i < n; ++i)
        frame.combined.data[static_cast<size_t>(i)] = pr.combined_opacity.at(i);
    for (const auto& o : pr.opacities) {
        ImageGray g(grid.width, grid.height);
        for (int64_t i = 0; i < n; ++i) g.data[static_cast<size_t>(i)] = o.at(i);
        frame.occupancy.push_back(std::move(g));
    }
    return frame;
}

std::vector<double> render_pixel(const SceneModel& scene, const Tensor& state, double nx,
                                 double ny) {
    Tensor pts = Tensor::constant({1, 2}, {nx, ny});
    PixelRender pr = render_points(scene, state, pts);
    if (pr.rgb.empty()) return {pr.combined_opacity.value()};
    return {pr.rgb[0].value(), pr.rgb[1].value(), pr.rgb[2].value()};
}

std::vector<RenderedFrame> render_sequence(const SceneModel& scene, double t0,
                                           const std::vector<double>& times, int substeps,
                                           const PixelGrid& grid) {
    for (double t : times)
        if (t < t0)
            throw NumericError("render: time " + std::to_string(t) +
                               " is outside the trajectory coverage (t0 = " +
                               std::to_string(t0) + ")");
    // integrate once over the sorted unique time set, then pick states
    std::vector<double> sorted = times;
    sorted.push_back(t0);
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    Trajectory traj = scene.simulate(sorted, substeps);
    std::vector<RenderedFrame> frames;
    frames.reserve(times.size());
    for (double t : times) {
        size_t idx = static_cast<size_t>(
            std::lower_bound(sorted.begin(), sorted.end(), t) - sorted.begin());
        frames.push_back(render_frame(scene, traj.at(idx), grid));
    }
    return frames;
}

}  // namespace physvid
