#include <doctest.h>

#include <cmath>

#include "physvid/renderer.hpp"

using namespace physvid;

namespace {

SceneConfig toy_config(Family fam, int n_objects = 1, bool background = true) {
    SceneConfig cfg;
    cfg.family = fam;
    cfg.use_background = background;
    cfg.n_objects = n_objects;
    cfg.background = {2, 8, 4, 2.0};
    cfg.object = {2, 8, 4, 1.0};
    return cfg;
}

// saturates the object opacity by pinning the last bias entry
void force_opacity(SceneModel& scene, double logit) {
    for (auto& obj : scene.objects) {
        auto b = obj.net.biases.back().values_mut();
        b[3] = logit;
        auto w = obj.net.weights.back().values_mut();
        for (size_t i = 3; i < w.size(); i += 4) w[i] = 0.0;
    }
}

}  // namespace

TEST_CASE("pixel grid normalization") {
    PixelGrid g(64, 64);
    auto [x0, y0] = g.normalized(0, 0);
    auto [x1, y1] = g.normalized(63, 63);
    CHECK(x0 == doctest::Approx(-1.0 + 1.0 / 64).epsilon(1e-12));
    CHECK(y0 == doctest::Approx(-1.0 + 1.0 / 64).epsilon(1e-12));
    CHECK(x1 == doctest::Approx(1.0 - 1.0 / 64).epsilon(1e-12));
    CHECK(std::abs(x0) <= 1.0);
    CHECK(std::abs(x1) <= 1.0);

    // non-square: longer side spans [-1,1], shorter scaled by aspect
    PixelGrid wide(128, 64);
    auto [wx, wy] = wide.normalized(127, 63);
    CHECK(wx == doctest::Approx(1.0 - 1.0 / 128).epsilon(1e-12));
    CHECK(wy == doctest::Approx(0.5 - 1.0 / 128).epsilon(1e-12));
}

TEST_CASE("layered opacity") {
    auto col = [](std::vector<double> v) {
        int64_t n = static_cast<int64_t>(v.size());
        return Tensor::constant({n, 1}, std::move(v));
    };
    auto [c, w] = layered_opacity({col({0.2, 0.7}), col({0.9, 0.7})});
    CHECK(c.at(0) == 0.9);
    CHECK(w[0] == 1);
    CHECK(c.at(1) == 0.7);
    CHECK(w[1] == 0);  // tie -> lowest index

    auto [c1, w1] = layered_opacity({col({0.3})});
    CHECK(c1.at(0) == 0.3);
    CHECK(w1[0] == 0);
}

TEST_CASE("blending equation degenerates exactly at o in {0,1}") {
    Rng rng(77);
    SceneModel scene = SceneModel::create(toy_config(Family::Pendulum), rng);
    Tensor state = Tensor::constant({2}, {0.2, 0.0});
    PixelGrid grid(6, 6);

    force_opacity(scene, -1000.0);  // sigmoid underflows to exactly 0
    RenderedFrame frame = render_frame(scene, state, grid);
    // equals the pure background render bit for bit
    Tensor bg = scene.bg->eval(grid.coords());
    for (int64_t i = 0; i < grid.count(); ++i)
        for (int c = 0; c < 3; ++c)
            CHECK(frame.rgb.data[static_cast<size_t>(i) * 3 + c] == bg.at(i * 3 + c));

    force_opacity(scene, 1000.0);  // sigmoid saturates to exactly 1
    frame = render_frame(scene, state, grid);
    Tensor local = scene.object_local(0, state, grid.coords());
    Tensor obj = scene.objects[0].eval(local);
    for (int64_t i = 0; i < grid.count(); ++i)
        for (int c = 0; c < 3; ++c)
            CHECK(frame.rgb.data[static_cast<size_t>(i) * 3 + c] == obj.at(i * 4 + c));
}

TEST_CASE("blending arithmetic") {
    // o = 0.5, c_bg = (1,0,0), c_obj = (0,1,0) -> (0.5, 0.5, 0)
    Tensor o = Tensor::constant({1, 1}, {0.5});
    Tensor one_minus = sub(Tensor::scalar(1.0), o);
    double bg[3] = {1, 0, 0}, obj[3] = {0, 1, 0}, expect[3] = {0.5, 0.5, 0};
    for (int c = 0; c < 3; ++c) {
        Tensor v = add(mul(one_minus, Tensor::constant({1, 1}, {bg[c]})),
                       mul(o, Tensor::constant({1, 1}, {obj[c]})));
        CHECK(v.value() == doctest::Approx(expect[c]).epsilon(1e-15));
    }
}

TEST_CASE("rendered color is a convex combination") {
    Rng rng(91);
    SceneModel scene = SceneModel::create(toy_config(Family::Pendulum), rng);
    Tensor state = Tensor::constant({2}, {0.4, 0.1});
    PixelGrid grid(8, 8);
    Tensor pts = grid.coords();
    PixelRender pr = render_points(scene, state, pts);
    Tensor bg = scene.bg->eval(pts);
    Tensor obj = scene.objects[0].eval(scene.object_local(0, state, pts));
    for (int64_t i = 0; i < grid.count(); ++i)
        for (int c = 0; c < 3; ++c) {
            double lo = std::min(bg.at(i * 3 + c), obj.at(i * 4 + c));
            double hi = std::max(bg.at(i * 3 + c), obj.at(i * 4 + c));
            double v = pr.rgb[static_cast<size_t>(c)].at(i);
            CHECK(v >= lo - 1e-15);
            CHECK(v <= hi + 1e-15);
        }
}

TEST_CASE("static scene renders bit-identically at different times") {
    Rng rng(13);
    SceneModel scene = SceneModel::create(toy_config(Family::Pendulum), rng);
    // equilibrium: state stays exactly (0,0) at all times
    Trajectory traj = scene.simulate({0.0, 0.7, 1.9}, 30);
    PixelGrid grid(8, 8);
    RenderedFrame f0 = render_frame(scene, traj.at(0), grid);
    RenderedFrame f2 = render_frame(scene, traj.at(2), grid);
    CHECK(f0.rgb.data == f2.rgb.data);
    CHECK(f0.combined.data == f2.combined.data);
}

TEST_CASE("rendering is deterministic") {
    Rng rng(14);
    SceneModel scene = SceneModel::create(toy_config(Family::Pendulum), rng);
    Tensor state = Tensor::constant({2}, {0.3, -0.5});
    PixelGrid grid(16, 16);
    RenderedFrame a = render_frame(scene, state, grid);
    RenderedFrame b = render_frame(scene, state, grid);
    CHECK(a.rgb.data == b.rgb.data);
    CHECK(a.occupancy[0].data == b.occupancy[0].data);
}

TEST_CASE("pixel color gradient wrt pendulum length matches finite differences") {
    Rng rng(15);
    SceneModel scene = SceneModel::create(toy_config(Family::Pendulum), rng);
    scene.set_named_value("ode.length", 0.8);
    scene.set_named_value("ode.damping", 0.3);
    scene.z0.values_mut()[0] = 0.6;
    scene.z0.values_mut()[1] = 0.4;
    PixelGrid grid(4, 4);
    Tensor pts = grid.coords();

    double err = grad_check(
        [&](const std::vector<Tensor>&) {
            Trajectory traj = scene.simulate({0.0, 0.5}, 20);
            PixelRender pr = render_points(scene, traj.at(1), pts);
            return add(add(mean(pr.rgb[0]), mean(pr.rgb[1])), mean(pr.rgb[2]));
        },
        {scene.length_raw}, 1e-5);
    CHECK(err < 1e-4);
}

TEST_CASE("multi-object color selection follows the arg-max rule") {
    Rng rng(16);
    SceneModel scene = SceneModel::create(toy_config(Family::Spring, 2), rng);
    Tensor state = Tensor::constant({8}, {-0.3, 0.0, 0.3, 0.0, 0, 0, 0, 0});
    PixelGrid grid(6, 6);
    Tensor pts = grid.coords();
    PixelRender pr = render_points(scene, state, pts);
    Tensor o0 = pr.opacities[0], o1 = pr.opacities[1];
    Tensor c0 = scene.objects[0].eval(scene.object_local(0, state, pts));
    Tensor c1 = scene.objects[1].eval(scene.object_local(1, state, pts));
    Tensor bg = scene.bg->eval(pts);
    for (int64_t i = 0; i < grid.count(); ++i) {
        int win = o1.at(i) > o0.at(i) ? 1 : 0;
        double o = std::max(o0.at(i), o1.at(i));
        const Tensor& cw = win == 0 ? c0 : c1;
        for (int c = 0; c < 3; ++c) {
            double expect = (1 - o) * bg.at(i * 3 + c) + o * cw.at(i * 4 + c);
            CHECK(pr.rgb[static_cast<size_t>(c)].at(i) ==
                  doctest::Approx(expect).epsilon(1e-14));
        }
    }
}

TEST_CASE("render sequence rejects times before t0") {
    Rng rng(17);
    SceneModel scene = SceneModel::create(toy_config(Family::Pendulum), rng);
    PixelGrid grid(4, 4);
    CHECK_THROWS_AS(render_sequence(scene, 1.0, {0.5}, 10, grid), NumericError);
}
