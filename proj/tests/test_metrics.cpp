#include <doctest.h>

#include <cmath>

#include "physvid/metrics.hpp"

using namespace physvid;

TEST_CASE("psnr") {
    ImageRGB a(8, 8, 0.3), b(8, 8, 0.3);
    CHECK(psnr(a, a) == kPsnrCap);
    CHECK(psnr(a, b) == kPsnrCap);

    // uniform difference of 0.1 -> 20 dB
    ImageRGB c(8, 8, 0.4);
    CHECK(psnr(a, c) == doctest::Approx(20.0).epsilon(1e-9));

    // random pair matches an independent recomputation
    Rng rng(3);
    ImageRGB r1(5, 4), r2(5, 4);
    double se = 0.0;
    for (size_t i = 0; i < r1.data.size(); ++i) {
        r1.data[i] = rng.uniform();
        r2.data[i] = rng.uniform();
        se += (r1.data[i] - r2.data[i]) * (r1.data[i] - r2.data[i]);
    }
    double expect = 10.0 * std::log10(1.0 / (se / r1.data.size()));
    CHECK(psnr(r1, r2) == doctest::Approx(expect).epsilon(1e-9));
    CHECK(psnr(r1, r2) == psnr(r2, r1));

    ImageRGB other(4, 4);
    CHECK_THROWS_AS(psnr(a, other), ShapeError);
}

TEST_CASE("iou") {
    ImageGray a(8, 8, 0.0), b(8, 8, 0.0);
    CHECK(iou(a, b) == 1.0);  // both empty

    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 4; ++x) a.at(y, x) = 1.0;
    CHECK(iou(a, a) == 1.0);

    for (int y = 4; y < 8; ++y)
        for (int x = 0; x < 4; ++x) b.at(y, x) = 1.0;
    CHECK(iou(a, b) == 0.0);  // disjoint

    // half-overlapping equal squares -> 1/3
    ImageGray c(8, 8, 0.0);
    for (int y = 2; y < 6; ++y)
        for (int x = 0; x < 4; ++x) c.at(y, x) = 1.0;
    CHECK(iou(a, c) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(iou(a, c) == iou(c, a));
}

TEST_CASE("homography deviation") {
    CHECK(homography_deviation(Homography::identity()) == 0.0);

    Homography h = Homography::from_matrix({1, 0, 0.07, 0, 1, 0, 0, 0, 1});
    CHECK(homography_deviation(h) == doctest::Approx(0.07).epsilon(1e-12));

    Rng rng(9);
    std::array<double, 9> m{};
    double acc = 0.0;
    for (int i = 0; i < 8; ++i) m[static_cast<size_t>(i)] = rng.uniform(-1, 1);
    m[8] = 1.0;
    static constexpr double kId[9] = {1, 0, 0, 0, 1, 0, 0, 0, 1};
    for (int i = 0; i < 9; ++i)
        acc += (m[static_cast<size_t>(i)] - kId[i]) * (m[static_cast<size_t>(i)] - kId[i]);
    CHECK(homography_deviation(Homography::from_matrix(m)) ==
          doctest::Approx(std::sqrt(acc)).epsilon(1e-12));
}

TEST_CASE("param report") {
    SceneConfig cfg;
    cfg.family = Family::Pendulum;
    cfg.background = {2, 8, 4, 1.0};
    cfg.object = {2, 8, 4, 1.0};
    Rng rng(4);
    SceneModel scene = SceneModel::create(cfg, rng);
    scene.set_named_value("ode.length", 1.02);
    scene.set_named_value("ode.damping", 0.4);
    scene.z0.values_mut()[0] = 0.5;
    scene.z0.values_mut()[1] = 0.0;
    scene.pivot.values_mut()[0] = 0.1;
    scene.pivot.values_mut()[1] = -0.2;

    GroundTruth truth;
    truth.family = Family::Pendulum;
    truth.params = {{"length", 1.0}, {"damping", 0.4}};
    truth.z0 = {0.5, 0.0};
    truth.pivot = {0.1, -0.2};

    PixelGrid grid(64, 64);
    auto report = param_report(scene, truth, grid);

    bool saw_length = false, saw_omega = false, saw_pivot = false;
    for (const auto& e : report) {
        if (e.name == "length") {
            saw_length = true;
            CHECK(e.relative);
            CHECK(e.error == doctest::Approx(0.02).epsilon(1e-9));
        }
        if (e.name == "damping") CHECK(e.error == doctest::Approx(0.0).epsilon(1e-9));
        if (e.name == "z0.1") {
            saw_omega = true;
            CHECK(!e.relative);  // true value 0 -> absolute error, flagged
            CHECK(e.error == 0.0);
        }
        if (e.name == "pivot") {
            saw_pivot = true;
            CHECK(e.error == 0.0);
        }
    }
    CHECK(saw_length);
    CHECK(saw_omega);
    CHECK(saw_pivot);

    GroundTruth wrong;
    wrong.family = Family::Ball;
    CHECK_THROWS_AS(param_report(scene, wrong, grid), DataError);
}
