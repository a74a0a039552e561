#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "physvid/geometry.hpp"

using namespace physvid;

TEST_CASE("homography identity and translation") {
    Tensor pts = Tensor::constant({2, 2}, {0.3, -0.4, -0.9, 0.8});
    Tensor out = apply_homography(Homography::identity(), pts);
    for (int i = 0; i < 4; ++i) CHECK(out.at(i) == pts.at(i));

    Homography t = Homography::from_matrix({1, 0, 0.25, 0, 1, -0.5, 0, 0, 1});
    out = apply_homography(t, pts);
    CHECK(out.at(0) == doctest::Approx(0.3 + 0.25).epsilon(1e-15));
    CHECK(out.at(1) == doctest::Approx(-0.4 - 0.5).epsilon(1e-15));
}

TEST_CASE("homography round-trips through its matrix inverse") {
    Rng rng(17);
    for (int trial = 0; trial < 20; ++trial) {
        Eigen::Matrix3d m = Eigen::Matrix3d::Identity();
        m(0, 0) += rng.uniform(-0.2, 0.2);
        m(0, 1) += rng.uniform(-0.2, 0.2);
        m(0, 2) += rng.uniform(-0.3, 0.3);
        m(1, 0) += rng.uniform(-0.2, 0.2);
        m(1, 1) += rng.uniform(-0.2, 0.2);
        m(1, 2) += rng.uniform(-0.3, 0.3);
        m(2, 0) += rng.uniform(-0.1, 0.1);
        m(2, 1) += rng.uniform(-0.1, 0.1);
        Eigen::Matrix3d inv = m.inverse();
        inv /= inv(2, 2);  // renormalize h33 = 1

        std::array<double, 9> fwd{m(0, 0), m(0, 1), m(0, 2), m(1, 0), m(1, 1),
                                  m(1, 2), m(2, 0), m(2, 1), 1.0};
        std::array<double, 9> bwd{inv(0, 0), inv(0, 1), inv(0, 2), inv(1, 0), inv(1, 1),
                                  inv(1, 2), inv(2, 0), inv(2, 1), 1.0};
        Tensor pts = Tensor::constant({3, 2}, {0.4, 0.1, -0.5, -0.7, 0.9, 0.3});
        Tensor round = apply_homography(Homography::from_matrix(bwd),
                                        apply_homography(Homography::from_matrix(fwd), pts));
        for (int i = 0; i < 6; ++i) CHECK(std::abs(round.at(i) - pts.at(i)) < 1e-10);
    }
}

TEST_CASE("homography rejects points at infinity") {
    Homography h = Homography::from_matrix({1, 0, 0, 0, 1, 0, -1.0, 0, 1});
    Tensor pts = Tensor::constant({1, 2}, {1.0, 0.0});  // denominator exactly 0
    CHECK_THROWS_AS(apply_homography(h, pts), NumericError);
}

TEST_CASE("pendulum transform") {
    // phi = 0, pivot = 0, identity homography -> identity map
    Tensor pts = Tensor::constant({2, 2}, {0.25, -0.5, -0.125, 0.75});
    Tensor local = pendulum_local(pts, Tensor::scalar(0.0), Tensor::zeros({2}));
    for (int i = 0; i < 4; ++i) CHECK(local.at(i) == pts.at(i));

    // pivot maps to the local origin for any angle
    Tensor pivot = Tensor::constant({2}, {0.5, 0.5});
    Tensor at_pivot = Tensor::constant({1, 2}, {0.5, 0.5});
    local = pendulum_local(at_pivot, Tensor::scalar(3.14159265358979323846 / 2), pivot);
    CHECK(local.at(0) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(local.at(1) == doctest::Approx(0.0).epsilon(1e-15));

    // a point below the pivot rotates consistently: R(-phi) (x - A)
    double phi = 0.6;
    Tensor below = Tensor::constant({1, 2}, {0.5, 0.9});  // 0.4 below pivot
    local = pendulum_local(below, Tensor::scalar(phi), pivot);
    CHECK(local.at(0) == doctest::Approx(std::sin(phi) * 0.4).epsilon(1e-12));
    CHECK(local.at(1) == doctest::Approx(std::cos(phi) * 0.4).epsilon(1e-12));
}

TEST_CASE("spring transform is a subtraction") {
    Tensor pts = Tensor::constant({1, 2}, {0.5, 0.5});
    Tensor local = spring_local(pts, Tensor::constant({2}, {0.2, 0.3}), Tensor::zeros({2}));
    CHECK(local.at(0) == doctest::Approx(0.3).epsilon(1e-15));
    CHECK(local.at(1) == doctest::Approx(0.2).epsilon(1e-15));
}

TEST_CASE("block and ball transforms") {
    // block: track at 45 degrees, arc position s*x down the track
    double ang = 3.14159265358979323846 / 4;
    Tensor pts = Tensor::constant({1, 2}, {0.0, 0.0});
    Tensor local = block_local(pts, Tensor::scalar(2.0), Tensor::zeros({2}),
                               Tensor::scalar(ang), Tensor::scalar(0.1));
    CHECK(local.at(0) == doctest::Approx(-0.2).epsilon(1e-12));
    CHECK(local.at(1) == doctest::Approx(0.0).epsilon(1e-12));

    Tensor bl = ball_local(Tensor::constant({1, 2}, {0.3, 0.4}),
                           Tensor::constant({2}, {1.0, 2.0}), Tensor::scalar(0.1));
    CHECK(bl.at(0) == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(bl.at(1) == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("gradient wrt pivot matches finite differences") {
    double err = grad_check(
        [](const std::vector<Tensor>& p) {
            Tensor pts = Tensor::constant({3, 2}, {0.1, 0.4, -0.6, 0.2, 0.8, -0.3});
            Tensor local = pendulum_local(pts, p[1], p[0]);
            Tensor w = Tensor::constant({3, 2}, {1.0, 0.7, -0.4, 1.3, 0.2, -0.9});
            return sum(mul(local, w));
        },
        {Tensor::constant({2}, {0.15, -0.25}), Tensor::scalar(0.7)}, 1e-6);
    CHECK(err < 1e-6);
}

TEST_CASE("zero motion means a fixed affine map") {
    Tensor pts = Tensor::constant({2, 2}, {0.3, 0.1, -0.2, 0.6});
    Tensor pivot = Tensor::constant({2}, {0.05, -0.4});
    Tensor a = pendulum_local(pts, Tensor::scalar(0.35), pivot);
    Tensor b = pendulum_local(pts, Tensor::scalar(0.35), pivot);
    for (int i = 0; i < 4; ++i) CHECK(a.at(i) == b.at(i));
}
