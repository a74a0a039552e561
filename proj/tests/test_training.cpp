#include <doctest.h>

#include <cmath>

#include "physvid/training.hpp"

using namespace physvid;

TEST_CASE("lr schedule") {
    CHECK(lr_schedule(0, 1e-3, 0.9, 25) == 1e-3);
    CHECK(lr_schedule(25, 1e-3, 0.9, 25) == doctest::Approx(1e-3 * 0.9).epsilon(1e-12));
    CHECK(lr_schedule(50, 9e-4, 0.9, 25) == doctest::Approx(7.29e-4).epsilon(1e-12));

    // strictly decreasing when beta < 1
    double prev = lr_schedule(0, 1e-3, 0.99, 10);
    for (int e = 1; e < 50; ++e) {
        double r = lr_schedule(e, 1e-3, 0.99, 10);
        CHECK(r < prev);
        prev = r;
    }
}

TEST_CASE("frame curriculum") {
    CHECK(frame_curriculum(0, 5, 10, 40) == 5);
    CHECK(frame_curriculum(25, 5, 10, 40) == 7);
    CHECK(frame_curriculum(1000000, 5, 10, 40) == 40);  // saturation

    int prev = 0;
    for (int64_t s = 0; s < 500; s += 7) {
        int a = frame_curriculum(s, 2, 30, 13);
        CHECK(a >= prev);
        CHECK(a <= 13);
        prev = a;
    }
}

TEST_CASE("adam step") {
    // zero gradient with fresh moments leaves parameters unchanged
    std::vector<double> params = {1.0, -2.0};
    std::vector<double> grads = {0.0, 0.0};
    AdamState st;
    adam_step(params, grads, st, 1, 0.1, 0.9, 0.999, 1e-8);
    CHECK(params[0] == 1.0);
    CHECK(params[1] == -2.0);

    // single step with g = 1: bias-corrected move of about -rate
    params = {0.0};
    grads = {1.0};
    AdamState st2;
    adam_step(params, grads, st2, 1, 0.1, 0.9, 0.999, 1e-8);
    CHECK(params[0] == doctest::Approx(-0.1).epsilon(1e-6));

    // two steps on f(x) = x^2 from x = 1 decrease f monotonically
    double x = 1.0;
    AdamState st3;
    std::vector<double> px = {x};
    double f_prev = x * x;
    for (int64_t t = 1; t <= 2; ++t) {
        std::vector<double> g = {2.0 * px[0]};
        adam_step(px, g, st3, t, 0.05, 0.9, 0.999, 1e-8);
        double f = px[0] * px[0];
        CHECK(f < f_prev);
        f_prev = f;
    }

    CHECK_THROWS_AS(adam_step(px, std::vector<double>{1.0, 2.0}, st3, 3, 0.1, 0.9, 0.999, 1e-8),
                    ShapeError);
}

TEST_CASE("gather rows") {
    Tensor src = Tensor::constant({3, 2}, {1, 2, 3, 4, 5, 6});
    Tensor got = gather_rows(src, {2, 0});
    CHECK(got.shape() == Shape{2, 2});
    CHECK(got.at(0) == 5.0);
    CHECK(got.at(1) == 6.0);
    CHECK(got.at(2) == 1.0);
    CHECK(got.at(3) == 2.0);
}
