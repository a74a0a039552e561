#include <doctest.h>

#include <cmath>

#include "physvid/tensor.hpp"

using namespace physvid;

TEST_CASE("forward basics") {
    CHECK(sigmoid(Tensor::scalar(0.0)).value() == doctest::Approx(0.5));
    CHECK(relu(Tensor::scalar(-1.0)).value() == 0.0);

    Tensor a = Tensor::constant({2, 2}, {1, 2, 3, 4});
    Tensor b = Tensor::constant({2, 1}, {1, 1});
    Tensor c = matmul(a, b);
    CHECK(c.shape() == Shape{2, 1});
    CHECK(c.at(0) == 3.0);
    CHECK(c.at(1) == 7.0);
}

TEST_CASE("forward identical with and without tape") {
    auto build = []() {
        Tensor x = Tensor::constant({3}, {0.3, -0.7, 1.9});
        return mul(sigmoid(x), add(x, Tensor::scalar(2.0)));
    };
    Tensor plain = build();
    Tensor x = Tensor::constant({3}, {0.3, -0.7, 1.9});
    Tape tape;
    tape.watch(x);
    Tensor taped = mul(sigmoid(x), add(x, Tensor::scalar(2.0)));
    for (int i = 0; i < 3; ++i) CHECK(plain.at(i) == taped.at(i));
}

TEST_CASE("backward simple gradients") {
    {
        Tensor x = Tensor::scalar(3.0);
        Tape tape;
        tape.watch(x);
        Tensor loss = mul(x, x);
        tape.backward(loss);
        CHECK(x.grad()[0] == doctest::Approx(6.0));
    }
    {
        Tensor x = Tensor::scalar(0.0);
        Tape tape;
        tape.watch(x);
        Tensor loss = sigmoid(x);
        tape.backward(loss);
        CHECK(x.grad()[0] == doctest::Approx(0.25));
    }
}

TEST_CASE("matmul gradient matches finite differences") {
    Rng rng(7);
    std::vector<double> wv(6), vv(3);
    for (auto& x : wv) x = rng.uniform(-1, 1);
    for (auto& x : vv) x = rng.uniform(-1, 1);
    Tensor w = Tensor::constant({2, 3}, wv);
    Tensor v = Tensor::constant({3, 1}, vv);
    double err = grad_check(
        [](const std::vector<Tensor>& p) { return sum(matmul(p[0], p[1])); },
        {w, v}, 1e-5);
    CHECK(err < 1e-6);
}

TEST_CASE("fan-out accumulates additively") {
    Tensor x = Tensor::constant({4}, {0.5, -1.5, 2.0, 0.25});
    double g_single[4], g_double[4];
    {
        Tensor xa = Tensor::constant({4}, {0.5, -1.5, 2.0, 0.25});
        Tape tape;
        tape.watch(xa);
        tape.backward(sum(mul(xa, xa)));
        for (int i = 0; i < 4; ++i) g_single[i] = xa.grad()[i];
    }
    {
        Tape tape;
        tape.watch(x);
        Tensor y = mul(x, x);
        tape.backward(add(sum(y), sum(y)));
        for (int i = 0; i < 4; ++i) g_double[i] = x.grad()[i];
    }
    for (int i = 0; i < 4; ++i) CHECK(g_double[i] == doctest::Approx(2.0 * g_single[i]));
}

TEST_CASE("every op kind matches central finite differences at random points") {
    Rng rng(12345);
    auto rand_vec = [&](size_t n, double lo, double hi) {
        std::vector<double> v(n);
        for (auto& x : v) x = rng.uniform(lo, hi);
        return v;
    };
    // fixed weights making the scalarized loss sensitive to every element;
    // frozen per call so grad_check probes one deterministic function
    auto make_weights = [&](const Shape& s) {
        std::vector<double> w(static_cast<size_t>(numel(s)));
        for (auto& x : w) x = rng.uniform(0.5, 1.5);
        return Tensor::constant(s, std::move(w));
    };
    auto weighted_sum_with = [](const Tensor& t, const Tensor& w) {
        return sum(mul(t, w));
    };

    for (int trial = 0; trial < 10; ++trial) {
        // binary element-wise ops away from kinks/ties
        Tensor a = Tensor::constant({6}, rand_vec(6, 0.2, 1.8));
        Tensor b = Tensor::constant({6}, rand_vec(6, 2.0, 3.5));
        Tensor s = Tensor::scalar(rng.uniform(0.3, 2.0));

        auto check1 = [&](auto fn) {
            Tensor w = make_weights({6});
            double e = grad_check(
                [&](const std::vector<Tensor>& p) { return weighted_sum_with(fn(p[0]), w); },
                {Tensor::constant({6}, rand_vec(6, 0.2, 1.6))}, 1e-5);
            CHECK(e < 1e-6);
        };
        Tensor w6 = make_weights({6});
        double e2 = grad_check(
            [&](const std::vector<Tensor>& p) {
                Tensor t = add(sub(mul(p[0], p[1]), div(p[0], p[1])), neg(p[0]));
                return weighted_sum_with(t, w6);
            },
            {a, b}, 1e-5);
        CHECK(e2 < 1e-6);

        double e3 = grad_check(
            [&](const std::vector<Tensor>& p) {
                return weighted_sum_with(add(mul(p[1], p[0]), div(p[0], p[1])), w6);
            },
            {a, s}, 1e-5);
        CHECK(e3 < 1e-6);

        check1([](const Tensor& t) { return physvid::sin(t); });
        check1([](const Tensor& t) { return physvid::cos(t); });
        check1([](const Tensor& t) { return physvid::exp(t); });
        check1([](const Tensor& t) { return physvid::log(t); });
        check1([](const Tensor& t) { return physvid::sqrt(t); });
        check1([](const Tensor& t) { return relu(t); });
        check1([](const Tensor& t) { return sigmoid(t); });
        check1([](const Tensor& t) { return physvid::pow(t, 1.7); });
        check1([](const Tensor& t) { return clamp(t, 0.5, 1.2); });
        check1([](const Tensor& t) { return softplus(t); });

        // reductions, concat, slice, maximum
        double e4 = grad_check(
            [&](const std::vector<Tensor>& p) {
                Tensor cat = concat({p[0], p[1]}, 0);
                return add(mean(cat), sum(slice(cat, 2, 5)));
            },
            {a, b}, 1e-5);
        CHECK(e4 < 1e-6);

        Tensor m1 = Tensor::constant({5}, rand_vec(5, 0.0, 1.0));
        Tensor m2 = Tensor::constant({5}, rand_vec(5, 1.01, 2.0));
        Tensor w5 = make_weights({5});
        double e5 = grad_check(
            [&](const std::vector<Tensor>& p) {
                return weighted_sum_with(maximum(p[0], p[1]), w5);
            },
            {m1, m2}, 1e-5);
        CHECK(e5 < 1e-6);

        // 2-d concat along columns + 2-d slice + matmul
        Tensor ca = Tensor::constant({3, 2}, rand_vec(6, -1, 1));
        Tensor cb = Tensor::constant({3, 3}, rand_vec(9, -1, 1));
        Tensor w33 = make_weights({3, 3});
        double e6 = grad_check(
            [&](const std::vector<Tensor>& p) {
                Tensor cat = concat({p[0], p[1]}, 1);            // 3x5
                Tensor sl = slice(cat, 0, 3, 1, 3);              // 3x3
                return weighted_sum_with(matmul(sl, p[1]), w33); // 3x3
            },
            {ca, cb}, 1e-5);
        CHECK(e6 < 1e-6);
    }
}

TEST_CASE("grad_check recognizes constants and quadratics") {
    Tensor x = Tensor::constant({3}, {1.0, 2.0, 3.0});
    double e_const = grad_check(
        [](const std::vector<Tensor>&) { return Tensor::scalar(4.2); }, {x}, 1e-5);
    CHECK(e_const == 0.0);

    double e_quad = grad_check(
        [](const std::vector<Tensor>& p) { return sum(mul(p[0], p[0])); }, {x}, 1e-5);
    CHECK(e_quad < 1e-7);
}

TEST_CASE("clamp has zero gradient outside the interval") {
    Tensor x = Tensor::constant({3}, {-1.0, 0.5, 2.0});
    Tape tape;
    tape.watch(x);
    tape.backward(sum(clamp(x, 0.0, 1.0)));
    CHECK(x.grad()[0] == 0.0);
    CHECK(x.grad()[1] == 1.0);
    CHECK(x.grad()[2] == 0.0);
}

TEST_CASE("maximum ties break toward the first operand") {
    Tensor a = Tensor::constant({2}, {0.7, 0.2});
    Tensor b = Tensor::constant({2}, {0.7, 0.9});
    Tape tape;
    tape.watch(a);
    tape.watch(b);
    tape.backward(sum(maximum(a, b)));
    CHECK(a.grad()[0] == 1.0);  // tie -> first operand
    CHECK(b.grad()[0] == 0.0);
    CHECK(a.grad()[1] == 0.0);
    CHECK(b.grad()[1] == 1.0);
}

TEST_CASE("error paths") {
    Tensor a = Tensor::constant({2}, {1, 2});
    Tensor b = Tensor::constant({3}, {1, 2, 3});
    CHECK_THROWS_AS(add(a, b), ShapeError);
    CHECK_THROWS_AS(matmul(Tensor::constant({2, 2}, {1, 2, 3, 4}),
                           Tensor::constant({3, 1}, {1, 2, 3})),
                    ShapeError);
    CHECK_THROWS_AS(physvid::log(Tensor::scalar(-1.0)), NumericError);
    CHECK_THROWS_AS(physvid::log(Tensor::scalar(0.0)), NumericError);
    CHECK_THROWS_AS(physvid::sqrt(Tensor::scalar(-4.0)), NumericError);

    {
        Tensor x = Tensor::scalar(1.0);
        Tape tape;
        tape.watch(x);
        Tensor v = mul(x, x);
        CHECK_THROWS_AS(tape.backward(add(v, Tensor::constant({2}, {1, 2}))), ShapeError);
    }
    {
        Tensor x = Tensor::scalar(1.0);
        Tape tape;
        tape.watch(x);
        Tensor loss = mul(x, x);
        tape.backward(loss);
        CHECK_THROWS_AS(tape.backward(loss), ShapeError);
    }
}

TEST_CASE("softplus inverse round-trips") {
    for (double y : {1e-3, 0.1, 1.0, 9.81, 45.0}) {
        CHECK(softplus_value(softplus_inverse(y)) == doctest::Approx(y).epsilon(1e-12));
    }
}
