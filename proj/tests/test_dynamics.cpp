#include <doctest.h>

#include <cmath>

#include "physvid/dynamics.hpp"

using namespace physvid;

namespace {
Tensor state(std::vector<double> v) {
    int64_t n = static_cast<int64_t>(v.size());
    return Tensor::constant({n}, std::move(v));
}
}  // namespace

TEST_CASE("pendulum rhs") {
    Tensor l = Tensor::scalar(1.0), c = Tensor::scalar(0.0);
    Tensor dz = rhs_pendulum(state({0, 0}), l, c);
    CHECK(dz.at(0) == 0.0);
    CHECK(dz.at(1) == 0.0);

    dz = rhs_pendulum(state({3.14159265358979323846 / 2, 0}), l, c);
    CHECK(dz.at(0) == 0.0);
    CHECK(dz.at(1) == doctest::Approx(-9.81).epsilon(1e-12));

    // independent direct evaluation of the formula
    double phi = 0.3, om = 1.2, lv = 2.0, cv = 0.5;
    double expect = -(9.81 / lv) * std::sin(phi) - cv * om;
    dz = rhs_pendulum(state({phi, om}), Tensor::scalar(lv), Tensor::scalar(cv));
    CHECK(dz.at(0) == doctest::Approx(om).epsilon(1e-12));
    CHECK(dz.at(1) == doctest::Approx(expect).epsilon(1e-12));

    CHECK_THROWS_AS(rhs_pendulum(state({0, 0}), Tensor::scalar(-1.0), c), NumericError);
}

TEST_CASE("spring rhs") {
    Tensor k = Tensor::scalar(1.0), l = Tensor::scalar(0.25);
    // separation exactly 2*l -> zero force
    Tensor dz = rhs_spring(state({0, 0, 0.5, 0, 0, 0, 0, 0}), k, l);
    for (int i = 4; i < 8; ++i) CHECK(dz.at(i) == doctest::Approx(0.0).epsilon(1e-15));

    // hand evaluation: p1=(0,0), p2=(1,0), k=1, l=0.25 -> F1 = (0.5, 0)
    dz = rhs_spring(state({0, 0, 1, 0, 0, 0, 0, 0}), k, l);
    CHECK(dz.at(4) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(dz.at(5) == doctest::Approx(0.0).epsilon(1e-12));

    // Newton's third law at 100 random states
    Rng rng(3);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> z(8);
        for (auto& v : z) v = rng.uniform(-1, 1);
        if (std::hypot(z[0] - z[2], z[1] - z[3]) < 1e-3) continue;
        Tensor d = rhs_spring(state(z), Tensor::scalar(rng.uniform(0.5, 4.0)),
                              Tensor::scalar(rng.uniform(0.1, 0.5)));
        CHECK(d.at(4) == doctest::Approx(-d.at(6)).epsilon(1e-12));
        CHECK(d.at(5) == doctest::Approx(-d.at(7)).epsilon(1e-12));
    }

    CHECK_THROWS_AS(rhs_spring(state({0, 0, 0, 0, 0, 0, 0, 0}), k, l), NumericError);
}

TEST_CASE("block rhs") {
    double a = 0.5;
    Tensor dz = rhs_block(state({0, 0}), Tensor::scalar(a), Tensor::scalar(std::tan(a)));
    CHECK(dz.at(1) == doctest::Approx(0.0).epsilon(1e-12));

    dz = rhs_block(state({0, 0}), Tensor::scalar(3.14159265358979323846 / 6), Tensor::scalar(0.0));
    CHECK(dz.at(1) == doctest::Approx(4.905).epsilon(1e-12));

    double alpha = 0.4, mu = 0.3;
    double expect = 9.81 * (std::sin(alpha) - mu * std::cos(alpha));
    dz = rhs_block(state({0.2, 1.5}), Tensor::scalar(alpha), Tensor::scalar(mu));
    CHECK(dz.at(0) == 1.5);
    CHECK(dz.at(1) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("ball rhs and closed form") {
    Tensor dz = rhs_ball(state({0.3, -0.2, 1.0, 2.0}));
    CHECK(dz.at(0) == 1.0);
    CHECK(dz.at(1) == 2.0);
    CHECK(dz.at(2) == 0.0);
    CHECK(dz.at(3) == 9.81);

    // RK4 is exact on polynomials: position matches the closed form at t=1
    RhsParams p;
    Tensor z0 = state({0.1, -0.3, 0.7, -1.2});
    Trajectory traj = integrate(Family::Ball, z0, p, {0.0, 1.0}, 10);
    double t = 1.0;
    CHECK(traj.at(1).at(0) == doctest::Approx(0.1 + 0.7 * t).epsilon(1e-12));
    CHECK(traj.at(1).at(1) ==
          doctest::Approx(-0.3 - 1.2 * t + 0.5 * 9.81 * t * t).epsilon(1e-9));
}

TEST_CASE("integrator fixed point") {
    RhsParams p;
    p.length = Tensor::scalar(1.0);
    p.damping = Tensor::scalar(0.2);
    Tensor z0 = state({0.0, 0.0});  // equilibrium: rhs vanishes identically
    Trajectory traj = integrate(Family::Pendulum, z0, p, {0.0, 0.5, 1.0, 2.0}, 25);
    for (size_t i = 0; i < traj.size(); ++i) {
        CHECK(traj.at(i).at(0) == 0.0);
        CHECK(traj.at(i).at(1) == 0.0);
    }
    // states[0] is z0 itself
    CHECK(traj.states[0].data().get() == z0.data().get());
}

TEST_CASE("integrator small-angle pendulum vs analytic") {
    RhsParams p;
    p.length = Tensor::scalar(1.0);
    p.damping = Tensor::scalar(0.0);
    Tensor z0 = state({0.01, 0.0});
    Trajectory traj = integrate(Family::Pendulum, z0, p, {0.0, 1.0}, 100);
    double analytic = 0.01 * std::cos(std::sqrt(9.81) * 1.0);
    CHECK(traj.at(1).at(0) == doctest::Approx(analytic).epsilon(1e-3));
    CHECK(std::abs(traj.at(1).at(0) - analytic) < 1e-5);
}

TEST_CASE("integrator convergence order >= 3.7") {
    RhsParams p;
    p.length = Tensor::scalar(0.7);
    p.damping = Tensor::scalar(0.3);
    Tensor z0 = state({1.1, -0.4});
    auto phi_at = [&](int substeps) {
        return integrate(Family::Pendulum, z0, p, {0.0, 1.0}, substeps).at(1).at(0);
    };
    double ref = phi_at(10000);
    double e1 = std::abs(phi_at(25) - ref);
    double e2 = std::abs(phi_at(50) - ref);
    double order = std::log2(e1 / e2);
    CHECK(order >= 3.7);
}

TEST_CASE("undamped pendulum energy drift < 1e-6 over 5 s") {
    RhsParams p;
    double l = 0.8;
    p.length = Tensor::scalar(l);
    p.damping = Tensor::scalar(0.0);
    Tensor z0 = state({1.0, 0.0});
    std::vector<double> times;
    for (int i = 0; i <= 150; ++i) times.push_back(i / 30.0);  // 30 fps, 5 s
    Trajectory traj = integrate(Family::Pendulum, z0, p, times, 100);
    auto energy = [&](const Tensor& z) {
        double phi = z.at(0), om = z.at(1);
        return 0.5 * l * l * om * om + 9.81 * l * (1.0 - std::cos(phi));
    };
    double e0 = energy(traj.at(0));
    for (size_t i = 0; i < traj.size(); ++i)
        CHECK(std::abs(energy(traj.at(i)) - e0) / e0 < 1e-6);
}

TEST_CASE("spring momentum conserved to 1e-9 over 5 s") {
    RhsParams p;
    p.k = Tensor::scalar(3.0);
    p.l_rest = Tensor::scalar(0.3);
    Tensor z0 = state({-0.4, 0.0, 0.4, 0.1, 0.2, -0.1, -0.1, 0.3});
    std::vector<double> times;
    for (int i = 0; i <= 50; ++i) times.push_back(i / 10.0 * 1.0);
    Trajectory traj = integrate(Family::Spring, z0, p, times, 40);
    double px0 = z0.at(4) + z0.at(6), py0 = z0.at(5) + z0.at(7);
    for (size_t i = 0; i < traj.size(); ++i) {
        CHECK(std::abs(traj.at(i).at(4) + traj.at(i).at(6) - px0) < 1e-9);
        CHECK(std::abs(traj.at(i).at(5) + traj.at(i).at(7) - py0) < 1e-9);
    }
}

TEST_CASE("gradient of phi(T) wrt length matches finite differences") {
    double err = grad_check(
        [](const std::vector<Tensor>& prm) {
            RhsParams p;
            p.length = prm[0];
            p.damping = prm[1];
            Trajectory traj = integrate(Family::Pendulum, prm[2], p, {0.0, 1.0}, 50);
            return slice(traj.at(1), 0, 1);
        },
        {Tensor::scalar(0.9), Tensor::scalar(0.25), state({0.8, 0.3})}, 1e-6);
    CHECK(err < 1e-5);
}

TEST_CASE("dense output consistent at matching step boundaries") {
    RhsParams p;
    p.length = Tensor::scalar(1.3);
    p.damping = Tensor::scalar(0.15);
    Tensor z0 = state({0.6, -0.2});
    Trajectory coarse = integrate(Family::Pendulum, z0, p, {0.0, 1.0}, 100);
    Trajectory fine = integrate(Family::Pendulum, z0, p, {0.0, 0.5, 1.0}, 50);
    CHECK(coarse.at(1).at(0) == fine.at(2).at(0));
    CHECK(coarse.at(1).at(1) == fine.at(2).at(1));
}

TEST_CASE("integrator input validation") {
    RhsParams p;
    p.length = Tensor::scalar(1.0);
    p.damping = Tensor::scalar(0.0);
    Tensor z0 = state({0.1, 0.0});
    CHECK_THROWS_AS(integrate(Family::Pendulum, z0, p, {0.0, 0.0}, 10), NumericError);
    CHECK_THROWS_AS(integrate(Family::Pendulum, z0, p, {0.0, 1.0}, 0), NumericError);
    CHECK_THROWS_AS(integrate(Family::Pendulum, state({1, 2, 3}), p, {0.0, 1.0}, 10),
                    ShapeError);
}
