#include "physvid/dynamics.hpp"

#include <cmath>

namespace physvid {

Family family_from_string(const std::string& s) {
    if (s == "pendulum") return Family::Pendulum;
    if (s == "spring") return Family::Spring;
    if (s == "block") return Family::Block;
    if (s == "ball") return Family::Ball;
    throw ConfigError("unknown dynamics family '" + s + "'");
}

std::string family_to_string(Family f) {
    switch (f) {
        case Family::Pendulum: return "pendulum";
        case Family::Spring: return "spring";
        case Family::Block: return "block";
        case Family::Ball: return "ball";
    }
    return "?";
}

int state_dim(Family f) {
    switch (f) {
        case Family::Pendulum: return 2;
        case Family::Spring: return 8;
        case Family::Block: return 2;
        case Family::Ball: return 4;
    }
    return 0;
}

Tensor rhs_pendulum(const Tensor& z, const Tensor& length, const Tensor& damping, double g) {
    if (z.size() != 2) throw ShapeError("pendulum state must have 2 entries");
    if (!(length.value() > 0.0))
        throw NumericError("pendulum length must be positive, got " +
                           std::to_string(length.value()));
    Tensor phi = slice(z, 0, 1);
    Tensor omega = slice(z, 1, 1);
    Tensor domega = neg(add(mul(div(Tensor::scalar(g), length), sin(phi)),
                            mul(damping, omega)));
    return concat({omega, domega}, 0);
}

Tensor rhs_spring(const Tensor& z, const Tensor& k, const Tensor& l_rest) {
    if (z.size() != 8) throw ShapeError("spring state must have 8 entries");
    Tensor p1 = slice(z, 0, 2);
    Tensor p2 = slice(z, 2, 2);
    Tensor v = slice(z, 4, 4);
    Tensor diff = sub(p1, p2);
    Tensor sq = sum(mul(diff, diff));
    if (!(sq.value() > kSpringSeparationEps * kSpringSeparationEps))
        throw NumericError("spring separation " + std::to_string(std::sqrt(sq.value())) +
                           " below " + std::to_string(kSpringSeparationEps));
    Tensor dist = sqrt(sq);
    Tensor unit = div(diff, dist);
    // force on object 1 from object 2; unit masses so acceleration = force
    Tensor f1 = neg(mul(k, sub(diff, mul(mul(Tensor::scalar(2.0), l_rest), unit))));
    Tensor f2 = neg(f1);
    return concat({v, f1, f2}, 0);
}

Tensor rhs_block(const Tensor& z, const Tensor& alpha, const Tensor& mu, double g) {
    if (z.size() != 2) throw ShapeError("block state must have 2 entries");
    Tensor v = slice(z, 1, 1);
    Tensor accel = mul(Tensor::scalar(g), sub(sin(alpha), mul(mu, cos(alpha))));
    return concat({v, accel}, 0);
}

Tensor rhs_ball(const Tensor& z, double g) {
    if (z.size() != 4) throw ShapeError("ball state must have 4 entries");
    Tensor v = slice(z, 2, 2);
    return concat({v, Tensor::constant({2}, {0.0, g})}, 0);
}

Tensor eval_rhs(Family family, const Tensor& z, const RhsParams& p) {
    switch (family) {
        case Family::Pendulum: return rhs_pendulum(z, p.length, p.damping);
        case Family::Spring: return rhs_spring(z, p.k, p.l_rest);
        case Family::Block: return rhs_block(z, p.alpha, p.mu);
        case Family::Ball: return rhs_ball(z);
    }
    throw ConfigError("bad family");
}

namespace {

bool all_finite(const Tensor& t) {
    for (double v : t.values())
        if (!std::isfinite(v)) return false;
    return true;
}

}  // namespace

Trajectory integrate(Family family, const Tensor& z0, const RhsParams& params,
                     const std::vector<double>& times, int substeps) {
    if (times.empty()) throw NumericError("integrate: no query times");
    if (substeps < 1) throw NumericError("integrate: substeps must be >= 1");
    for (size_t i = 1; i < times.size(); ++i)
        if (!(times[i] > times[i - 1]))
            throw NumericError("integrate: times must be strictly increasing");
    if (z0.size() != state_dim(family))
        throw ShapeError("integrate: state dimension mismatch for family " +
                         family_to_string(family));

    Trajectory traj;
    traj.times = times;
    traj.states.reserve(times.size());
    traj.states.push_back(z0);

    Tensor z = z0;
    for (size_t i = 1; i < times.size(); ++i) {
        double h = (times[i] - times[i - 1]) / substeps;
        Tensor hh = Tensor::scalar(h);
        Tensor h2 = Tensor::scalar(h * 0.5);
        Tensor h6 = Tensor::scalar(h / 6.0);
        Tensor two = Tensor::scalar(2.0);
        for (int s = 0; s < substeps; ++s) {
            Tensor k1 = eval_rhs(family, z, params);
            Tensor k2 = eval_rhs(family, add(z, mul(h2, k1)), params);
            Tensor k3 = eval_rhs(family, add(z, mul(h2, k2)), params);
            Tensor k4 = eval_rhs(family, add(z, mul(hh, k3)), params);
            Tensor incr = add(add(k1, mul(two, add(k2, k3))), k4);
            z = add(z, mul(h6, incr));
            if (!all_finite(z))
                throw NumericError("integrate: non-finite state at t = " +
                                   std::to_string(times[i - 1] + (s + 1) * h));
        }
        traj.states.push_back(z);
    }
    return traj;
}

}  // namespace physvid
