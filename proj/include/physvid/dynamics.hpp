#pragma once

// The four parametric ODE right-hand sides and a fixed-step classical RK4
// integrator. Every arithmetic step is recorded on the active tape, so
// backward() yields exact gradients of the discrete solution with respect to
// the initial state and the physical parameters.

#include <string>
#include <vector>

#include "physvid/tensor.hpp"

namespace physvid {

enum class Family { Pendulum, Spring, Block, Ball };

Family family_from_string(const std::string& s);
std::string family_to_string(Family f);
int state_dim(Family f);

constexpr double kGravity = 9.81;        // m/s^2, fixed, not learned
constexpr double kSpringSeparationEps = 1e-6;

// Positive-space parameter tensors for the active family; unused members stay
// undefined.
struct RhsParams {
    Tensor length;  // pendulum, m
    Tensor damping; // pendulum, 1/s
    Tensor k;       // spring
    Tensor l_rest;  // spring, normalized units
    Tensor alpha;   // block incline vs gravity, rad
    Tensor mu;      // block friction coefficient
};

// state (phi, omega) -> (omega, -(g/l) sin phi - c omega)
Tensor rhs_pendulum(const Tensor& z, const Tensor& length, const Tensor& damping,
                    double g = kGravity);
// state (p1, p2, v1, v2), unit masses, Hooke force
// F_ij = -k((p_i - p_j) - 2 l (p_i - p_j)/|p_i - p_j|)
Tensor rhs_spring(const Tensor& z, const Tensor& k, const Tensor& l_rest);
// state (x, v) along the incline -> (v, g (sin a - mu cos a))
Tensor rhs_block(const Tensor& z, const Tensor& alpha, const Tensor& mu,
                 double g = kGravity);
// state (x, y, vx, vy), gravity along +y of the image frame
Tensor rhs_ball(const Tensor& z, double g = kGravity);

Tensor eval_rhs(Family family, const Tensor& z, const RhsParams& params);

struct Trajectory {
    std::vector<double> times;
    std::vector<Tensor> states;

    const Tensor& at(size_t i) const { return states[i]; }
    size_t size() const { return states.size(); }
};

// Classical RK4 with `substeps` uniform steps per inter-frame interval.
// times must be strictly increasing; states[0] is z0 itself.
Trajectory integrate(Family family, const Tensor& z0, const RhsParams& params,
                     const std::vector<double>& times, int substeps);

}  // namespace physvid
