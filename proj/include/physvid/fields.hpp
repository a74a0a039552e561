#pragma once

// Fourier-feature encodings and sigmoid-output MLPs representing the static
// background color field and per-object color+opacity fields.

#include <vector>

#include "physvid/common.hpp"
#include "physvid/tensor.hpp"

namespace physvid {

// gamma(x) = [cos(2 pi B x), sin(2 pi B x)], B in R^{features x dim} drawn
// from N(0, sigma^2) once at construction and never optimized.
struct FourierMapping {
    Tensor b;    // features x dim (the matrix of the definition)
    Tensor b_t;  // dim x features, same values, laid out for batched matmul
    double sigma = 1.0;
    int features = 0;
    int dim = 0;

    static FourierMapping sample(int features, int dim, double sigma, Rng& rng);
    static FourierMapping from_values(int features, int dim, double sigma,
                                      std::vector<double> b_values);
};

// x: N x dim points -> N x 2*features, cos block first.
Tensor fourier_features(const Tensor& x, const FourierMapping& mapping);

// N_FC fully connected layers of width W_FC, ReLU between layers, sigmoid on
// the output so every channel lands in (0,1). No skip connections.
struct Mlp {
    std::vector<Tensor> weights;  // layer i: (in_i x out_i)
    std::vector<Tensor> biases;   // layer i: (1 x out_i)

    static Mlp create(int in_dim, int out_dim, int n_layers, int width, Rng& rng);

    Tensor forward(const Tensor& x) const;  // x: N x in_dim
    int in_dim() const { return static_cast<int>(weights.front().shape()[0]); }
    int out_dim() const { return static_cast<int>(weights.back().shape()[1]); }
};

struct BackgroundField {
    FourierMapping mapping;
    Mlp net;  // 3 outputs (rgb)

    Tensor eval(const Tensor& x) const { return net.forward(fourier_features(x, mapping)); }
    // for precomputed features of static pixel grids
    Tensor eval_features(const Tensor& gamma) const { return net.forward(gamma); }
};

struct ObjectField {
    FourierMapping mapping;
    Mlp net;  // 4 outputs (rgb + opacity)

    // returns N x 4; callers slice color / opacity
    Tensor eval(const Tensor& x_local) const {
        return net.forward(fourier_features(x_local, mapping));
    }
};

}  // namespace physvid
