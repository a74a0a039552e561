#include "physvid/fields.hpp"

#include <cmath>

namespace physvid {

FourierMapping FourierMapping::sample(int features, int dim, double sigma, Rng& rng) {
    std::vector<double> bv(static_cast<size_t>(features) * dim);
    for (auto& v : bv) v = sigma * rng.gaussian();
    return from_values(features, dim, sigma, std::move(bv));
}

FourierMapping FourierMapping::from_values(int features, int dim, double sigma,
                                           std::vector<double> b_values) {
    FourierMapping m;
    m.features = features;
    m.dim = dim;
    m.sigma = sigma;
    std::vector<double> bt(b_values.size());
    for (int f = 0; f < features; ++f)
        for (int d = 0; d < dim; ++d)
            bt[static_cast<size_t>(d) * features + f] = b_values[static_cast<size_t>(f) * dim + d];
    m.b = Tensor::constant({features, dim}, std::move(b_values));
    m.b_t = Tensor::constant({dim, features}, std::move(bt));
    return m;
}

Tensor fourier_features(const Tensor& x, const FourierMapping& mapping) {
    if (x.shape().size() != 2 || x.shape()[1] != mapping.dim)
        throw ShapeError("fourier_features: expected N x " + std::to_string(mapping.dim) +
                         " points, got " + shape_str(x.shape()));
    Tensor u = mul(matmul(x, mapping.b_t), Tensor::scalar(2.0 * 3.14159265358979323846));
    return concat({cos(u), sin(u)}, 1);
}

Mlp Mlp::create(int in_dim, int out_dim, int n_layers, int width, Rng& rng) {
    if (n_layers < 1) throw ConfigError("mlp needs at least one layer");
    Mlp mlp;
    int prev = in_dim;
    for (int i = 0; i < n_layers; ++i) {
        int out = (i == n_layers - 1) ? out_dim : width;
        double bound = 1.0 / std::sqrt(static_cast<double>(prev));
        std::vector<double> w(static_cast<size_t>(prev) * out);
        for (auto& v : w) v = rng.uniform(-bound, bound);
        std::vector<double> b(static_cast<size_t>(out));
        for (auto& v : b) v = rng.uniform(-bound, bound);
        mlp.weights.push_back(Tensor::constant({prev, out}, std::move(w)));
        mlp.biases.push_back(Tensor::constant({1, out}, std::move(b)));
        prev = out;
    }
    return mlp;
}

Tensor Mlp::forward(const Tensor& x) const {
    if (x.shape().size() != 2 || x.shape()[1] != weights.front().shape()[0])
        throw ShapeError("mlp forward: input shape " + shape_str(x.shape()) +
                         " does not match first layer " + shape_str(weights.front().shape()));
    int64_t n = x.shape()[0];
    Tensor ones = Tensor::full({n, 1}, 1.0);
    Tensor h = x;
    for (size_t i = 0; i < weights.size(); ++i) {
        h = add(matmul(h, weights[i]), matmul(ones, biases[i]));
        if (i + 1 < weights.size()) h = relu(h);
    }
    return sigmoid(h);
}

}  // namespace physvid
