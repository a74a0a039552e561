#pragma once

// Reverse-mode automatic differentiation over a dynamically recorded tape.
//
// Tensors are real64 n-d arrays with value semantics on a shared buffer.
// Arithmetic on tensors is computed eagerly; when a Tape is active and at
// least one input is tracked, the operation is recorded so that
// Tape::backward() can accumulate d(loss)/d(tensor) for everything that
// contributed to a scalar loss. Element-wise ops broadcast only
// scalar-vs-array; matmul is strict 2-d.

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "physvid/common.hpp"

namespace physvid {

using Shape = std::vector<int64_t>;

int64_t numel(const Shape& s);
std::string shape_str(const Shape& s);

class Tape;

struct TensorData {
    Shape shape;
    std::vector<double> values;
    std::vector<double> grad;  // empty until backward needs it
    int64_t node = -1;         // index into tape_, -1 for constants
    Tape* tape = nullptr;
};

class Tensor {
public:
    Tensor() = default;

    static Tensor constant(Shape shape, std::vector<double> values);
    static Tensor scalar(double v);
    static Tensor zeros(Shape shape);
    static Tensor full(Shape shape, double v);

    bool defined() const { return static_cast<bool>(d_); }
    const Shape& shape() const { return d_->shape; }
    int64_t size() const { return static_cast<int64_t>(d_->values.size()); }
    bool is_scalar() const { return size() == 1; }

    std::span<const double> values() const { return d_->values; }
    // Direct mutation is only legal between tapes (parameter updates).
    std::span<double> values_mut() { return d_->values; }

    double value() const;        // scalar accessor
    double at(int64_t i) const { return d_->values[static_cast<size_t>(i)]; }

    bool has_grad() const { return d_ && !d_->grad.empty(); }
    std::span<const double> grad() const { return d_->grad; }

    bool on_tape() const { return d_ && d_->node >= 0; }

    std::shared_ptr<TensorData> data() const { return d_; }

private:
    friend class Tape;
    friend Tensor make_tensor(Shape, std::vector<double>);
    std::shared_ptr<TensorData> d_;
};

enum class OpKind {
    Add, Sub, Mul, Div, Neg, MatMul, Sum, Mean,
    Sin, Cos, Exp, Log, Sqrt, Relu, Sigmoid, Pow, Clamp,
    Concat, Slice, Maximum,
};

const char* op_name(OpKind k);

// Per-op attributes. Only the fields the op uses are meaningful.
struct OpAttrs {
    double scalar0 = 0.0;              // Pow exponent / Clamp lo
    double scalar1 = 0.0;              // Clamp hi
    int axis = 0;                      // Concat
    std::vector<int64_t> offsets;      // Slice: row0, nrows[, col0, ncols]
};

// The generic entry point; the named helpers below are thin wrappers.
Tensor record(OpKind kind, const std::vector<Tensor>& inputs,
              const OpAttrs& attrs = {});

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);
Tensor neg(const Tensor& a);
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
Tensor sin(const Tensor& a);
Tensor cos(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);
Tensor sqrt(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor pow(const Tensor& a, double exponent);
Tensor clamp(const Tensor& a, double lo, double hi);
Tensor concat(const std::vector<Tensor>& parts, int axis);
Tensor slice(const Tensor& a, int64_t offset, int64_t extent);  // 1-d
Tensor slice(const Tensor& a, int64_t row0, int64_t nrows, int64_t col0,
             int64_t ncols);  // 2-d
Tensor maximum(const Tensor& a, const Tensor& b);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }
inline Tensor operator/(const Tensor& a, const Tensor& b) { return div(a, b); }
inline Tensor operator-(const Tensor& a) { return neg(a); }
inline Tensor operator+(double a, const Tensor& b) { return add(Tensor::scalar(a), b); }
inline Tensor operator-(double a, const Tensor& b) { return sub(Tensor::scalar(a), b); }
inline Tensor operator*(double a, const Tensor& b) { return mul(Tensor::scalar(a), b); }
inline Tensor operator+(const Tensor& a, double b) { return add(a, Tensor::scalar(b)); }
inline Tensor operator-(const Tensor& a, double b) { return sub(a, Tensor::scalar(b)); }
inline Tensor operator*(const Tensor& a, double b) { return mul(a, Tensor::scalar(b)); }
inline Tensor operator/(const Tensor& a, double b) { return div(a, Tensor::scalar(b)); }

// softplus(x) = log(1 + exp(x)), used to keep physical parameters positive.
Tensor softplus(const Tensor& a);
double softplus_value(double x);
double softplus_inverse(double y);  // y > 0

class Tape {
public:
    Tape();
    ~Tape();
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    // Marks a tensor as a differentiable leaf (allocates a zeroed grad).
    void watch(Tensor& t);

    // Accumulates d(loss)/d(x) into every tracked tensor's grad. loss must be
    // a scalar recorded on this tape. Calling twice is an error.
    void backward(const Tensor& loss);

    size_t node_count() const { return nodes_.size(); }

    static Tape* active();

private:
    friend Tensor record(OpKind, const std::vector<Tensor>&, const OpAttrs&);

    struct Node {
        std::shared_ptr<TensorData> out;
        std::function<void()> back;  // empty for leaves
    };

    int64_t push(std::shared_ptr<TensorData> out, std::function<void()> back);

    std::vector<Node> nodes_;
    bool backward_done_ = false;
};

// Max over all parameter entries of |analytic - central_difference| /
// max(1, |central_difference|) for a scalar-valued function of the given
// tensors. The finite differences never touch the tape.
double grad_check(const std::function<Tensor(const std::vector<Tensor>&)>& fn,
                  std::vector<Tensor> point, double step);

}  // namespace physvid
