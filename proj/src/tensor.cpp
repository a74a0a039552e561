#include "physvid/tensor.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <sstream>

namespace physvid {

namespace {

using EMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapM = Eigen::Map<EMat>;
using MapC = Eigen::Map<const EMat>;

constexpr int64_t kChunk = 4096;       // rows per parallel chunk (matmul)
constexpr int64_t kEwChunk = 1 << 15;  // elements per parallel chunk
constexpr int64_t kParMin = 1 << 15;   // below this, stay serial

thread_local Tape* g_active_tape = nullptr;

void ensure_grad(TensorData& d) {
    if (d.grad.empty()) d.grad.assign(d.values.size(), 0.0);
}

[[noreturn]] void shape_fail(OpKind kind, const std::vector<Tensor>& inputs,
                             const std::string& why) {
    std::ostringstream os;
    os << "op " << op_name(kind) << ": " << why << " (shapes:";
    for (const auto& t : inputs) os << " " << shape_str(t.shape());
    os << ")";
    throw ShapeError(os.str());
}

// Element-wise loop, chunk-parallel for large arrays.
template <typename F>
void ew_apply(int64_t n, F&& f) {
    if (n < kParMin) {
        f(0, n);
    } else {
        parallel_chunks(n, kEwChunk, [&](int64_t b, int64_t e) { f(b, e); });
    }
}

enum class Bc { Same, AScalar, BScalar };

Bc broadcast_kind(OpKind kind, const std::vector<Tensor>& in) {
    const auto& a = in[0];
    const auto& b = in[1];
    if (a.shape() == b.shape()) return Bc::Same;
    // scalar = single element; when both are single-element with different
    // shapes, the higher-rank operand keeps its shape
    if (b.is_scalar() && (!a.is_scalar() || a.shape().size() >= b.shape().size()))
        return Bc::BScalar;
    if (a.is_scalar()) return Bc::AScalar;
    shape_fail(kind, in, "element-wise shapes must match or one side be scalar");
}

}  // namespace

int64_t numel(const Shape& s) {
    int64_t n = 1;
    for (int64_t d : s) n *= d;
    return n;
}

std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << "[";
    for (size_t i = 0; i < s.size(); ++i) os << (i ? "x" : "") << s[i];
    os << "]";
    return os.str();
}

const char* op_name(OpKind k) {
    switch (k) {
        case OpKind::Add: return "add";
        case OpKind::Sub: return "sub";
        case OpKind::Mul: return "mul";
        case OpKind::Div: return "div";
        case OpKind::Neg: return "neg";
        case OpKind::MatMul: return "matmul";
        case OpKind::Sum: return "sum";
        case OpKind::Mean: return "mean";
        case OpKind::Sin: return "sin";
        case OpKind::Cos: return "cos";
        case OpKind::Exp: return "exp";
        case OpKind::Log: return "log";
        case OpKind::Sqrt: return "sqrt";
        case OpKind::Relu: return "relu";
        case OpKind::Sigmoid: return "sigmoid";
        case OpKind::Pow: return "pow";
        case OpKind::Clamp: return "clamp";
        case OpKind::Concat: return "concat";
        case OpKind::Slice: return "slice";
        case OpKind::Maximum: return "maximum";
    }
    return "?";
}

Tensor make_tensor(Shape shape, std::vector<double> values) {
    Tensor t;
    t.d_ = std::make_shared<TensorData>();
    t.d_->shape = std::move(shape);
    t.d_->values = std::move(values);
    return t;
}

Tensor Tensor::constant(Shape shape, std::vector<double> values) {
    if (numel(shape) != static_cast<int64_t>(values.size()))
        throw ShapeError("constant: value count does not match shape " + shape_str(shape));
    return make_tensor(std::move(shape), std::move(values));
}

Tensor Tensor::scalar(double v) { return make_tensor({1}, {v}); }

Tensor Tensor::zeros(Shape shape) {
    std::vector<double> v(static_cast<size_t>(numel(shape)), 0.0);
    return make_tensor(std::move(shape), std::move(v));
}

Tensor Tensor::full(Shape shape, double fill) {
    std::vector<double> v(static_cast<size_t>(numel(shape)), fill);
    return make_tensor(std::move(shape), std::move(v));
}

double Tensor::value() const {
    if (!is_scalar()) throw ShapeError("value(): tensor is not scalar, shape " + shape_str(shape()));
    return d_->values[0];
}

// ---------------------------------------------------------------------------
// Tape
// ---------------------------------------------------------------------------

Tape::Tape() {
    if (g_active_tape)
        throw ShapeError("a tape is already active on this thread");
    g_active_tape = this;
}

Tape::~Tape() {
    for (auto& node : nodes_) {
        node.out->node = -1;
        node.out->tape = nullptr;
        node.out->grad.clear();
        node.out->grad.shrink_to_fit();
    }
    g_active_tape = nullptr;
}

Tape* Tape::active() { return g_active_tape; }

int64_t Tape::push(std::shared_ptr<TensorData> out, std::function<void()> back) {
    out->node = static_cast<int64_t>(nodes_.size());
    out->tape = this;
    nodes_.push_back(Node{std::move(out), std::move(back)});
    return static_cast<int64_t>(nodes_.size()) - 1;
}

void Tape::watch(Tensor& t) {
    if (!t.defined()) throw ShapeError("watch: undefined tensor");
    if (t.on_tape()) {
        if (t.data()->tape != this)
            throw ShapeError("watch: tensor belongs to a different tape");
        return;
    }
    ensure_grad(*t.data());
    push(t.data(), {});
}

void Tape::backward(const Tensor& loss) {
    if (backward_done_)
        throw ShapeError("backward: tape already differentiated; record a fresh tape");
    if (!loss.is_scalar())
        throw ShapeError("backward: loss must be scalar, got shape " + shape_str(loss.shape()));
    if (!loss.on_tape() || loss.data()->tape != this)
        throw ShapeError("backward: loss does not belong to this tape");
    backward_done_ = true;
    ensure_grad(*loss.data());
    loss.data()->grad[0] = 1.0;
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
        if (it->back && !it->out->grad.empty()) it->back();
    }
}

// ---------------------------------------------------------------------------
// record(): eager forward + optional node
// ---------------------------------------------------------------------------

namespace {

struct FwdResult {
    Tensor out;
    std::function<void()> back;  // set only if recording
};

// Binary element-wise forward with scalar broadcast.
template <typename FV>
Tensor ew_binary_fwd(const Tensor& a, const Tensor& b, Bc bc, FV&& fv) {
    const auto& av = a.values();
    const auto& bv = b.values();
    Shape out_shape = (bc == Bc::AScalar) ? b.shape() : a.shape();
    std::vector<double> out(static_cast<size_t>(numel(out_shape)));
    int64_t n = static_cast<int64_t>(out.size());
    switch (bc) {
        case Bc::Same:
            ew_apply(n, [&](int64_t lo, int64_t hi) {
                for (int64_t i = lo; i < hi; ++i) out[i] = fv(av[i], bv[i]);
            });
            break;
        case Bc::AScalar: {
            double s = av[0];
            ew_apply(n, [&](int64_t lo, int64_t hi) {
                for (int64_t i = lo; i < hi; ++i) out[i] = fv(s, bv[i]);
            });
            break;
        }
        case Bc::BScalar: {
            double s = bv[0];
            ew_apply(n, [&](int64_t lo, int64_t hi) {
                for (int64_t i = lo; i < hi; ++i) out[i] = fv(av[i], s);
            });
            break;
        }
    }
    return make_tensor(std::move(out_shape), std::move(out));
}

// Accumulates src-sized gradient `g(i)` into dst, which is either the same
// shape or a scalar (then the contributions are summed, serially for
// determinism).
template <typename G>
void accum_grad(TensorData& dst, int64_t n, bool dst_scalar, G&& g) {
    ensure_grad(dst);
    if (dst_scalar && n > 1) {
        double acc = 0.0;
        for (int64_t i = 0; i < n; ++i) acc += g(i);
        dst.grad[0] += acc;
    } else {
        ew_apply(n, [&](int64_t lo, int64_t hi) {
            for (int64_t i = lo; i < hi; ++i) dst.grad[i] += g(i);
        });
    }
}

}  // namespace

Tensor record(OpKind kind, const std::vector<Tensor>& in, const OpAttrs& attrs) {
    for (const auto& t : in)
        if (!t.defined()) shape_fail(kind, in, "undefined input tensor");

    Tape* tape = Tape::active();
    bool track = false;
    for (const auto& t : in) {
        if (!t.on_tape()) continue;
        if (t.data()->tape != tape)
            throw ShapeError(std::string("op ") + op_name(kind) +
                             ": input belongs to a different tape");
        track = true;
    }
    track = track && tape != nullptr;

    Tensor out;
    std::function<void()> back;

    switch (kind) {
        case OpKind::Add: {
            Bc bc = broadcast_kind(kind, in);
            out = ew_binary_fwd(in[0], in[1], bc, [](double x, double y) { return x + y; });
            if (track) {
                auto a = in[0].data(), b = in[1].data(), o = out.data();
                back = [a, b, o, bc]() {
                    int64_t n = static_cast<int64_t>(o->grad.size());
                    accum_grad(*a, n, bc == Bc::AScalar, [&](int64_t i) { return o->grad[i]; });
                    accum_grad(*b, n, bc == Bc::BScalar, [&](int64_t i) { return o->grad[i]; });
                };
            }
            break;
        }
        case OpKind::Sub: {
            Bc bc = broadcast_kind(kind, in);
            out = ew_binary_fwd(in[0], in[1], bc, [](double x, double y) { return x - y; });
            if (track) {
                auto a = in[0].data(), b = in[1].data(), o = out.data();
                back = [a, b, o, bc]() {
                    int64_t n = static_cast<int64_t>(o->grad.size());
                    accum_grad(*a, n, bc == Bc::AScalar, [&](int64_t i) { return o->grad[i]; });
                    accum_grad(*b, n, bc == Bc::BScalar, [&](int64_t i) { return -o->grad[i]; });
                };
            }
            break;
        }
        case OpKind::Mul: {
            Bc bc = broadcast_kind(kind, in);
            out = ew_binary_fwd(in[0], in[1], bc, [](double x, double y) { return x * y; });
            if (track) {
                auto a = in[0].data(), b = in[1].data(), o = out.data();
                back = [a, b, o, bc]() {
                    int64_t n = static_cast<int64_t>(o->grad.size());
                    auto aval = [&](int64_t i) { return a->values[a->values.size() == 1 ? 0 : i]; };
                    auto bval = [&](int64_t i) { return b->values[b->values.size() == 1 ? 0 : i]; };
                    accum_grad(*a, n, bc == Bc::AScalar,
                               [&](int64_t i) { return o->grad[i] * bval(i); });
                    accum_grad(*b, n, bc == Bc::BScalar,
                               [&](int64_t i) { return o->grad[i] * aval(i); });
                };
            }
            break;
        }
        case OpKind::Div: {
            Bc bc = broadcast_kind(kind, in);
            out = ew_binary_fwd(in[0], in[1], bc, [](double x, double y) { return x / y; });
            if (track) {
                auto a = in[0].data(), b = in[1].data(), o = out.data();
                back = [a, b, o, bc]() {
                    int64_t n = static_cast<int64_t>(o->grad.size());
                    auto aval = [&](int64_t i) { return a->values[a->values.size() == 1 ? 0 : i]; };
                    auto bval = [&](int64_t i) { return b->values[b->values.size() == 1 ? 0 : i]; };
                    accum_grad(*a, n, bc == Bc::AScalar,
                               [&](int64_t i) { return o->grad[i] / bval(i); });
                    accum_grad(*b, n, bc == Bc::BScalar, [&](int64_t i) {
                        double bv = bval(i);
                        return -o->grad[i] * aval(i) / (bv * bv);
                    });
                };
            }
            break;
        }
        case OpKind::Neg: {
            const auto& av = in[0].values();
            std::vector<double> v(av.begin(), av.end());
            for (auto& x : v) x = -x;
            out = make_tensor(in[0].shape(), std::move(v));
            if (track) {
                auto a = in[0].data(), o = out.data();
                back = [a, o]() {
                    accum_grad(*a, static_cast<int64_t>(o->grad.size()), false,
                               [&](int64_t i) { return -o->grad[i]; });
                };
            }
            break;
        }
        case OpKind::MatMul: {
            if (in[0].shape().size() != 2 || in[1].shape().size() != 2)
                shape_fail(kind, in, "matmul needs 2-d operands");
            int64_t n = in[0].shape()[0], k = in[0].shape()[1];
            int64_t k2 = in[1].shape()[0], m = in[1].shape()[1];
            if (k != k2) shape_fail(kind, in, "inner dimensions disagree");
            std::vector<double> cv(static_cast<size_t>(n * m));
            {
                MapC A(in[0].values().data(), n, k);
                MapC B(in[1].values().data(), k, m);
                if (n >= 2 * kChunk) {
                    parallel_chunks(n, kChunk, [&](int64_t r0, int64_t r1) {
                        MapM(cv.data() + r0 * m, r1 - r0, m).noalias() =
                            A.middleRows(r0, r1 - r0) * B;
                    });
                } else {
                    MapM(cv.data(), n, m).noalias() = A * B;
                }
            }
            out = make_tensor({n, m}, std::move(cv));
            if (track) {
                auto a = in[0].data(), b = in[1].data(), o = out.data();
                back = [a, b, o, n, k, m]() {
                    MapC A(a->values.data(), n, k);
                    MapC B(b->values.data(), k, m);
                    MapC dC(o->grad.data(), n, m);
                    ensure_grad(*a);
                    ensure_grad(*b);
                    MapM dA(a->grad.data(), n, k);
                    if (n >= 2 * kChunk) {
                        parallel_chunks(n, kChunk, [&](int64_t r0, int64_t r1) {
                            dA.middleRows(r0, r1 - r0).noalias() +=
                                dC.middleRows(r0, r1 - r0) * B.transpose();
                        });
                        // dB partials per row-chunk, reduced in chunk order
                        int64_t n_chunks = (n + kChunk - 1) / kChunk;
                        std::vector<EMat> partial(static_cast<size_t>(n_chunks));
                        parallel_chunks(n, kChunk, [&](int64_t r0, int64_t r1) {
                            partial[static_cast<size_t>(r0 / kChunk)] =
                                A.middleRows(r0, r1 - r0).transpose() * dC.middleRows(r0, r1 - r0);
                        });
                        MapM dB(b->grad.data(), k, m);
                        for (const auto& p : partial) dB.noalias() += p;
                    } else {
                        dA.noalias() += dC * B.transpose();
                        MapM(b->grad.data(), k, m).noalias() += A.transpose() * dC;
                    }
                };
            }
            break;
        }
        case OpKind::Sum:
        case OpKind::Mean: {
            const auto& av = in[0].values();
            double acc = 0.0;
            for (double x : av) acc += x;
            int64_t n = static_cast<int64_t>(av.size());
            double scale = (kind == OpKind::Mean) ? 1.0 / static_cast<double>(n) : 1.0;
            out = Tensor::scalar(acc * scale);
            if (track) {
                auto a = in[0].data(), o = out.data();
                back = [a, o, n, scale]() {
                    double g = o->grad[0] * scale;
                    ensure_grad(*a);
                    ew_apply(n, [&](int64_t lo, int64_t hi) {
                        for (int64_t i = lo; i < hi; ++i) a->grad[i] += g;
                    });
                };
            }
            break;
        }
        case OpKind::Sin:
        case OpKind::Cos: {
            const auto& av = in[0].values();
            int64_t n = static_cast<int64_t>(av.size());
            std::vector<double> v(static_cast<size_t>(n));
            auto deriv = std::make_shared<std::vector<double>>(static_cast<size_t>(n));
            bool is_sin = kind == OpKind::Sin;
            ew_apply(n, [&](int64_t lo, int64_t hi) {
                for (int64_t i = lo; i < hi; ++i) {
                    double s, c;
                    ::sincos(av[i], &s, &c);
                    v[i] = is_sin ? s : c;
                    (*deriv)[i] = is_sin ? c : -s;
                }
            });
            out = make_tensor(in[0].shape(), std::move(v));
            if (track) {
                auto a = in[0].data(), o = out.data();
                back = [a, o, deriv, n]() {
                    accum_grad(*a, n, false,
                               [&](int64_t i) { return o->grad[i] * (*deriv)[i]; });
                };
            }
            break;
        }
        case OpKind::Exp: {
            const auto& av = in[0].values();
            int64_t n = static_cast<int64_t>(av.size());
            std::vector<double> v(static_cast<size_t>(n));
            ew_apply(n, [&](int64_t lo, int64_t hi) {
                for (int64_t i = lo; i < hi; ++i) v[i] = std::exp(av[i]);
            });
            out = make_tensor(in[0].shape(), std::move(v));
            if (track) {
                auto a = in[0].data(), o = out.data();
                back = [a, o, n]() {
                    accum_grad(*a, n, false,
                               [&](int64_t i) { return o->grad[i] * o->values[i]; });
                };
            }
            break;
        }
        case OpKind::Log: {
            const auto& av = in[0].values();
            int64_t n = static_cast<int64_t>(av.size());
            std::vector<double> v(static_cast<size_t>(n));
            for (int64_t i = 0; i < n; ++i) {
                if (!(av[i] > 0.0))
                    throw NumericError("log of non-positive input " + std::to_string(av[i]));
                v[i] = std::log(av[i]);
            }
            out = make_tensor(in[0].shape(), std::move(v));
            if (track) {
                auto a = in[0].data(), o = out.data();
                back = [a, o, n]() {
                    accum_grad(*a, n, false,
                               [&](int64_t i) { return o->grad[i] / a->values[i]; });
                };
            }
            break;
        }
        case OpKind::Sqrt: {
            const auto& av = in[0].values();
            int64_t n = static_cast<int64_t>(av.size());
            std::vector<double> v(static_cast<size_t>(n));
            for (int64_t i = 0; i < n; ++i) {
                if (!(av[i] > 0.0))
                    throw NumericError("sqrt of non-positive input " + std::to_string(av[i]));
                v[i] = std::sqrt(av[i]);
            }
            out = make_tensor(in[0].shape(), std::move(v));
            if (track) {
                auto a = in[0].data(), o = out.data();
                back = [a, o, n]() {
                    accum_grad(*a, n, false,
                               [&](int64_t i) { return o->grad[i] * 0.5 / o->values[i]; });
                };
            }
            break;
        }
        case OpKind::Relu: {
            const auto& av = in[0].values();
            int64_t n = static_cast<int64_t>(av.size());
            std::vector<double> v(static_cast<size_t>(n));
            ew_apply(n, [&](int64_t lo, int64_t hi) {
                for (int64_t i = lo; i < hi; ++i) v[i] = av[i] > 0.0 ? av[i] : 0.0;
            });
            out = make_tensor(in[0].shape(), std::move(v));
            if (track) {
                auto a = in[0].data(), o = out.data();
                back = [a, o, n]() {
                    accum_grad(*a, n, false, [&](int64_t i) {
                        return a->values[i] > 0.0 ? o->grad[i] : 0.0;
                    });
                };
            }
            break;
        }
        case OpKind::Sigmoid: {
            const auto& av = in[0].values();
            int64_t n = static_cast<int64_t>(av.size());
            std::vector<double> v(static_cast<size_t>(n));
            ew_apply(n, [&](int64_t lo, int64_t hi) {
                for (int64_t i = lo; i < hi; ++i) {
                    double x = av[i];
                    v[i] = x >= 0.0 ? 1.0 / (1.0 + std::exp(-x))
                                    : std::exp(x) / (1.0 + std::exp(x));
                }
            });
            out = make_tensor(in[0].shape(), std::move(v));
            if (track) {
                auto a = in[0].data(), o = out.data();
                back = [a, o, n]() {
                    accum_grad(*a, n, false, [&](int64_t i) {
                        double s = o->values[i];
                        return o->grad[i] * s * (1.0 - s);
                    });
                };
            }
            break;
        }
        case OpKind::Pow: {
            const auto& av = in[0].values();
            double p = attrs.scalar0;
            int64_t n = static_cast<int64_t>(av.size());
            std::vector<double> v(static_cast<size_t>(n));
            for (int64_t i = 0; i < n; ++i) {
                v[i] = std::pow(av[i], p);
                if (!std::isfinite(v[i]))
                    throw NumericError("pow(" + std::to_string(av[i]) + ", " +
                                       std::to_string(p) + ") is not finite");
            }
            out = make_tensor(in[0].shape(), std::move(v));
            if (track) {
                auto a = in[0].data(), o = out.data();
                back = [a, o, n, p]() {
                    accum_grad(*a, n, false, [&](int64_t i) {
                        return o->grad[i] * p * std::pow(a->values[i], p - 1.0);
                    });
                };
            }
            break;
        }
        case OpKind::Clamp: {
            double lo = attrs.scalar0, hi = attrs.scalar1;
            if (!(lo <= hi)) shape_fail(kind, in, "clamp interval is empty");
            const auto& av = in[0].values();
            int64_t n = static_cast<int64_t>(av.size());
            std::vector<double> v(static_cast<size_t>(n));
            ew_apply(n, [&](int64_t b, int64_t e) {
                for (int64_t i = b; i < e; ++i) v[i] = std::clamp(av[i], lo, hi);
            });
            out = make_tensor(in[0].shape(), std::move(v));
            if (track) {
                auto a = in[0].data(), o = out.data();
                // zero subgradient outside the interval
                back = [a, o, n, lo, hi]() {
                    accum_grad(*a, n, false, [&](int64_t i) {
                        double x = a->values[i];
                        return (x >= lo && x <= hi) ? o->grad[i] : 0.0;
                    });
                };
            }
            break;
        }
        case OpKind::Concat: {
            if (in.empty()) shape_fail(kind, in, "concat needs at least one part");
            int axis = attrs.axis;
            size_t rank = in[0].shape().size();
            if (rank == 1) {
                if (axis != 0) shape_fail(kind, in, "1-d concat only along axis 0");
                int64_t total = 0;
                for (const auto& t : in) {
                    if (t.shape().size() != 1) shape_fail(kind, in, "rank mismatch");
                    total += t.size();
                }
                std::vector<double> v;
                v.reserve(static_cast<size_t>(total));
                for (const auto& t : in) v.insert(v.end(), t.values().begin(), t.values().end());
                out = make_tensor({total}, std::move(v));
                if (track) {
                    std::vector<std::shared_ptr<TensorData>> parts;
                    for (const auto& t : in) parts.push_back(t.data());
                    auto o = out.data();
                    back = [parts, o]() {
                        int64_t off = 0;
                        for (auto& p : parts) {
                            int64_t n = static_cast<int64_t>(p->values.size());
                            ensure_grad(*p);
                            for (int64_t i = 0; i < n; ++i) p->grad[i] += o->grad[off + i];
                            off += n;
                        }
                    };
                }
            } else if (rank == 2) {
                int64_t rows = in[0].shape()[0], cols = in[0].shape()[1];
                if (axis == 0) {
                    int64_t total = 0;
                    for (const auto& t : in) {
                        if (t.shape().size() != 2 || t.shape()[1] != cols)
                            shape_fail(kind, in, "column counts disagree");
                        total += t.shape()[0];
                    }
                    std::vector<double> v;
                    v.reserve(static_cast<size_t>(total * cols));
                    for (const auto& t : in) v.insert(v.end(), t.values().begin(), t.values().end());
                    out = make_tensor({total, cols}, std::move(v));
                    if (track) {
                        std::vector<std::shared_ptr<TensorData>> parts;
                        for (const auto& t : in) parts.push_back(t.data());
                        auto o = out.data();
                        back = [parts, o]() {
                            int64_t off = 0;
                            for (auto& p : parts) {
                                int64_t n = static_cast<int64_t>(p->values.size());
                                ensure_grad(*p);
                                ew_apply(n, [&](int64_t b, int64_t e) {
                                    for (int64_t i = b; i < e; ++i) p->grad[i] += o->grad[off + i];
                                });
                                off += n;
                            }
                        };
                    }
                } else if (axis == 1) {
                    int64_t total_cols = 0;
                    for (const auto& t : in) {
                        if (t.shape().size() != 2 || t.shape()[0] != rows)
                            shape_fail(kind, in, "row counts disagree");
                        total_cols += t.shape()[1];
                    }
                    std::vector<double> v(static_cast<size_t>(rows * total_cols));
                    int64_t coff = 0;
                    for (const auto& t : in) {
                        int64_t tc = t.shape()[1];
                        const auto& tv = t.values();
                        ew_apply(rows, [&](int64_t b, int64_t e) {
                            for (int64_t r = b; r < e; ++r)
                                std::copy_n(tv.data() + r * tc, tc,
                                            v.data() + r * total_cols + coff);
                        });
                        coff += tc;
                    }
                    out = make_tensor({rows, total_cols}, std::move(v));
                    if (track) {
                        std::vector<std::shared_ptr<TensorData>> parts;
                        for (const auto& t : in) parts.push_back(t.data());
                        auto o = out.data();
                        back = [parts, o, rows, total_cols]() {
                            int64_t coff2 = 0;
                            for (auto& p : parts) {
                                int64_t tc = p->shape[1];
                                ensure_grad(*p);
                                ew_apply(rows, [&](int64_t b, int64_t e) {
                                    for (int64_t r = b; r < e; ++r)
                                        for (int64_t c = 0; c < tc; ++c)
                                            p->grad[r * tc + c] +=
                                                o->grad[r * total_cols + coff2 + c];
                                });
                                coff2 += tc;
                            }
                        };
                    }
                } else {
                    shape_fail(kind, in, "concat axis must be 0 or 1");
                }
            } else {
                shape_fail(kind, in, "concat supports rank 1 or 2");
            }
            break;
        }
        case OpKind::Slice: {
            const auto& off = attrs.offsets;
            if (in[0].shape().size() == 1) {
                if (off.size() != 2) shape_fail(kind, in, "1-d slice needs offset,extent");
                int64_t o0 = off[0], len = off[1];
                if (o0 < 0 || len <= 0 || o0 + len > in[0].size())
                    shape_fail(kind, in, "slice out of range");
                const auto& av = in[0].values();
                std::vector<double> v(av.begin() + o0, av.begin() + o0 + len);
                out = make_tensor({len}, std::move(v));
                if (track) {
                    auto a = in[0].data(), o = out.data();
                    back = [a, o, o0, len]() {
                        ensure_grad(*a);
                        for (int64_t i = 0; i < len; ++i) a->grad[o0 + i] += o->grad[i];
                    };
                }
            } else if (in[0].shape().size() == 2) {
                if (off.size() != 4) shape_fail(kind, in, "2-d slice needs row0,nrows,col0,ncols");
                int64_t r0 = off[0], nr = off[1], c0 = off[2], nc = off[3];
                int64_t rows = in[0].shape()[0], cols = in[0].shape()[1];
                if (r0 < 0 || nr <= 0 || r0 + nr > rows || c0 < 0 || nc <= 0 || c0 + nc > cols)
                    shape_fail(kind, in, "slice out of range");
                const auto& av = in[0].values();
                std::vector<double> v(static_cast<size_t>(nr * nc));
                ew_apply(nr, [&](int64_t b, int64_t e) {
                    for (int64_t r = b; r < e; ++r)
                        std::copy_n(av.data() + (r0 + r) * cols + c0, nc, v.data() + r * nc);
                });
                out = make_tensor({nr, nc}, std::move(v));
                if (track) {
                    auto a = in[0].data(), o = out.data();
                    back = [a, o, r0, nr, c0, nc, cols]() {
                        ensure_grad(*a);
                        ew_apply(nr, [&](int64_t b, int64_t e) {
                            for (int64_t r = b; r < e; ++r)
                                for (int64_t c = 0; c < nc; ++c)
                                    a->grad[(r0 + r) * cols + c0 + c] += o->grad[r * nc + c];
                        });
                    };
                }
            } else {
                shape_fail(kind, in, "slice supports rank 1 or 2");
            }
            break;
        }
        case OpKind::Maximum: {
            Bc bc = broadcast_kind(kind, in);
            out = ew_binary_fwd(in[0], in[1], bc,
                                [](double x, double y) { return x >= y ? x : y; });
            if (track) {
                auto a = in[0].data(), b = in[1].data(), o = out.data();
                // ties route the gradient to the first operand
                back = [a, b, o, bc]() {
                    int64_t n = static_cast<int64_t>(o->grad.size());
                    auto aval = [&](int64_t i) { return a->values[a->values.size() == 1 ? 0 : i]; };
                    auto bval = [&](int64_t i) { return b->values[b->values.size() == 1 ? 0 : i]; };
                    accum_grad(*a, n, bc == Bc::AScalar, [&](int64_t i) {
                        return aval(i) >= bval(i) ? o->grad[i] : 0.0;
                    });
                    accum_grad(*b, n, bc == Bc::BScalar, [&](int64_t i) {
                        return aval(i) >= bval(i) ? 0.0 : o->grad[i];
                    });
                };
            }
            break;
        }
    }

    if (track) {
        // keep inputs alive through backward via the closure; leaves carry no back fn
        Tape::active()->push(out.data(), std::move(back));
    }
    return out;
}

Tensor add(const Tensor& a, const Tensor& b) { return record(OpKind::Add, {a, b}); }
Tensor sub(const Tensor& a, const Tensor& b) { return record(OpKind::Sub, {a, b}); }
Tensor mul(const Tensor& a, const Tensor& b) { return record(OpKind::Mul, {a, b}); }
Tensor div(const Tensor& a, const Tensor& b) { return record(OpKind::Div, {a, b}); }
Tensor neg(const Tensor& a) { return record(OpKind::Neg, {a}); }
Tensor matmul(const Tensor& a, const Tensor& b) { return record(OpKind::MatMul, {a, b}); }
Tensor sum(const Tensor& a) { return record(OpKind::Sum, {a}); }
Tensor mean(const Tensor& a) { return record(OpKind::Mean, {a}); }
Tensor sin(const Tensor& a) { return record(OpKind::Sin, {a}); }
Tensor cos(const Tensor& a) { return record(OpKind::Cos, {a}); }
Tensor exp(const Tensor& a) { return record(OpKind::Exp, {a}); }
Tensor log(const Tensor& a) { return record(OpKind::Log, {a}); }
Tensor sqrt(const Tensor& a) { return record(OpKind::Sqrt, {a}); }
Tensor relu(const Tensor& a) { return record(OpKind::Relu, {a}); }
Tensor sigmoid(const Tensor& a) { return record(OpKind::Sigmoid, {a}); }
Tensor pow(const Tensor& a, double exponent) {
    OpAttrs at;
    at.scalar0 = exponent;
    return record(OpKind::Pow, {a}, at);
}
Tensor clamp(const Tensor& a, double lo, double hi) {
    OpAttrs at;
    at.scalar0 = lo;
    at.scalar1 = hi;
    return record(OpKind::Clamp, {a}, at);
}
Tensor concat(const std::vector<Tensor>& parts, int axis) {
    OpAttrs at;
    at.axis = axis;
    return record(OpKind::Concat, parts, at);
}
Tensor slice(const Tensor& a, int64_t offset, int64_t extent) {
    OpAttrs at;
    at.offsets = {offset, extent};
    return record(OpKind::Slice, {a}, at);
}
Tensor slice(const Tensor& a, int64_t row0, int64_t nrows, int64_t col0, int64_t ncols) {
    OpAttrs at;
    at.offsets = {row0, nrows, col0, ncols};
    return record(OpKind::Slice, {a}, at);
}
Tensor maximum(const Tensor& a, const Tensor& b) { return record(OpKind::Maximum, {a, b}); }

Tensor softplus(const Tensor& a) { return log(add(Tensor::scalar(1.0), exp(a))); }

double softplus_value(double x) { return std::log1p(std::exp(x)); }

double softplus_inverse(double y) {
    if (!(y > 0.0)) throw NumericError("softplus_inverse requires a positive value");
    // log(exp(y) - 1), stable for large y
    return y > 30.0 ? y : std::log(std::expm1(y));
}

double grad_check(const std::function<Tensor(const std::vector<Tensor>&)>& fn,
                  std::vector<Tensor> point, double step) {
    if (!(step > 0.0)) throw NumericError("grad_check: step must be positive");
    std::vector<std::vector<double>> analytic;
    {
        Tape tape;
        for (auto& p : point) tape.watch(p);
        Tensor loss = fn(point);
        if (!loss.is_scalar())
            throw ShapeError("grad_check: function must evaluate to a scalar");
        if (!std::isfinite(loss.value()))
            throw NumericError("grad_check: non-finite function value at base point");
        if (loss.on_tape()) tape.backward(loss);  // constants have zero gradient
        for (const auto& p : point) {
            auto g = p.grad();
            analytic.emplace_back(g.begin(), g.end());
            if (analytic.back().empty())
                analytic.back().assign(static_cast<size_t>(p.size()), 0.0);
        }
    }
    auto eval = [&]() {
        double v = fn(point).value();
        if (!std::isfinite(v))
            throw NumericError("grad_check: non-finite function value at probe point");
        return v;
    };
    double max_err = 0.0;
    for (size_t pi = 0; pi < point.size(); ++pi) {
        auto vals = point[pi].values_mut();
        for (size_t j = 0; j < vals.size(); ++j) {
            double keep = vals[j];
            vals[j] = keep + step;
            double fp = eval();
            vals[j] = keep - step;
            double fm = eval();
            vals[j] = keep;
            double fd = (fp - fm) / (2.0 * step);
            double err = std::abs(analytic[pi][j] - fd) / std::max(1.0, std::abs(fd));
            max_err = std::max(max_err, err);
        }
    }
    return max_err;
}

}  // namespace physvid
