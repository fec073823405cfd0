#include "vrm/tape.hpp"

#include <atomic>
#include <cmath>
#include <stdexcept>
#include <string>

#include "vrm/kernels.hpp"
#include "vrm/numerics.hpp"

namespace vrm {

namespace {
std::atomic<int> g_fault_op{-1};
}

const char* op_name(Op op) {
    switch (op) {
        case Op::Leaf: return "leaf";
        case Op::Add: return "add";
        case Op::Sub: return "sub";
        case Op::Mul: return "mul";
        case Op::Div: return "div";
        case Op::MatVec: return "matvec";
        case Op::Tanh: return "tanh";
        case Op::Softplus: return "softplus";
        case Op::Exp: return "exp";
        case Op::Log: return "log";
        case Op::Neg: return "neg";
        case Op::Sigmoid: return "sigmoid";
        case Op::LogSigmoid: return "log_sigmoid";
        case Op::Abs: return "abs";
        case Op::Sum: return "sum";
        case Op::Mean: return "mean";
        case Op::Dot: return "dot";
        case Op::Concat: return "concat";
        case Op::Slice: return "slice";
        case Op::Softmax: return "softmax";
        case Op::LogGamma: return "log_gamma";
        case Op::Digamma: return "digamma";
        case Op::ScaleConst: return "scale_const";
        case Op::AddConst: return "add_const";
        case Op::ClampMin: return "clamp_min";
        case Op::GaussianSample: return "gaussian_sample";
        case Op::GammaImplicit: return "gamma_implicit";
    }
    return "?";
}

void set_derivative_fault(Op op) { g_fault_op.store(static_cast<int>(op)); }
void clear_derivative_fault() { g_fault_op.store(-1); }

// alloc may grow nodes_, so builders must not hold references across it;
// every builder re-fetches parent tensors after alloc returns.
Tape::Node& Tape::alloc(Op op, Id a, Id b, std::size_t rows, std::size_t cols) {
    if (size_ == nodes_.size()) {
        nodes_.emplace_back();
    }
    Node& n = nodes_[size_++];
    n.op = op;
    n.a = a;
    n.b = b;
    n.i0 = 0;
    n.c0 = 0.0;
    n.value.rows = rows;
    n.value.cols = cols;
    n.value.data.assign(rows * cols, 0.0);
    n.grad.assign_shape(rows, cols);
    n.aux.clear();
    return n;
}

void Tape::check_same_shape(Id a, Id b, const char* what) const {
    if (!nodes_[a].value.same_shape(nodes_[b].value)) {
        throw std::invalid_argument(std::string(what) + ": shape mismatch " +
                                    nodes_[a].value.shape_str() + " vs " +
                                    nodes_[b].value.shape_str());
    }
}

Tape::Id Tape::leaf(Tensor t) {
    const std::size_t r = t.rows;
    const std::size_t c = t.cols;
    std::vector<double> payload = std::move(t.data);
    Node& n = alloc(Op::Leaf, npos, npos, r, c);
    n.value.data = std::move(payload);
    return last_id();
}

Tape::Id Tape::leaf(std::span<const double> v) {
    Node& n = alloc(Op::Leaf, npos, npos, v.size(), 1);
    n.value.data.assign(v.begin(), v.end());
    return last_id();
}

Tape::Id Tape::leaf_scalar(double v) {
    Node& n = alloc(Op::Leaf, npos, npos, 1, 1);
    n.value.data[0] = v;
    return last_id();
}

namespace {
enum class Broadcast { None, ScalarRhs, ScalarLhs };
}

Tape::Id Tape::add(Id a, Id b) {
    const bool same = nodes_[a].value.same_shape(nodes_[b].value);
    const bool bs = nodes_[b].value.is_scalar();
    const bool as = nodes_[a].value.is_scalar();
    if (!same && !bs && !as) check_same_shape(a, b, "add");
    const Id big = (same || bs) ? a : b;
    Node& n = alloc(Op::Add, a, b, nodes_[big].value.rows, nodes_[big].value.cols);
    const Tensor& va = nodes_[a].value;
    const Tensor& vb = nodes_[b].value;
    if (same) {
        kernels::add(va.data.data(), vb.data.data(), n.value.data.data(), va.size());
    } else if (bs) {
        const double s = vb.data[0];
        for (std::size_t i = 0; i < va.size(); ++i) n.value.data[i] = va.data[i] + s;
    } else {
        const double s = va.data[0];
        for (std::size_t i = 0; i < vb.size(); ++i) n.value.data[i] = s + vb.data[i];
    }
    return last_id();
}

Tape::Id Tape::sub(Id a, Id b) {
    const bool same = nodes_[a].value.same_shape(nodes_[b].value);
    const bool bs = nodes_[b].value.is_scalar();
    const bool as = nodes_[a].value.is_scalar();
    if (!same && !bs && !as) check_same_shape(a, b, "sub");
    const Id big = (same || bs) ? a : b;
    Node& n = alloc(Op::Sub, a, b, nodes_[big].value.rows, nodes_[big].value.cols);
    const Tensor& va = nodes_[a].value;
    const Tensor& vb = nodes_[b].value;
    if (same) {
        kernels::sub(va.data.data(), vb.data.data(), n.value.data.data(), va.size());
    } else if (bs) {
        const double s = vb.data[0];
        for (std::size_t i = 0; i < va.size(); ++i) n.value.data[i] = va.data[i] - s;
    } else {
        const double s = va.data[0];
        for (std::size_t i = 0; i < vb.size(); ++i) n.value.data[i] = s - vb.data[i];
    }
    return last_id();
}

Tape::Id Tape::mul(Id a, Id b) {
    const bool same = nodes_[a].value.same_shape(nodes_[b].value);
    const bool bs = nodes_[b].value.is_scalar();
    const bool as = nodes_[a].value.is_scalar();
    if (!same && !bs && !as) check_same_shape(a, b, "mul");
    const Id big = (same || bs) ? a : b;
    Node& n = alloc(Op::Mul, a, b, nodes_[big].value.rows, nodes_[big].value.cols);
    const Tensor& va = nodes_[a].value;
    const Tensor& vb = nodes_[b].value;
    if (same) {
        kernels::mul(va.data.data(), vb.data.data(), n.value.data.data(), va.size());
    } else if (bs) {
        kernels::scale(vb.data[0], va.data.data(), n.value.data.data(), va.size());
    } else {
        kernels::scale(va.data[0], vb.data.data(), n.value.data.data(), vb.size());
    }
    return last_id();
}

Tape::Id Tape::div(Id a, Id b) {
    const bool same = nodes_[a].value.same_shape(nodes_[b].value);
    const bool bs = nodes_[b].value.is_scalar();
    const bool as = nodes_[a].value.is_scalar();
    if (!same && !bs && !as) check_same_shape(a, b, "div");
    const Id big = (same || bs) ? a : b;
    Node& n = alloc(Op::Div, a, b, nodes_[big].value.rows, nodes_[big].value.cols);
    const Tensor& va = nodes_[a].value;
    const Tensor& vb = nodes_[b].value;
    if (same) {
        for (std::size_t i = 0; i < va.size(); ++i) n.value.data[i] = va.data[i] / vb.data[i];
    } else if (bs) {
        const double s = vb.data[0];
        for (std::size_t i = 0; i < va.size(); ++i) n.value.data[i] = va.data[i] / s;
    } else {
        const double s = va.data[0];
        for (std::size_t i = 0; i < vb.size(); ++i) n.value.data[i] = s / vb.data[i];
    }
    return last_id();
}

Tape::Id Tape::matvec(Id w, Id x) {
    if (nodes_[x].value.cols != 1 || nodes_[w].value.cols != nodes_[x].value.rows) {
        throw std::invalid_argument(std::string("matvec: shape mismatch ") +
                                    nodes_[w].value.shape_str() + " vs " +
                                    nodes_[x].value.shape_str());
    }
    Node& n = alloc(Op::MatVec, w, x, nodes_[w].value.rows, 1);
    const Tensor& vw = nodes_[w].value;
    const Tensor& vx = nodes_[x].value;
    kernels::matvec(vw.data.data(), vw.rows, vw.cols, vx.data.data(), n.value.data.data());
    return last_id();
}

Tape::Id Tape::tanh(Id a) {
    Node& n = alloc(Op::Tanh, a, npos, nodes_[a].value.rows, nodes_[a].value.cols);
    const Tensor& va = nodes_[a].value;
    for (std::size_t i = 0; i < va.size(); ++i) n.value.data[i] = std::tanh(va.data[i]);
    return last_id();
}

Tape::Id Tape::softplus(Id a) {
    Node& n = alloc(Op::Softplus, a, npos, nodes_[a].value.rows, nodes_[a].value.cols);
    const Tensor& va = nodes_[a].value;
    for (std::size_t i = 0; i < va.size(); ++i) n.value.data[i] = num::softplus(va.data[i]);
    return last_id();
}

Tape::Id Tape::exp(Id a) {
    Node& n = alloc(Op::Exp, a, npos, nodes_[a].value.rows, nodes_[a].value.cols);
    const Tensor& va = nodes_[a].value;
    for (std::size_t i = 0; i < va.size(); ++i) n.value.data[i] = std::exp(va.data[i]);
    return last_id();
}

Tape::Id Tape::log(Id a) {
    for (double v : nodes_[a].value.data) {
        if (!(v > 0.0)) {
            throw std::domain_error("log of non-positive value " + std::to_string(v));
        }
    }
    Node& n = alloc(Op::Log, a, npos, nodes_[a].value.rows, nodes_[a].value.cols);
    const Tensor& va = nodes_[a].value;
    for (std::size_t i = 0; i < va.size(); ++i) n.value.data[i] = std::log(va.data[i]);
    return last_id();
}

Tape::Id Tape::neg(Id a) {
    Node& n = alloc(Op::Neg, a, npos, nodes_[a].value.rows, nodes_[a].value.cols);
    const Tensor& va = nodes_[a].value;
    kernels::scale(-1.0, va.data.data(), n.value.data.data(), va.size());
    return last_id();
}

Tape::Id Tape::sigmoid(Id a) {
    Node& n = alloc(Op::Sigmoid, a, npos, nodes_[a].value.rows, nodes_[a].value.cols);
    const Tensor& va = nodes_[a].value;
    for (std::size_t i = 0; i < va.size(); ++i) n.value.data[i] = num::stable_sigmoid(va.data[i]);
    return last_id();
}

Tape::Id Tape::log_sigmoid(Id a) {
    Node& n = alloc(Op::LogSigmoid, a, npos, nodes_[a].value.rows, nodes_[a].value.cols);
    const Tensor& va = nodes_[a].value;
    for (std::size_t i = 0; i < va.size(); ++i) n.value.data[i] = num::log_sigmoid(va.data[i]);
    return last_id();
}

Tape::Id Tape::abs(Id a) {
    Node& n = alloc(Op::Abs, a, npos, nodes_[a].value.rows, nodes_[a].value.cols);
    const Tensor& va = nodes_[a].value;
    for (std::size_t i = 0; i < va.size(); ++i) n.value.data[i] = std::fabs(va.data[i]);
    return last_id();
}

Tape::Id Tape::sum(Id a) {
    Node& n = alloc(Op::Sum, a, npos, 1, 1);
    const Tensor& va = nodes_[a].value;
    n.value.data[0] = kernels::sum(va.data.data(), va.size());
    return last_id();
}

Tape::Id Tape::mean(Id a) {
    if (nodes_[a].value.size() == 0) {
        throw std::invalid_argument("mean of an empty tensor");
    }
    Node& n = alloc(Op::Mean, a, npos, 1, 1);
    const Tensor& va = nodes_[a].value;
    n.value.data[0] = kernels::sum(va.data.data(), va.size()) / static_cast<double>(va.size());
    return last_id();
}

Tape::Id Tape::dot(Id a, Id b) {
    check_same_shape(a, b, "dot");
    Node& n = alloc(Op::Dot, a, b, 1, 1);
    const Tensor& va = nodes_[a].value;
    n.value.data[0] = kernels::dot(va.data.data(), nodes_[b].value.data.data(), va.size());
    return last_id();
}

Tape::Id Tape::concat(Id a, Id b) {
    if (nodes_[a].value.cols != 1 || nodes_[b].value.cols != 1) {
        throw std::invalid_argument(std::string("concat expects vectors, got ") +
                                    nodes_[a].value.shape_str() + " vs " +
                                    nodes_[b].value.shape_str());
    }
    const std::size_t na = nodes_[a].value.rows;
    const std::size_t nb = nodes_[b].value.rows;
    Node& n = alloc(Op::Concat, a, b, na + nb, 1);
    n.i0 = static_cast<std::uint32_t>(na);
    const Tensor& va = nodes_[a].value;
    const Tensor& vb = nodes_[b].value;
    std::copy(va.data.begin(), va.data.end(), n.value.data.begin());
    std::copy(vb.data.begin(), vb.data.end(), n.value.data.begin() + na);
    return last_id();
}

Tape::Id Tape::slice(Id a, std::size_t offset, std::size_t len) {
    if (nodes_[a].value.cols != 1 || offset + len > nodes_[a].value.rows) {
        throw std::invalid_argument("slice [" + std::to_string(offset) + ", " +
                                    std::to_string(offset + len) + ") out of range for " +
                                    nodes_[a].value.shape_str());
    }
    Node& n = alloc(Op::Slice, a, npos, len, 1);
    n.i0 = static_cast<std::uint32_t>(offset);
    const Tensor& va = nodes_[a].value;
    std::copy(va.data.begin() + offset, va.data.begin() + offset + len, n.value.data.begin());
    return last_id();
}

Tape::Id Tape::softmax(Id a) {
    if (nodes_[a].value.cols != 1 || nodes_[a].value.rows == 0) {
        throw std::invalid_argument("softmax expects a non-empty vector, got " +
                                    nodes_[a].value.shape_str());
    }
    Node& n = alloc(Op::Softmax, a, npos, nodes_[a].value.rows, 1);
    const Tensor& va = nodes_[a].value;
    n.value.data.assign(va.data.begin(), va.data.end());
    num::softmax_inplace(n.value.data);
    return last_id();
}

Tape::Id Tape::log_gamma(Id a) {
    Node& n = alloc(Op::LogGamma, a, npos, nodes_[a].value.rows, nodes_[a].value.cols);
    const Tensor& va = nodes_[a].value;
    for (std::size_t i = 0; i < va.size(); ++i) n.value.data[i] = num::log_gamma(va.data[i]);
    return last_id();
}

Tape::Id Tape::digamma(Id a) {
    Node& n = alloc(Op::Digamma, a, npos, nodes_[a].value.rows, nodes_[a].value.cols);
    const Tensor& va = nodes_[a].value;
    for (std::size_t i = 0; i < va.size(); ++i) n.value.data[i] = num::digamma(va.data[i]);
    return last_id();
}

Tape::Id Tape::scale(Id a, double c) {
    Node& n = alloc(Op::ScaleConst, a, npos, nodes_[a].value.rows, nodes_[a].value.cols);
    n.c0 = c;
    const Tensor& va = nodes_[a].value;
    kernels::scale(c, va.data.data(), n.value.data.data(), va.size());
    return last_id();
}

Tape::Id Tape::add_const(Id a, double c) {
    Node& n = alloc(Op::AddConst, a, npos, nodes_[a].value.rows, nodes_[a].value.cols);
    n.c0 = c;
    const Tensor& va = nodes_[a].value;
    for (std::size_t i = 0; i < va.size(); ++i) n.value.data[i] = va.data[i] + c;
    return last_id();
}

Tape::Id Tape::clamp_min(Id a, double c) {
    Node& n = alloc(Op::ClampMin, a, npos, nodes_[a].value.rows, nodes_[a].value.cols);
    n.c0 = c;
    const Tensor& va = nodes_[a].value;
    for (std::size_t i = 0; i < va.size(); ++i) n.value.data[i] = va.data[i] > c ? va.data[i] : c;
    return last_id();
}

Tape::Id Tape::gaussian_sample(Id mu, Id sigma, std::span<const double> eps) {
    check_same_shape(mu, sigma, "gaussian_sample");
    if (eps.size() != nodes_[mu].value.size()) {
        throw std::invalid_argument("gaussian_sample: noise length " + std::to_string(eps.size()) +
                                    " vs parameter shape " + nodes_[mu].value.shape_str());
    }
    Node& n = alloc(Op::GaussianSample, mu, sigma, nodes_[mu].value.rows, nodes_[mu].value.cols);
    n.aux.assign(eps.begin(), eps.end());
    const Tensor& vm = nodes_[mu].value;
    const Tensor& vs = nodes_[sigma].value;
    for (std::size_t i = 0; i < vm.size(); ++i) {
        n.value.data[i] = vm.data[i] + vs.data[i] * eps[i];
    }
    return last_id();
}

Tape::Id Tape::gamma_implicit(Id alpha, std::span<const double> g,
                              std::span<const double> dgdalpha) {
    if (g.size() != nodes_[alpha].value.size() || dgdalpha.size() != nodes_[alpha].value.size()) {
        throw std::invalid_argument("gamma_implicit: sample length " + std::to_string(g.size()) +
                                    " vs parameter shape " + nodes_[alpha].value.shape_str());
    }
    Node& n = alloc(Op::GammaImplicit, alpha, npos, nodes_[alpha].value.rows,
                    nodes_[alpha].value.cols);
    n.aux.assign(dgdalpha.begin(), dgdalpha.end());
    std::copy(g.begin(), g.end(), n.value.data.begin());
    return last_id();
}

double Tape::scalar_value(Id id) const {
    const Tensor& v = nodes_[id].value;
    if (!v.is_scalar()) {
        throw std::invalid_argument("scalar_value of non-scalar node " + v.shape_str());
    }
    return v.data[0];
}

void Tape::zero_grad() {
    for (std::size_t i = 0; i < size_; ++i) {
        std::fill(nodes_[i].grad.data.begin(), nodes_[i].grad.data.end(), 0.0);
    }
}

void Tape::reset() { size_ = 0; }

void Tape::accumulate(Id parent, const double* g, std::size_t n) {
    if (!touched_[parent]) {
        touched_[parent] = 1;
        const Tensor& pv = nodes_[parent].value;
        adj_[parent].rows = pv.rows;
        adj_[parent].cols = pv.cols;
        adj_[parent].data.assign(pv.size(), 0.0);
    }
    kernels::axpy(1.0, g, adj_[parent].data.data(), n);
}

void Tape::backward(Id output) {
    if (output >= size_) {
        throw std::out_of_range("backward from unknown node");
    }
    if (!nodes_[output].value.is_scalar()) {
        throw std::invalid_argument("backward requires a scalar output, got " +
                                    nodes_[output].value.shape_str());
    }

    if (adj_.size() < size_) adj_.resize(size_);
    touched_.assign(size_, 0);
    touched_[output] = 1;
    adj_[output].assign_shape(1, 1);
    adj_[output].data[0] = 1.0;

    const int fault = g_fault_op.load(std::memory_order_relaxed);
    std::vector<double> scratch;
    std::vector<double> flipped;

    auto touch = [&](Id p) {
        if (!touched_[p]) {
            touched_[p] = 1;
            const Tensor& pv = nodes_[p].value;
            adj_[p].rows = pv.rows;
            adj_[p].cols = pv.cols;
            adj_[p].data.assign(pv.size(), 0.0);
        }
        return adj_[p].data.data();
    };

    for (std::size_t ii = output + 1; ii-- > 0;) {
        if (!touched_[ii]) continue;
        const Node& n = nodes_[ii];
        if (n.op == Op::Leaf) continue;

        const double* g = adj_[ii].data.data();
        const std::size_t gn = adj_[ii].data.size();
        if (fault == static_cast<int>(n.op)) {
            flipped.assign(g, g + gn);
            for (double& v : flipped) v = -v;
            g = flipped.data();
        }

        const Tensor& va = nodes_[n.a].value;

        switch (n.op) {
            case Op::Leaf:
                break;
            case Op::Add: {
                const Tensor& vb = nodes_[n.b].value;
                if (va.same_shape(vb)) {
                    accumulate(n.a, g, gn);
                    accumulate(n.b, g, gn);
                } else if (vb.is_scalar()) {
                    accumulate(n.a, g, gn);
                    touch(n.b);
                    adj_[n.b].data[0] += kernels::sum(g, gn);
                } else {
                    accumulate(n.b, g, gn);
                    touch(n.a);
                    adj_[n.a].data[0] += kernels::sum(g, gn);
                }
                break;
            }
            case Op::Sub: {
                const Tensor& vb = nodes_[n.b].value;
                if (va.same_shape(vb)) {
                    accumulate(n.a, g, gn);
                    kernels::axpy(-1.0, g, touch(n.b), gn);
                } else if (vb.is_scalar()) {
                    accumulate(n.a, g, gn);
                    touch(n.b);
                    adj_[n.b].data[0] -= kernels::sum(g, gn);
                } else {
                    kernels::axpy(-1.0, g, touch(n.b), gn);
                    touch(n.a);
                    adj_[n.a].data[0] += kernels::sum(g, gn);
                }
                break;
            }
            case Op::Mul: {
                const Tensor& vb = nodes_[n.b].value;
                if (va.same_shape(vb)) {
                    scratch.resize(gn);
                    kernels::mul(g, vb.data.data(), scratch.data(), gn);
                    accumulate(n.a, scratch.data(), gn);
                    kernels::mul(g, va.data.data(), scratch.data(), gn);
                    accumulate(n.b, scratch.data(), gn);
                } else if (vb.is_scalar()) {
                    kernels::axpy(vb.data[0], g, touch(n.a), gn);
                    touch(n.b);
                    adj_[n.b].data[0] += kernels::dot(g, va.data.data(), gn);
                } else {
                    kernels::axpy(va.data[0], g, touch(n.b), gn);
                    touch(n.a);
                    adj_[n.a].data[0] += kernels::dot(g, vb.data.data(), gn);
                }
                break;
            }
            case Op::Div: {
                const Tensor& vb = nodes_[n.b].value;
                const Tensor& vy = n.value;
                if (va.same_shape(vb)) {
                    double* pa = touch(n.a);
                    double* pb = touch(n.b);
                    for (std::size_t i = 0; i < gn; ++i) {
                        pa[i] += g[i] / vb.data[i];
                        pb[i] -= g[i] * vy.data[i] / vb.data[i];
                    }
                } else if (vb.is_scalar()) {
                    const double s = vb.data[0];
                    kernels::axpy(1.0 / s, g, touch(n.a), gn);
                    touch(n.b);
                    adj_[n.b].data[0] -= kernels::dot(g, vy.data.data(), gn) / s;
                } else {
                    double* pb = touch(n.b);
                    double acc = 0.0;
                    for (std::size_t i = 0; i < gn; ++i) {
                        acc += g[i] / vb.data[i];
                        pb[i] -= g[i] * vy.data[i] / vb.data[i];
                    }
                    touch(n.a);
                    adj_[n.a].data[0] += acc;
                }
                break;
            }
            case Op::MatVec: {
                const Tensor& vw = nodes_[n.a].value;
                const Tensor& vx = nodes_[n.b].value;
                kernels::ger_acc(touch(n.a), vw.rows, vw.cols, g, vx.data.data());
                kernels::matvec_t_acc(vw.data.data(), vw.rows, vw.cols, g, touch(n.b));
                break;
            }
            case Op::Tanh: {
                double* pa = touch(n.a);
                for (std::size_t i = 0; i < gn; ++i) {
                    const double y = n.value.data[i];
                    pa[i] += g[i] * (1.0 - y * y);
                }
                break;
            }
            case Op::Softplus: {
                double* pa = touch(n.a);
                for (std::size_t i = 0; i < gn; ++i) {
                    pa[i] += g[i] * num::stable_sigmoid(va.data[i]);
                }
                break;
            }
            case Op::Exp: {
                double* pa = touch(n.a);
                for (std::size_t i = 0; i < gn; ++i) {
                    pa[i] += g[i] * n.value.data[i];
                }
                break;
            }
            case Op::Log: {
                double* pa = touch(n.a);
                for (std::size_t i = 0; i < gn; ++i) {
                    pa[i] += g[i] / va.data[i];
                }
                break;
            }
            case Op::Neg:
                kernels::axpy(-1.0, g, touch(n.a), gn);
                break;
            case Op::Sigmoid: {
                double* pa = touch(n.a);
                for (std::size_t i = 0; i < gn; ++i) {
                    const double y = n.value.data[i];
                    pa[i] += g[i] * y * (1.0 - y);
                }
                break;
            }
            case Op::LogSigmoid: {
                double* pa = touch(n.a);
                for (std::size_t i = 0; i < gn; ++i) {
                    pa[i] += g[i] * num::stable_sigmoid(-va.data[i]);
                }
                break;
            }
            case Op::Abs: {
                double* pa = touch(n.a);
                for (std::size_t i = 0; i < gn; ++i) {
                    if (va.data[i] > 0.0) pa[i] += g[i];
                    else if (va.data[i] < 0.0) pa[i] -= g[i];
                }
                break;
            }
            case Op::Sum: {
                double* pa = touch(n.a);
                const double g0 = g[0];
                for (std::size_t i = 0; i < va.size(); ++i) pa[i] += g0;
                break;
            }
            case Op::Mean: {
                double* pa = touch(n.a);
                const double g0 = g[0] / static_cast<double>(va.size());
                for (std::size_t i = 0; i < va.size(); ++i) pa[i] += g0;
                break;
            }
            case Op::Dot: {
                const Tensor& vb = nodes_[n.b].value;
                kernels::axpy(g[0], vb.data.data(), touch(n.a), va.size());
                kernels::axpy(g[0], va.data.data(), touch(n.b), va.size());
                break;
            }
            case Op::Concat: {
                const std::size_t split = n.i0;
                kernels::axpy(1.0, g, touch(n.a), split);
                kernels::axpy(1.0, g + split, touch(n.b), gn - split);
                break;
            }
            case Op::Slice: {
                double* pa = touch(n.a);
                kernels::axpy(1.0, g, pa + n.i0, gn);
                break;
            }
            case Op::Softmax: {
                const double s = kernels::dot(g, n.value.data.data(), gn);
                double* pa = touch(n.a);
                for (std::size_t i = 0; i < gn; ++i) {
                    pa[i] += n.value.data[i] * (g[i] - s);
                }
                break;
            }
            case Op::LogGamma: {
                double* pa = touch(n.a);
                for (std::size_t i = 0; i < gn; ++i) {
                    pa[i] += g[i] * num::digamma(va.data[i]);
                }
                break;
            }
            case Op::Digamma: {
                double* pa = touch(n.a);
                for (std::size_t i = 0; i < gn; ++i) {
                    pa[i] += g[i] * num::trigamma(va.data[i]);
                }
                break;
            }
            case Op::ScaleConst:
                kernels::axpy(n.c0, g, touch(n.a), gn);
                break;
            case Op::AddConst:
                accumulate(n.a, g, gn);
                break;
            case Op::ClampMin: {
                double* pa = touch(n.a);
                for (std::size_t i = 0; i < gn; ++i) {
                    if (va.data[i] > n.c0) pa[i] += g[i];
                }
                break;
            }
            case Op::GaussianSample: {
                accumulate(n.a, g, gn);
                double* pb = touch(n.b);
                for (std::size_t i = 0; i < gn; ++i) {
                    pb[i] += g[i] * n.aux[i];
                }
                break;
            }
            case Op::GammaImplicit: {
                double* pa = touch(n.a);
                for (std::size_t i = 0; i < gn; ++i) {
                    pa[i] += g[i] * n.aux[i];
                }
                break;
            }
        }
    }

    // fold this pass's adjoints into the persistent gradients
    for (std::size_t i = 0; i <= output; ++i) {
        if (touched_[i]) {
            kernels::axpy(1.0, adj_[i].data.data(), nodes_[i].grad.data.data(),
                          adj_[i].data.size());
        }
    }
}

}  // namespace vrm
