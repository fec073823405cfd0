// Reverse-mode tape over vector/matrix values. Forward values are computed
// eagerly at node creation and never mutated afterwards; backward() runs a
// reverse sweep in creation order (nodes are always created after their
// inputs, so that order is a valid reverse topological order).
//
// Gradient semantics: each backward() call adds d(output)/d(node) into
// every reachable node's grad. Calling backward() twice without
// zero_grad() therefore doubles the accumulated gradients.

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "vrm/tensor.hpp"

namespace vrm {

enum class Op : std::uint8_t {
    Leaf,
    Add,
    Sub,
    Mul,
    Div,
    MatVec,
    Tanh,
    Softplus,
    Exp,
    Log,
    Neg,
    Sigmoid,
    LogSigmoid,
    Abs,
    Sum,
    Mean,
    Dot,
    Concat,
    Slice,
    Softmax,
    LogGamma,
    Digamma,
    ScaleConst,
    AddConst,
    ClampMin,
    GaussianSample,
    GammaImplicit,
};

const char* op_name(Op op);

// Debug hook for the gradcheck fault-injection mode: while set, the
// backward rule of the given op accumulates with flipped sign.
void set_derivative_fault(Op op);
void clear_derivative_fault();

class Tape {
public:
    using Id = std::uint32_t;
    static constexpr Id npos = static_cast<Id>(-1);

    Id leaf(Tensor t);
    Id leaf(std::span<const double> v);
    Id leaf_scalar(double v);

    // Binary elementwise; one operand may be a (1x1) scalar, which
    // broadcasts against the other.
    Id add(Id a, Id b);
    Id sub(Id a, Id b);
    Id mul(Id a, Id b);
    Id div(Id a, Id b);

    Id matvec(Id w, Id x);
    // W x + b, composed from matvec and add
    Id affine(Id w, Id x, Id b) { return add(matvec(w, x), b); }

    Id tanh(Id a);
    Id softplus(Id a);
    Id exp(Id a);
    Id log(Id a);
    Id neg(Id a);
    Id sigmoid(Id a);
    Id log_sigmoid(Id a);

    // |x| elementwise; subgradient 0 at x = 0
    Id abs(Id a);

    Id sum(Id a);
    Id mean(Id a);
    Id dot(Id a, Id b);

    Id concat(Id a, Id b);
    Id slice(Id a, std::size_t offset, std::size_t len);
    Id softmax(Id a);

    // Elementwise special functions; domain errors surface at creation.
    Id log_gamma(Id a);
    Id digamma(Id a);

    Id scale(Id a, double c);
    Id add_const(Id a, double c);
    // max(x, c) elementwise; zero gradient where the clamp binds
    Id clamp_min(Id a, double c);

    // z = mu + sigma (*) eps with the noise vector recorded in the node;
    // dz/dmu = I, dz/dsigma = diag(eps).
    Id gaussian_sample(Id mu, Id sigma, std::span<const double> eps);

    // Gamma draws g_k with precomputed implicit-reparameterization
    // derivatives dg_k/dalpha_k; backward sends grad * dgdalpha into alpha.
    Id gamma_implicit(Id alpha, std::span<const double> g,
                      std::span<const double> dgdalpha);

    const Tensor& value(Id id) const { return nodes_[id].value; }
    const Tensor& grad(Id id) const { return nodes_[id].grad; }
    double scalar_value(Id id) const;

    // Reverse sweep from a scalar output; throws std::invalid_argument on
    // a non-scalar root.
    void backward(Id output);

    void zero_grad();
    // Drop all nodes but keep their buffers for reuse.
    void reset();
    std::size_t size() const { return size_; }

private:
    struct Node {
        Op op = Op::Leaf;
        Id a = npos;
        Id b = npos;
        std::uint32_t i0 = 0;  // slice offset / concat split
        double c0 = 0.0;       // scalar constant
        Tensor value;
        Tensor grad;
        std::vector<double> aux;  // eps / dgdalpha
    };

    Node& alloc(Op op, Id a, Id b, std::size_t rows, std::size_t cols);
    Id last_id() const { return static_cast<Id>(size_ - 1); }
    void check_same_shape(Id a, Id b, const char* what) const;
    void accumulate(Id parent, const double* g, std::size_t n);

    std::vector<Node> nodes_;
    std::size_t size_ = 0;
    // backward scratch, reused across calls
    std::vector<Tensor> adj_;
    std::vector<char> touched_;
};

}  // namespace vrm
