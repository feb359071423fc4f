#pragma once

#include <array>
#include <cstddef>
#include <deque>
#include <functional>
#include <vector>

#include "stdc/tensor.hpp"

// Reverse-mode differentiation over whole tensors. A Tape records every op of
// one forward pass; backward() walks it in reverse creation order. Nodes that
// do not depend on any parameter keep no backward closure, so inference on a
// tape costs little more than plain evaluation.
namespace stdc::ag {

class Tape;

struct Var {
    Tape* tape = nullptr;
    std::size_t id = 0;

    bool valid() const { return tape != nullptr; }
    const Tensor& value() const;
    const Shape& shape() const { return value().shape(); }
};

class Tape {
public:
    using Backward = std::function<void(Tape&, std::size_t self)>;

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var constant(Tensor t);
    // Leaf that reads `value` in place. Its gradient is added into `grad_sink`
    // by backward(); a null sink makes the leaf a constant.
    Var param(const Tensor& value, Tensor* grad_sink);

    Var push(Tensor value, std::vector<std::size_t> parents, Backward fn);

    // Seeds d(root)/d(root) = 1; root must hold a single element.
    void backward(Var root);

    const Tensor& value(std::size_t id) const;
    Tensor& grad(std::size_t id);
    bool needs_grad(std::size_t id) const { return nodes_[id].needs_grad; }
    std::size_t size() const { return nodes_.size(); }

private:
    struct Node {
        Tensor owned;
        const Tensor* external = nullptr;
        Tensor grad;
        Tensor* sink = nullptr;
        bool needs_grad = false;
        std::vector<std::size_t> parents;
        Backward backward;
    };
    std::deque<Node> nodes_;
};

// y[..., out] = x[..., in] · W[in, out] + b[out]. `b` may be an invalid Var.
Var affine(Var x, Var w, Var b);
Var relu(Var x);
Var sigmoid(Var x);
Var add(Var a, Var b);
Var mul(Var a, Var b);
// 1 - x
Var one_minus(Var x);
// Concatenate along the last axis; leading shapes must agree.
Var concat_last(Var a, Var b);
// out[j, i, :] = rows_t[j, :] + rows_s[i, :]  ->  [T, n, d]
Var token_sum(Var rows_s, Var rows_t);
// Rank-3 axis permutation: out.shape[k] = in.shape[perm[k]].
Var permute3(Var x, std::array<std::size_t, 3> perm);
// Batched multi-head scaled dot-product attention.
// q [B, Lq, d], k [B, Lk, d], v [B, Lk, d]; softmax over Lk; returns [B, Lq, d].
// If `probs` is non-null it receives the attention weights [B, heads, Lq, Lk].
Var attention(Var q, Var k, Var v, std::size_t heads, Tensor* probs);
// Normalizes over the last axis, then scales by gamma and shifts by beta.
Var layer_norm(Var x, Var gamma, Var beta, double eps = 1e-5);
// Mean over all elements of |pred - target|; returns shape (1).
Var mean_abs_error(Var pred, const Tensor& target);
// Sum over all elements; returns shape (1).
Var sum_all(Var x);
Var scale(Var x, double s);

}  // namespace stdc::ag
