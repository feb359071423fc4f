#pragma once

#include <cstddef>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "stdc/autograd.hpp"
#include "stdc/tensor.hpp"

namespace stdc {

using Rng = std::mt19937_64;

struct NamedTensor {
    std::string name;
    Tensor* tensor;
};

// Pointwise affine map in -> out (a kernel-size-1 convolution).
struct Affine {
    Tensor weight;  // [in, out]
    Tensor bias;    // [out]

    std::size_t in() const { return weight.dim(0); }
    std::size_t out() const { return weight.dim(1); }
    std::size_t parameter_count() const { return weight.size() + bias.size(); }

    // Weights uniform in +-1/sqrt(in), biases zero.
    static Affine init(std::size_t in, std::size_t out, Rng& rng);
    static Affine zeros(std::size_t in, std::size_t out);

    void collect(std::vector<NamedTensor>& out, const std::string& prefix);
};

struct NormParams {
    Tensor gamma;  // [d], starts at 1
    Tensor beta;   // [d], starts at 0

    static NormParams init(std::size_t d);
    void collect(std::vector<NamedTensor>& out, const std::string& prefix);
};

// Turns parameter tensors into tape leaves, routing their gradients into a
// matching set of gradient tensors when one has been registered.
class Binder {
public:
    explicit Binder(ag::Tape& tape) : tape_(tape) {}

    ag::Tape& tape() { return tape_; }
    void track(const Tensor& value, Tensor* grad) { sinks_[&value] = grad; }
    // Pairs params[i] with grads[i]; both lists must come from identically shaped structures.
    void track_all(const std::vector<NamedTensor>& params, const std::vector<NamedTensor>& grads);

    ag::Var operator()(const Tensor& value);
    ag::Var constant(Tensor t) { return tape_.constant(std::move(t)); }

private:
    ag::Tape& tape_;
    std::unordered_map<const Tensor*, Tensor*> sinks_;
    std::unordered_map<const Tensor*, ag::Var> bound_;
};

ag::Var apply(Binder& bind, ag::Var x, const Affine& map);

}  // namespace stdc
