#include "stdc/layers.hpp"

#include <cmath>
#include <stdexcept>

namespace stdc {

Affine Affine::init(std::size_t in, std::size_t out, Rng& rng) {
    Affine a = zeros(in, out);
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (auto& w : a.weight.storage()) w = dist(rng);
    return a;
}

Affine Affine::zeros(std::size_t in, std::size_t out) { return Affine{Tensor({in, out}), Tensor({out})}; }

void Affine::collect(std::vector<NamedTensor>& out, const std::string& prefix) {
    out.push_back({prefix + ".weight", &weight});
    out.push_back({prefix + ".bias", &bias});
}

NormParams NormParams::init(std::size_t d) { return NormParams{Tensor({d}, 1.0), Tensor({d})}; }

void NormParams::collect(std::vector<NamedTensor>& out, const std::string& prefix) {
    out.push_back({prefix + ".gamma", &gamma});
    out.push_back({prefix + ".beta", &beta});
}

void Binder::track_all(const std::vector<NamedTensor>& params, const std::vector<NamedTensor>& grads) {
    if (params.size() != grads.size()) throw std::invalid_argument("Binder: parameter/gradient layout mismatch");
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (params[i].tensor->shape() != grads[i].tensor->shape()) {
            throw std::invalid_argument("Binder: gradient shape mismatch for " + params[i].name);
        }
        track(*params[i].tensor, grads[i].tensor);
    }
}

ag::Var Binder::operator()(const Tensor& value) {
    if (const auto it = bound_.find(&value); it != bound_.end()) return it->second;
    const auto sink = sinks_.find(&value);
    ag::Var v = tape_.param(value, sink == sinks_.end() ? nullptr : sink->second);
    bound_.emplace(&value, v);
    return v;
}

ag::Var apply(Binder& bind, ag::Var x, const Affine& map) { return ag::affine(x, bind(map.weight), bind(map.bias)); }

}  // namespace stdc
