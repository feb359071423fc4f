#include "stdc/cta.hpp"

#include <stdexcept>

namespace stdc {

void CtaParams::collect(std::vector<NamedTensor>& out_list, const std::string& prefix) {
    q.collect(out_list, prefix + ".q");
    k.collect(out_list, prefix + ".k");
    v.collect(out_list, prefix + ".v");
    if (out) out->collect(out_list, prefix + ".out");
}

CtaParams CtaParams::init(std::size_t d, bool head_proj, Rng& rng) {
    CtaParams p{Affine::init(d, d, rng), Affine::init(d, d, rng), Affine::init(d, d, rng), std::nullopt};
    if (head_proj) p.out = Affine::init(d, d, rng);
    return p;
}

ag::Var build_future_ste(Binder& bind, ag::Var c_s, ag::Var c_t_future, const EmbeddingParams& p) {
    if (c_t_future.shape().size() != 2 || c_t_future.shape()[0] == 0) {
        throw std::invalid_argument("build_future_ste: missing future confounder rows");
    }
    return fuse_ste(bind, c_s, c_t_future, p);
}

namespace {

// [n, heads, T_f, T_p] -> mean over heads -> [n, T_f, T_p]
Tensor average_heads(const Tensor& probs) {
    const std::size_t n = probs.dim(0), heads = probs.dim(1), tf = probs.dim(2), tp = probs.dim(3);
    Tensor out({n, tf, tp});
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t h = 0; h < heads; ++h)
            for (std::size_t a = 0; a < tf; ++a)
                for (std::size_t b = 0; b < tp; ++b)
                    out.at(i, a, b) += probs[((i * heads + h) * tf + a) * tp + b] / static_cast<double>(heads);
    return out;
}

}  // namespace

ag::Var cross_time_attention(Binder& bind, ag::Var ste_future, ag::Var ste_past, ag::Var h_past, const CtaParams& p,
                             std::size_t heads, CtaTrace* trace) {
    const Shape& sf = ste_future.shape();
    const Shape& sp = ste_past.shape();
    const Shape& hp = h_past.shape();
    if (sf.size() != 3 || sp.size() != 3 || hp.size() != 3) {
        throw std::invalid_argument("cross_time_attention: expected rank-3 inputs");
    }
    if (sf[1] != sp[1] || sp[1] != hp[1]) {
        throw std::invalid_argument("cross_time_attention: region axes disagree (" + std::to_string(sf[1]) + ", " +
                                    std::to_string(sp[1]) + ", " + std::to_string(hp[1]) + ")");
    }
    if (sp[0] != hp[0]) {
        throw std::invalid_argument("cross_time_attention: past STE has " + std::to_string(sp[0]) +
                                    " steps but H_past has " + std::to_string(hp[0]));
    }
    // Region-major so each region attends over its own past.
    ag::Var q = apply(bind, ag::permute3(ste_future, {1, 0, 2}), p.q);
    ag::Var k = apply(bind, ag::permute3(ste_past, {1, 0, 2}), p.k);
    ag::Var v = apply(bind, ag::permute3(h_past, {1, 0, 2}), p.v);
    Tensor probs;
    ag::Var y = ag::permute3(ag::attention(q, k, v, heads, trace ? &probs : nullptr), {1, 0, 2});
    if (trace) {
        trace->attention = average_heads(probs);
        trace->head_attention = std::move(probs);
    }
    return p.out ? apply(bind, y, *p.out) : y;
}

ag::Var time_mix(Binder& bind, ag::Var h_past, const Affine& map) {
    if (h_past.shape().size() != 3 || h_past.shape()[0] != map.in()) {
        throw std::invalid_argument("time_mix: expected " + std::to_string(map.in()) + " past steps, got " +
                                    shape_str(h_past.shape()));
    }
    // [T_p, n, d] -> [n, d, T_p] -> affine -> [n, d, T_f] -> [T_f, n, d]
    ag::Var moved = ag::permute3(h_past, {1, 2, 0});
    return ag::permute3(apply(bind, moved, map), {2, 0, 1});
}

CtaResult cross_time_attention(const Tensor& ste_future, const Tensor& ste_past, const Tensor& h_past,
                               const CtaParams& p, std::size_t heads) {
    ag::Tape tape;
    Binder bind(tape);
    CtaTrace trace;
    ag::Var y = cross_time_attention(bind, tape.constant(ste_future), tape.constant(ste_past), tape.constant(h_past),
                                     p, heads, &trace);
    return {y.value(), std::move(trace.attention)};
}

Tensor build_future_ste(const Tensor& c_s, const Tensor& c_t_future, const EmbeddingParams& p) {
    ag::Tape tape;
    Binder bind(tape);
    return build_future_ste(bind, tape.constant(c_s), tape.constant(c_t_future), p).value();
}

}  // namespace stdc
