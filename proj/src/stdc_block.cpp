#include "stdc/stdc_block.hpp"

#include <stdexcept>

namespace stdc {

void AttentionParams::collect(std::vector<NamedTensor>& out_list, const std::string& prefix) {
    q.collect(out_list, prefix + ".q");
    k.collect(out_list, prefix + ".k");
    v.collect(out_list, prefix + ".v");
    if (out) out->collect(out_list, prefix + ".out");
}

void StdcBlockParams::collect(std::vector<NamedTensor>& out, const std::string& prefix) {
    spatial.collect(out, prefix + ".spatial");
    temporal.collect(out, prefix + ".temporal");
    if (norm) norm->collect(out, prefix + ".norm");
}

StdcBlockParams StdcBlockParams::init(std::size_t in_dim, std::size_t d, bool norm, bool head_proj, Rng& rng) {
    auto attn = [&] {
        AttentionParams a{Affine::init(in_dim, d, rng), Affine::init(in_dim, d, rng), Affine::init(in_dim, d, rng),
                          std::nullopt};
        if (head_proj) a.out = Affine::init(d, d, rng);
        return a;
    };
    StdcBlockParams p;
    p.spatial = attn();
    p.temporal = attn();
    if (norm) p.norm = NormParams::init(d);
    return p;
}

namespace {

void check_input(ag::Var h, const AttentionParams& p, std::size_t heads, const char* what) {
    if (h.shape().size() != 3 || h.shape()[2] != p.q.in()) {
        throw std::invalid_argument(std::string(what) + ": expected [T, n, " + std::to_string(p.q.in()) +
                                    "], got " + shape_str(h.shape()));
    }
    if (heads == 0 || p.q.out() % heads != 0) {
        throw std::invalid_argument(std::string(what) + ": width " + std::to_string(p.q.out()) +
                                    " is not divisible by " + std::to_string(heads) + " heads");
    }
}

ag::Var project_out(Binder& bind, ag::Var y, const AttentionParams& p) {
    return p.out ? apply(bind, y, *p.out) : y;
}

}  // namespace

ag::Var spatial_attention(Binder& bind, ag::Var h, const AttentionParams& p, std::size_t heads, Tensor* probs) {
    check_input(h, p, heads, "spatial_attention");
    // [T, n, d]: batch over timesteps, sequence over regions.
    ag::Var q = apply(bind, h, p.q);
    ag::Var k = apply(bind, h, p.k);
    ag::Var v = apply(bind, h, p.v);
    return project_out(bind, ag::attention(q, k, v, heads, probs), p);
}

ag::Var temporal_attention(Binder& bind, ag::Var h, const AttentionParams& p, std::size_t heads, Tensor* probs) {
    check_input(h, p, heads, "temporal_attention");
    // [n, T, d]: batch over regions, sequence over timesteps.
    ag::Var hr = ag::permute3(h, {1, 0, 2});
    ag::Var q = apply(bind, hr, p.q);
    ag::Var k = apply(bind, hr, p.k);
    ag::Var v = apply(bind, hr, p.v);
    ag::Var y = ag::permute3(ag::attention(q, k, v, heads, probs), {1, 0, 2});
    return project_out(bind, y, p);
}

GateVars deconf_fusion(ag::Var h_s, ag::Var h_t, ag::Var c_s, ag::Var c_t, bool fixed_gate) {
    if (h_s.shape() != h_t.shape() || h_s.shape().size() != 3) {
        throw std::invalid_argument("deconf_fusion: branch shapes " + shape_str(h_s.shape()) + " and " +
                                    shape_str(h_t.shape()) + " disagree");
    }
    const Shape& s = h_s.shape();
    if (c_s.shape() != Shape{s[1], s[2]} || c_t.shape() != Shape{s[0], s[2]}) {
        throw std::invalid_argument("deconf_fusion: confounders " + shape_str(c_s.shape()) + ", " +
                                    shape_str(c_t.shape()) + " do not match tokens " + shape_str(s));
    }
    ag::Tape& tape = *h_s.tape;
    ag::Var p_cs = fixed_gate ? tape.constant(Tensor(s, 0.5)) : ag::sigmoid(ag::token_sum(c_s, c_t));
    ag::Var p_ct = ag::one_minus(p_cs);
    ag::Var fused = ag::add(ag::mul(p_cs, h_s), ag::mul(p_ct, h_t));
    return {p_cs, p_ct, fused};
}

ag::Var stdc_block_forward(Binder& bind, ag::Var h, ag::Var c_s, ag::Var c_t, const StdcBlockParams& p,
                           const BlockOptions& opts, BlockTrace* trace) {
    if (h.shape().size() != 3 || h.shape()[2] != p.in_dim()) {
        throw std::invalid_argument("stdc_block: expected input width " + std::to_string(p.in_dim()) + ", got " +
                                    shape_str(h.shape()));
    }
    ag::Var hs = spatial_attention(bind, h, p.spatial, opts.heads, trace ? &trace->spatial_attention : nullptr);
    ag::Var ht = temporal_attention(bind, h, p.temporal, opts.heads, trace ? &trace->temporal_attention : nullptr);
    GateVars gate = deconf_fusion(hs, ht, c_s, c_t, opts.fixed_gate);
    if (trace) {
        trace->p_cs = gate.p_cs.value();
        trace->p_ct = gate.p_ct.value();
    }
    ag::Var out = gate.fused;
    if (opts.residual && p.in_dim() == p.width()) out = ag::add(out, h);
    if (opts.layer_norm) {
        if (!p.norm) throw std::invalid_argument("stdc_block: layer norm requested but block has no norm parameters");
        out = ag::layer_norm(out, bind(p.norm->gamma), bind(p.norm->beta));
    }
    return out;
}

GateOutput deconf_fusion(const Tensor& h_s, const Tensor& h_t, const Tensor& c_s, const Tensor& c_t,
                         bool fixed_gate) {
    ag::Tape tape;
    GateVars g = deconf_fusion(tape.constant(h_s), tape.constant(h_t), tape.constant(c_s), tape.constant(c_t),
                               fixed_gate);
    return {g.p_cs.value(), g.p_ct.value(), g.fused.value()};
}

Tensor spatial_attention(const Tensor& h, const AttentionParams& p, std::size_t heads, Tensor* probs) {
    ag::Tape tape;
    Binder bind(tape);
    return spatial_attention(bind, tape.constant(h), p, heads, probs).value();
}

Tensor temporal_attention(const Tensor& h, const AttentionParams& p, std::size_t heads, Tensor* probs) {
    ag::Tape tape;
    Binder bind(tape);
    return temporal_attention(bind, tape.constant(h), p, heads, probs).value();
}

Tensor stdc_block_forward(const Tensor& h, const Tensor& c_s, const Tensor& c_t, const StdcBlockParams& p,
                          const BlockOptions& opts, BlockTrace* trace) {
    ag::Tape tape;
    Binder bind(tape);
    return stdc_block_forward(bind, tape.constant(h), tape.constant(c_s), tape.constant(c_t), p, opts, trace).value();
}

}  // namespace stdc
