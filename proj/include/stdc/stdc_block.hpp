#pragma once

#include <optional>

#include "stdc/layers.hpp"

namespace stdc {

// Q/K/V maps shared across every timestep (spatial) or every region
// (temporal); `out` is the optional projection after the heads are joined.
struct AttentionParams {
    Affine q, k, v;
    std::optional<Affine> out;

    void collect(std::vector<NamedTensor>& out_list, const std::string& prefix);
};

struct StdcBlockParams {
    AttentionParams spatial;
    AttentionParams temporal;
    std::optional<NormParams> norm;

    std::size_t in_dim() const { return spatial.q.in(); }
    std::size_t width() const { return spatial.q.out(); }
    void collect(std::vector<NamedTensor>& out, const std::string& prefix);

    static StdcBlockParams init(std::size_t in_dim, std::size_t d, bool norm, bool head_proj, Rng& rng);
};

struct BlockOptions {
    std::size_t heads = 8;
    bool layer_norm = true;
    bool residual = true;
    // Replaces the confounder gate with a constant 1/2 (de-confounding ablated).
    bool fixed_gate = false;
};

// Attention weights and gate values captured during a forward pass.
struct BlockTrace {
    Tensor spatial_attention;   // [T, heads, n, n]
    Tensor temporal_attention;  // [n, heads, T, T]
    Tensor p_cs;                // [T, n, d]
    Tensor p_ct;                // [T, n, d]
};

// Self-attention across regions at each timestep: [T, n, in] -> [T, n, d].
ag::Var spatial_attention(Binder& bind, ag::Var h, const AttentionParams& p, std::size_t heads, Tensor* probs = nullptr);
// Self-attention across timesteps for each region: [T, n, in] -> [T, n, d].
ag::Var temporal_attention(Binder& bind, ag::Var h, const AttentionParams& p, std::size_t heads,
                           Tensor* probs = nullptr);

struct GateVars {
    ag::Var p_cs;
    ag::Var p_ct;
    ag::Var fused;
};

// p_cs[j, i] = logistic(C_S[i] + C_T[j]); fused = p_cs * h_s + (1 - p_cs) * h_t.
GateVars deconf_fusion(ag::Var h_s, ag::Var h_t, ag::Var c_s, ag::Var c_t, bool fixed_gate = false);

// out = LayerNorm(fused + h), the residual applying only when in_dim == d.
ag::Var stdc_block_forward(Binder& bind, ag::Var h, ag::Var c_s, ag::Var c_t, const StdcBlockParams& p,
                           const BlockOptions& opts, BlockTrace* trace = nullptr);

struct GateOutput {
    Tensor p_cs;
    Tensor p_ct;
    Tensor fused;
};

GateOutput deconf_fusion(const Tensor& h_s, const Tensor& h_t, const Tensor& c_s, const Tensor& c_t,
                         bool fixed_gate = false);
Tensor spatial_attention(const Tensor& h, const AttentionParams& p, std::size_t heads, Tensor* probs = nullptr);
Tensor temporal_attention(const Tensor& h, const AttentionParams& p, std::size_t heads, Tensor* probs = nullptr);
Tensor stdc_block_forward(const Tensor& h, const Tensor& c_s, const Tensor& c_t, const StdcBlockParams& p,
                          const BlockOptions& opts, BlockTrace* trace = nullptr);

}  // namespace stdc
