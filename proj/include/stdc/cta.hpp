#pragma once

#include <optional>

#include "stdc/embedding.hpp"
#include "stdc/layers.hpp"

namespace stdc {

// Cross-time attention: queries from future STEs, keys from past STEs,
// values from the encoded past.
struct CtaParams {
    Affine q;  // d -> d, applied to STE_future
    Affine k;  // d -> d, applied to STE_past
    Affine v;  // d -> d, applied to H_past
    std::optional<Affine> out;

    void collect(std::vector<NamedTensor>& out_list, const std::string& prefix);
    static CtaParams init(std::size_t d, bool head_proj, Rng& rng);
};

// Same fuse rule and parameters as the encoder STE: [n, d], [T_f, d] -> [T_f, n, d].
ag::Var build_future_ste(Binder& bind, ag::Var c_s, ag::Var c_t_future, const EmbeddingParams& p);

struct CtaTrace {
    Tensor attention;        // [n, T_f, T_p], averaged over heads
    Tensor head_attention;   // [n, heads, T_f, T_p]
};

// Per region: softmax over the past axis of Q K^T / sqrt(d_head), applied to V.
// Returns H_future [T_f, n, d].
ag::Var cross_time_attention(Binder& bind, ag::Var ste_future, ag::Var ste_past, ag::Var h_past, const CtaParams& p,
                             std::size_t heads, CtaTrace* trace = nullptr);

// Replacement mapping when cross-time attention is ablated: a learned affine
// map over the time axis (T_p -> T_f) shared by every region and channel.
ag::Var time_mix(Binder& bind, ag::Var h_past, const Affine& map);

struct CtaResult {
    Tensor h_future;   // [T_f, n, d]
    Tensor attention;  // [n, T_f, T_p]
};

CtaResult cross_time_attention(const Tensor& ste_future, const Tensor& ste_past, const Tensor& h_past,
                               const CtaParams& p, std::size_t heads);
Tensor build_future_ste(const Tensor& c_s, const Tensor& c_t_future, const EmbeddingParams& p);

}  // namespace stdc
