#pragma once

#include <optional>

#include "stdc/layers.hpp"

namespace stdc {

enum class StrCompose { concat, add };

// Maps observations and confounders into d-dimensional token embeddings.
// Every shape depends only on (f, s_dim, d_lap, t_dim, d), never on n or L.
struct EmbeddingParams {
    Affine value_map;                    // f -> d
    std::optional<Affine> spatial_map;   // (s_dim [+ d_lap]) -> d; absent when spatial confounders are ablated
    std::optional<Affine> temporal_map;  // t_dim -> d; absent when temporal confounders are ablated
    Affine ste_fuse_s;                   // d -> d
    Affine ste_fuse_t;                   // d -> d

    std::size_t width() const { return value_map.out(); }
    void collect(std::vector<NamedTensor>& out, const std::string& prefix);
};

// relu(x W + b), token by token: [T, n, f] -> [T, n, d].
ag::Var embed_values(Binder& bind, ag::Var x, const EmbeddingParams& p);
// relu([S | lap] W + b): [n, s_dim], [n, d_lap] -> [n, d]. Pass an invalid `lap` to skip the Laplacian part.
ag::Var embed_spatial_confounder(Binder& bind, ag::Var s_rows, ag::Var lap, const EmbeddingParams& p);
// relu(T W + b): [T, t_dim] -> [T, d].
ag::Var embed_temporal_confounder(Binder& bind, ag::Var t_rows, const EmbeddingParams& p);
// STE[j, i] = relu(ste_fuse_s(C_S[i])) + relu(ste_fuse_t(C_T[j])) -> [T, n, d].
ag::Var fuse_ste(Binder& bind, ag::Var c_s, ag::Var c_t, const EmbeddingParams& p);
// concat: [T, n, 2d] with V_emb first; add: [T, n, d].
ag::Var compose_str(ag::Var v_emb, ag::Var ste, StrCompose mode = StrCompose::concat);

// Tensor-in/tensor-out conveniences, mainly for inspection and tests.
Tensor embed_values(const Tensor& x, const EmbeddingParams& p);
Tensor embed_spatial_confounder(const Tensor& s_rows, const Tensor& lap, const EmbeddingParams& p);
Tensor embed_temporal_confounder(const Tensor& t_rows, const EmbeddingParams& p);
Tensor fuse_ste(const Tensor& c_s, const Tensor& c_t, const EmbeddingParams& p);
Tensor compose_str(const Tensor& v_emb, const Tensor& ste, StrCompose mode = StrCompose::concat);

}  // namespace stdc
