#include "stdc/embedding.hpp"

#include <stdexcept>

namespace stdc {

void EmbeddingParams::collect(std::vector<NamedTensor>& out, const std::string& prefix) {
    value_map.collect(out, prefix + ".value_map");
    if (spatial_map) spatial_map->collect(out, prefix + ".spatial_map");
    if (temporal_map) temporal_map->collect(out, prefix + ".temporal_map");
    ste_fuse_s.collect(out, prefix + ".ste_fuse_s");
    ste_fuse_t.collect(out, prefix + ".ste_fuse_t");
}

ag::Var embed_values(Binder& bind, ag::Var x, const EmbeddingParams& p) {
    if (x.shape().empty() || x.shape().back() != p.value_map.in()) {
        throw std::invalid_argument("embed_values: expected " + std::to_string(p.value_map.in()) +
                                    " features per token, got shape " + shape_str(x.shape()));
    }
    return ag::relu(apply(bind, x, p.value_map));
}

ag::Var embed_spatial_confounder(Binder& bind, ag::Var s_rows, ag::Var lap, const EmbeddingParams& p) {
    if (!p.spatial_map) throw std::invalid_argument("embed_spatial_confounder: spatial map is ablated");
    ag::Var input = s_rows;
    if (lap.valid()) {
        if (lap.shape().size() != 2 || s_rows.shape().size() != 2 || lap.shape()[0] != s_rows.shape()[0]) {
            throw std::invalid_argument("embed_spatial_confounder: spatial rows " + shape_str(s_rows.shape()) +
                                        " and Laplacian rows " + shape_str(lap.shape()) + " disagree");
        }
        input = ag::concat_last(s_rows, lap);
    }
    if (input.shape().back() != p.spatial_map->in()) {
        throw std::invalid_argument("embed_spatial_confounder: expected width " +
                                    std::to_string(p.spatial_map->in()) + ", got " + shape_str(input.shape()));
    }
    return ag::relu(apply(bind, input, *p.spatial_map));
}

ag::Var embed_temporal_confounder(Binder& bind, ag::Var t_rows, const EmbeddingParams& p) {
    if (!p.temporal_map) throw std::invalid_argument("embed_temporal_confounder: temporal map is ablated");
    if (t_rows.shape().size() != 2 || t_rows.shape()[1] != p.temporal_map->in()) {
        throw std::invalid_argument("embed_temporal_confounder: expected [T, " +
                                    std::to_string(p.temporal_map->in()) + "], got " + shape_str(t_rows.shape()));
    }
    return ag::relu(apply(bind, t_rows, *p.temporal_map));
}

ag::Var fuse_ste(Binder& bind, ag::Var c_s, ag::Var c_t, const EmbeddingParams& p) {
    ag::Var s = ag::relu(apply(bind, c_s, p.ste_fuse_s));
    ag::Var t = ag::relu(apply(bind, c_t, p.ste_fuse_t));
    return ag::token_sum(s, t);
}

ag::Var compose_str(ag::Var v_emb, ag::Var ste, StrCompose mode) {
    if (v_emb.shape() != ste.shape()) {
        throw std::invalid_argument("compose_str: value embedding " + shape_str(v_emb.shape()) + " and STE " +
                                    shape_str(ste.shape()) + " disagree");
    }
    return mode == StrCompose::concat ? ag::concat_last(v_emb, ste) : ag::add(v_emb, ste);
}

Tensor embed_values(const Tensor& x, const EmbeddingParams& p) {
    ag::Tape tape;
    Binder bind(tape);
    return embed_values(bind, tape.constant(x), p).value();
}

Tensor embed_spatial_confounder(const Tensor& s_rows, const Tensor& lap, const EmbeddingParams& p) {
    ag::Tape tape;
    Binder bind(tape);
    return embed_spatial_confounder(bind, tape.constant(s_rows), tape.constant(lap), p).value();
}

Tensor embed_temporal_confounder(const Tensor& t_rows, const EmbeddingParams& p) {
    ag::Tape tape;
    Binder bind(tape);
    return embed_temporal_confounder(bind, tape.constant(t_rows), p).value();
}

Tensor fuse_ste(const Tensor& c_s, const Tensor& c_t, const EmbeddingParams& p) {
    ag::Tape tape;
    Binder bind(tape);
    return fuse_ste(bind, tape.constant(c_s), tape.constant(c_t), p).value();
}

Tensor compose_str(const Tensor& v_emb, const Tensor& ste, StrCompose mode) {
    ag::Tape tape;
    return compose_str(tape.constant(v_emb), tape.constant(ste), mode).value();
}

}  // namespace stdc
