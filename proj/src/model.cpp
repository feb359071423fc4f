#include "stdc/model.hpp"

#include <cmath>
#include <stdexcept>

namespace stdc {

void ModelConfig::validate() const {
    auto fail = [](const std::string& msg) { throw std::invalid_argument("model config: " + msg); };
    if (d == 0) fail("d must be >= 1");
    if (heads == 0) fail("heads must be >= 1");
    if (d % heads != 0) fail("d = " + std::to_string(d) + " is not divisible by heads = " + std::to_string(heads));
    if (encoder_layers == 0) fail("encoder_layers must be >= 1");
    if (decoder_layers == 0) fail("decoder_layers must be >= 1");
    if (past == 0 || future == 0) fail("past and future horizons must be >= 1");
    if (features == 0) fail("features must be >= 1");
    if (ablation.sc && spatial_in() == 0) fail("spatial confounder encoder has zero input width");
    if (ablation.tc && t_dim == 0) fail("t_dim must be >= 1 when temporal confounders are used");
    if (!temporal_schema.columns.empty() && temporal_schema.width() != t_dim) fail("temporal schema width != t_dim");
    if (!spatial_schema.columns.empty() && spatial_schema.width() != s_dim) fail("spatial schema width != s_dim");
}

std::vector<NamedTensor> ModelParams::named() {
    std::vector<NamedTensor> out;
    embedding.collect(out, "embedding");
    for (std::size_t i = 0; i < encoder.size(); ++i) encoder[i].collect(out, "encoder." + std::to_string(i));
    if (cta) cta->collect(out, "cta");
    if (time_mix) time_mix->collect(out, "time_mix");
    for (std::size_t i = 0; i < decoder.size(); ++i) decoder[i].collect(out, "decoder." + std::to_string(i));
    head.collect(out, "head");
    return out;
}

std::size_t ModelParams::parameter_count() const {
    std::size_t total = 0;
    for (const auto& nt : named()) total += nt.tensor->size();
    return total;
}

ModelParams init_params(const ModelConfig& cfg) {
    cfg.validate();
    Rng rng(cfg.seed);
    const std::size_t d = cfg.d;
    ModelParams p;
    p.embedding.value_map = Affine::init(cfg.features, d, rng);
    if (cfg.ablation.sc) p.embedding.spatial_map = Affine::init(cfg.spatial_in(), d, rng);
    if (cfg.ablation.tc) p.embedding.temporal_map = Affine::init(cfg.t_dim, d, rng);
    p.embedding.ste_fuse_s = Affine::init(d, d, rng);
    p.embedding.ste_fuse_t = Affine::init(d, d, rng);
    for (std::size_t l = 0; l < cfg.encoder_layers; ++l) {
        p.encoder.push_back(
            StdcBlockParams::init(l == 0 ? cfg.first_block_in() : d, d, cfg.layer_norm, cfg.head_proj, rng));
    }
    if (cfg.ablation.map) {
        p.cta = CtaParams::init(d, cfg.head_proj, rng);
    } else {
        p.time_mix = Affine::init(cfg.past, cfg.future, rng);
    }
    for (std::size_t l = 0; l < cfg.decoder_layers; ++l) {
        p.decoder.push_back(StdcBlockParams::init(d, d, cfg.layer_norm, cfg.head_proj, rng));
    }
    p.head = Affine::init(d, cfg.features, rng);
    return p;
}

ModelParams zeros_like(const ModelParams& p) {
    ModelParams z = p;
    for (auto& nt : z.named()) nt.tensor->fill(0.0);
    return z;
}

namespace {

template <class F>
auto stage(const std::string& name, F&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const std::invalid_argument& e) {
        throw std::invalid_argument("forward [" + name + "]: " + e.what());
    }
}

}  // namespace

ag::Var forward(Binder& bind, const ModelConfig& cfg, const ModelParams& params, const ModelInputs& in,
                Diagnostics* diag, DiagnosticsRequest req) {
    const Ablation& ab = cfg.ablation;
    ag::Tape& tape = bind.tape();
    stage("inputs", [&] {
        if (in.x.rank() != 3 || in.x.dim(0) != cfg.past || in.x.dim(2) != cfg.features) {
            throw std::invalid_argument("x must be [" + std::to_string(cfg.past) + ", n, " +
                                        std::to_string(cfg.features) + "], got " + shape_str(in.x.shape()));
        }
        const std::size_t n = in.x.dim(1);
        if (ab.sc) {
            require_shape(in.s_rows, {n, cfg.s_dim}, "spatial confounder rows");
            if (ab.lap) require_shape(in.lap, {n, cfg.d_lap}, "Laplacian rows");
        }
        if (ab.tc) {
            require_shape(in.t_past, {cfg.past, cfg.t_dim}, "past temporal confounder rows");
            require_shape(in.t_future, {cfg.future, cfg.t_dim}, "future temporal confounder rows");
        }
        return 0;
    });
    const std::size_t n = in.x.dim(1);
    const std::size_t d = cfg.d;

    ag::Var v_emb = stage("value embedding", [&] { return embed_values(bind, tape.constant(in.x), params.embedding); });
    ag::Var c_s = stage("spatial confounder embedding", [&] {
        if (!ab.sc) return tape.constant(Tensor({n, d}));
        ag::Var lap = ab.lap ? tape.constant(in.lap) : ag::Var{};
        return embed_spatial_confounder(bind, tape.constant(in.s_rows), lap, params.embedding);
    });
    auto temporal = [&](const Tensor& rows, std::size_t steps) {
        if (!ab.tc) return tape.constant(Tensor({steps, d}));
        return embed_temporal_confounder(bind, tape.constant(rows), params.embedding);
    };
    ag::Var c_t_past = stage("temporal confounder embedding (past)", [&] { return temporal(in.t_past, cfg.past); });
    ag::Var c_t_future =
        stage("temporal confounder embedding (future)", [&] { return temporal(in.t_future, cfg.future); });
    ag::Var ste_past = stage("STE", [&] { return fuse_ste(bind, c_s, c_t_past, params.embedding); });
    ag::Var h = stage("STR", [&] { return compose_str(v_emb, ste_past, cfg.str_compose); });

    BlockOptions opts{cfg.heads, cfg.layer_norm, cfg.residual, !ab.dc};
    BlockTrace trace;
    BlockTrace* tp = diag && (req.gates || req.attention) ? &trace : nullptr;
    if (diag) *diag = Diagnostics{};
    for (std::size_t l = 0; l < params.encoder.size(); ++l) {
        h = stage("encoder block " + std::to_string(l),
                  [&] { return stdc_block_forward(bind, h, c_s, c_t_past, params.encoder[l], opts, tp); });
        if (tp && req.gates) diag->encoder_gates.push_back(trace.p_cs);
        if (tp && req.attention) diag->encoder_traces.push_back(trace);
    }

    ag::Var h_future = stage("past-to-future mapping", [&] {
        if (params.cta) {
            ag::Var ste_future = build_future_ste(bind, c_s, c_t_future, params.embedding);
            CtaTrace ct;
            ag::Var y = cross_time_attention(bind, ste_future, ste_past, h, *params.cta, cfg.heads,
                                             diag && req.attention ? &ct : nullptr);
            if (diag && req.attention) {
                diag->cta_attention = std::move(ct.attention);
                diag->cta_head_attention = std::move(ct.head_attention);
            }
            return y;
        }
        if (!params.time_mix) throw std::invalid_argument("model has neither cross-time attention nor time mixing");
        return time_mix(bind, h, *params.time_mix);
    });

    for (std::size_t l = 0; l < params.decoder.size(); ++l) {
        h_future = stage("decoder block " + std::to_string(l),
                         [&] { return stdc_block_forward(bind, h_future, c_s, c_t_future, params.decoder[l], opts, tp); });
        if (tp && req.gates) diag->decoder_gates.push_back(trace.p_cs);
        if (tp && req.attention) diag->decoder_traces.push_back(trace);
    }
    return stage("prediction head", [&] { return apply(bind, h_future, params.head); });
}

Tensor predict(const ModelConfig& cfg, const ModelParams& params, const ModelInputs& in, Diagnostics* diag,
               DiagnosticsRequest req) {
    ag::Tape tape;
    Binder bind(tape);
    return forward(bind, cfg, params, in, diag, req).value();
}

double mae_loss(const Tensor& y_hat, const Tensor& y) {
    if (y_hat.shape() != y.shape()) {
        throw std::invalid_argument("mae_loss: shape mismatch " + shape_str(y_hat.shape()) + " vs " +
                                    shape_str(y.shape()));
    }
    if (y.empty()) throw std::invalid_argument("mae_loss: empty tensors");
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) s += std::abs(y[i] - y_hat[i]);
    return s / static_cast<double>(y.size());
}

double loss_and_gradient(const ModelConfig& cfg, const ModelParams& params, const ModelInputs& in, const Tensor& y,
                         ModelParams& grads, double weight) {
    ag::Tape tape;
    Binder bind(tape);
    bind.track_all(params.named(), grads.named());
    ag::Var y_hat = forward(bind, cfg, params, in);
    ag::Var loss = ag::mean_abs_error(y_hat, y);
    const double value = loss.value()[0];
    tape.backward(weight == 1.0 ? loss : ag::scale(loss, weight));
    return value;
}

std::string ablation_name(const Ablation& a) {
    const int off = !a.dc + !a.map + !a.sc + !a.tc + !a.lap;
    if (off == 0) return "full";
    std::string name = "w/o";
    if (!a.dc) name += " DC";
    if (!a.map) name += " MAP";
    if (!a.sc) name += " SC";
    if (!a.tc) name += " TC";
    if (!a.lap) name += " LAP";
    return name;
}

std::vector<Ablation> ablation_variants() {
    std::vector<Ablation> v(6);
    v[1].dc = false;
    v[2].map = false;
    v[3].sc = false;
    v[4].tc = false;
    v[5].lap = false;
    return v;
}

}  // namespace stdc
