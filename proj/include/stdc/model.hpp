#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "stdc/cta.hpp"
#include "stdc/data.hpp"
#include "stdc/embedding.hpp"
#include "stdc/stdc_block.hpp"

namespace stdc {

// Components present in the model. Clearing a flag produces the matching
// ablation variant: dc (confounder gate), map (cross-time attention),
// sc / tc (spatial / temporal confounders), lap (Laplacian features).
struct Ablation {
    bool dc = true;
    bool map = true;
    bool sc = true;
    bool tc = true;
    bool lap = true;

    bool operator==(const Ablation&) const = default;
};

struct ModelConfig {
    std::size_t d = 64;
    std::size_t d_lap = 8;
    std::size_t encoder_layers = 5;
    std::size_t decoder_layers = 5;
    std::size_t heads = 8;
    std::size_t past = 6;     // T_p
    std::size_t future = 6;   // T_f
    std::size_t features = kFlowFeatures;
    std::size_t s_dim = 0;
    std::size_t t_dim = 0;
    Ablation ablation;
    StrCompose str_compose = StrCompose::concat;
    bool layer_norm = true;
    bool residual = true;
    bool head_proj = false;
    std::uint64_t seed = 0;
    // Column layouts the confounder tables must match (checked on transfer).
    FeatureSchema temporal_schema;
    FeatureSchema spatial_schema;

    // Throws std::invalid_argument naming the offending field.
    void validate() const;
    std::size_t first_block_in() const { return str_compose == StrCompose::concat ? 2 * d : d; }
    std::size_t spatial_in() const { return s_dim + (ablation.lap ? d_lap : 0); }
};

struct ModelParams {
    EmbeddingParams embedding;
    std::vector<StdcBlockParams> encoder;
    std::optional<CtaParams> cta;
    std::optional<Affine> time_mix;  // replaces cta when map is ablated
    std::vector<StdcBlockParams> decoder;
    Affine head;                      // d -> f, no activation

    std::vector<NamedTensor> named();
    std::vector<NamedTensor> named() const { return const_cast<ModelParams*>(this)->named(); }
    std::size_t parameter_count() const;
};

ModelParams init_params(const ModelConfig& cfg);
// Same structure as `p`, every tensor zero.
ModelParams zeros_like(const ModelParams& p);

// Per-window model input. Tensor references must outlive the call.
struct ModelInputs {
    const Tensor& x;         // [T_p, n, f], standardized
    const Tensor& s_rows;    // [n, s_dim]
    const Tensor& lap;       // [n, d_lap]
    const Tensor& t_past;    // [T_p, t_dim]
    const Tensor& t_future;  // [T_f, t_dim]
};

struct DiagnosticsRequest {
    bool gates = false;
    bool attention = false;
};

struct Diagnostics {
    std::vector<Tensor> encoder_gates;  // per block, [T_p, n, d]
    std::vector<Tensor> decoder_gates;  // per block, [T_f, n, d]
    Tensor cta_attention;               // [n, T_f, T_p]; empty when map is ablated
    Tensor cta_head_attention;          // [n, heads, T_f, T_p]
    std::vector<BlockTrace> encoder_traces;  // filled when attention is requested
    std::vector<BlockTrace> decoder_traces;
};

// embed -> encoder blocks -> cross-time mapping -> decoder blocks -> head.
// Returns y_hat [T_f, n, f] as a tape variable.
ag::Var forward(Binder& bind, const ModelConfig& cfg, const ModelParams& params, const ModelInputs& in,
                Diagnostics* diag = nullptr, DiagnosticsRequest req = {});

Tensor predict(const ModelConfig& cfg, const ModelParams& params, const ModelInputs& in,
               Diagnostics* diag = nullptr, DiagnosticsRequest req = {});

// Mean of |y - y_hat| over every element.
double mae_loss(const Tensor& y_hat, const Tensor& y);

// Loss of one window and its gradient, accumulated into `grads` (scaled by `weight`).
double loss_and_gradient(const ModelConfig& cfg, const ModelParams& params, const ModelInputs& in, const Tensor& y,
                         ModelParams& grads, double weight = 1.0);

std::string ablation_name(const Ablation& a);
// Full model followed by the five single-component ablations, in the order
// full, w/o DC, w/o MAP, w/o SC, w/o TC, w/o LAP.
std::vector<Ablation> ablation_variants();

// Binary checkpoint: magic, format version, JSON header (config + tensor
// manifest), then raw little-endian doubles in manifest order.
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
    ModelConfig config;
    ModelParams params;
    std::optional<Scaler> scaler;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

nlohmann::json to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const nlohmann::json& j);

}  // namespace stdc
