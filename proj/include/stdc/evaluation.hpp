#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "stdc/dataset.hpp"
#include "stdc/model.hpp"

namespace stdc {

// MAPE only counts entries with |y| >= this.
inline constexpr double kMapeThreshold = 1.0;

struct MetricSet {
    double mae = 0.0;
    double mse = 0.0;
    double rmse = 0.0;
    std::optional<double> mape;  // empty when every entry is below the threshold
    std::size_t count = 0;
    std::size_t mape_count = 0;
};

MetricSet compute_metric_set(std::span<const double> y_hat, std::span<const double> y);

struct SliceSummary {
    std::vector<MetricSet> slices;
    double mae_mean = 0.0, mae_std = 0.0;
    double rmse_mean = 0.0, rmse_std = 0.0;
};

struct Breakdown {
    bool region = true;
    bool horizon = true;
};

struct EvalReport {
    MetricSet in, out, io;
    SliceSummary per_region;   // pooled over features
    SliceSummary per_horizon;  // pooled over features
    std::optional<double> in_out_mae_ratio;
    std::size_t windows = 0;

    nlohmann::json to_json() const;
};

// Tensors in original units, [T_f, n, f] or [W, T_f, n, f].
EvalReport compute_metrics(const Tensor& y_hat, const Tensor& y, Breakdown breakdown = {});

// y_hat[t] = x[T_p - 1] for every future step.
Tensor persistence_baseline(const Tensor& x, std::size_t future);

struct Predictions {
    Tensor y_hat;  // [W, T_f, n, f], original units
    Tensor y;
};

Predictions predict_windows(const ModelConfig& cfg, const ModelParams& params, const PreparedData& data,
                            std::span<const WindowSample> windows);
Predictions persistence_windows(const PreparedData& data, std::span<const WindowSample> windows, std::size_t future);

EvalReport evaluate(const ModelConfig& cfg, const ModelParams& params, const PreparedData& data,
                    std::span<const WindowSample> windows);

// Throws naming the first differing column.
void check_schema(const FeatureSchema& expected, const FeatureSchema& actual, const std::string& what);

// Prepares `ood` with the checkpoint's horizons and d_lap, refits the scaler on
// its training portion, and evaluates the frozen model on its test windows.
EvalReport zero_shot_eval(const Checkpoint& ckpt, const CityData& ood, PrepareOptions opts);

struct GateRow {
    std::string region_id;
    HourStamp timestamp;
    double p_cs = 0.0;
};

struct GateExport {
    std::vector<GateRow> rows;
    std::vector<std::string> region_ids;
    std::vector<double> region_mean;
};

// First encoder block's p_cs averaged over d, one row per (region, covered timestep).
// Each timestep takes its value from the earliest window covering it.
GateExport export_gate_weights(const ModelConfig& cfg, const ModelParams& params, const PreparedData& data,
                               std::span<const WindowSample> windows);
void write_gate_csv(const std::filesystem::path& path, const GateExport& g);
void write_gate_region_csv(const std::filesystem::path& path, const GateExport& g);

struct AttentionExport {
    Tensor attention;  // [n, T_f, T_p], head-averaged
    std::vector<std::string> region_ids;
    std::vector<HourStamp> past;
    std::vector<HourStamp> future;

    nlohmann::json to_json() const;
};

AttentionExport export_cta_attention(const ModelConfig& cfg, const ModelParams& params, const PreparedData& data,
                                     const WindowSample& window);

// Scalar-loop reimplementation of the forward pass. Requires layer norm and
// residual off, one head, and n, T_p, T_f, d all <= 4.
Tensor oracle_forward(const ModelConfig& cfg, const ModelParams& params, const ModelInputs& in);

}  // namespace stdc
