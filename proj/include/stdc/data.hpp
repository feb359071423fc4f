#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "stdc/tensor.hpp"
#include "stdc/timeutil.hpp"

namespace stdc {

// Feature order along the last axis of every flow tensor.
inline constexpr std::size_t kInflow = 0;
inline constexpr std::size_t kOutflow = 1;
inline constexpr std::size_t kFlowFeatures = 2;

struct FlowSeries {
    Tensor values;  // [L, n, 2], counts >= 0
    std::vector<HourStamp> timestamps;
    std::vector<std::string> region_ids;

    std::size_t length() const { return timestamps.size(); }
    std::size_t regions() const { return region_ids.size(); }
};

// Ordered column names of an encoded confounder table.
struct FeatureSchema {
    std::vector<std::string> columns;

    std::size_t width() const { return columns.size(); }
    bool operator==(const FeatureSchema&) const = default;
};

struct TemporalRecord {
    HourStamp timestamp;
    int hour = 0;
    int dow = 0;  // 0 = Monday
    bool holiday = false;
    std::string weather;
    double temperature = 0.0;

    bool operator==(const TemporalRecord&) const = default;
};

struct SpatialRecord {
    std::string region_id;
    std::vector<double> poi_counts;  // one per POI category
    double houses_for_sale = 0.0;
    double avg_price = 0.0;
    double shootings = 0.0;
    double complaints = 0.0;

    bool operator==(const SpatialRecord&) const = default;
};

struct TemporalConfounderTable {
    Tensor rows;  // [L, t_dim]
    FeatureSchema schema;
};

struct SpatialConfounderTable {
    Tensor rows;  // [n, s_dim]
    FeatureSchema schema;
};

// Mean / population standard deviation of one scalar column.
struct Standardization {
    double mean = 0.0;
    double std = 1.0;

    double apply(double v) const { return (v - mean) / std; }
};

// Degenerate columns (zero spread) get std = 1 so they map to a constant 0.
Standardization fit_standardization(std::span<const double> values);

const std::vector<std::string>& default_weather_vocab();

FlowSeries load_flow_csv(const std::filesystem::path& path, const std::vector<std::string>& region_ids);
std::vector<TemporalRecord> load_temporal_csv(const std::filesystem::path& path);
// Fills `poi_vocab` from the header columns between region_id and houses_for_sale.
std::vector<SpatialRecord> load_spatial_csv(const std::filesystem::path& path, std::vector<std::string>& poi_vocab);

FeatureSchema temporal_schema(const std::vector<std::string>& weather_vocab);
TemporalConfounderTable encode_temporal_features(std::span<const TemporalRecord> records,
                                                 const std::vector<std::string>& weather_vocab,
                                                 const Standardization& temperature);

struct SpatialEncodeOptions {
    // Prepends a one-hot over region ids. Ties the schema to one region set.
    bool zone_onehot = false;
};

FeatureSchema spatial_schema(const std::vector<std::string>& poi_vocab, const std::vector<std::string>& region_ids,
                             const SpatialEncodeOptions& opts);
// Rows follow `region_ids`; every id must have exactly one record.
SpatialConfounderTable encode_spatial_features(std::span<const SpatialRecord> records,
                                               const std::vector<std::string>& region_ids,
                                               const std::vector<std::string>& poi_vocab,
                                               const SpatialEncodeOptions& opts = {});

struct WindowSample {
    Tensor x;  // [T_p, n, f]
    Tensor y;  // [T_f, n, f]
    std::vector<std::size_t> past_time_idx;
    std::vector<std::size_t> future_time_idx;

    std::size_t start() const { return past_time_idx.front(); }
};

// Windows share raw timesteps with their neighbours; only window-level
// disjointness holds across splits.
std::vector<WindowSample> make_windows(const FlowSeries& flow, std::size_t past, std::size_t future,
                                       std::size_t stride = 1);
std::size_t window_count(std::size_t length, std::size_t past, std::size_t future, std::size_t stride = 1);

struct SplitRatios {
    double train = 7.0;
    double val = 1.0;
    double test = 2.0;
};

// floor(r_i * N) for val and test, remainder to train.
std::array<std::size_t, 3> split_sizes(std::size_t count, const SplitRatios& ratios);

struct WindowSplits {
    std::vector<WindowSample> train;
    std::vector<WindowSample> val;
    std::vector<WindowSample> test;
};

// Chronological assignment by start index; train and val are then shuffled
// with `seed`, test keeps its order.
WindowSplits split_windows(std::vector<WindowSample> windows, const SplitRatios& ratios, std::uint64_t seed);

class Scaler {
public:
    Scaler() = default;
    Scaler(std::vector<double> mean, std::vector<double> std);

    // Per-feature statistics over every x and y entry of the given windows.
    static Scaler fit(std::span<const WindowSample> train);

    Tensor transform(const Tensor& t) const;
    Tensor inverse_transform(const Tensor& t) const;

    const std::vector<double>& mean() const { return mean_; }
    const std::vector<double>& std() const { return std_; }
    bool operator==(const Scaler&) const = default;

private:
    std::vector<double> mean_;
    std::vector<double> std_;
};

inline Scaler fit_scaler(std::span<const WindowSample> train) { return Scaler::fit(train); }

// Applies `scaler` to x and y of every window in place.
void standardize_windows(std::vector<WindowSample>& windows, const Scaler& scaler);

}  // namespace stdc
