#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "stdc/data.hpp"
#include "stdc/graph.hpp"
#include "stdc/model.hpp"

namespace stdc {

// Raw observations and confounder records of one city.
struct CityData {
    FlowSeries flow;
    std::vector<TemporalRecord> temporal;  // one per flow timestep
    std::vector<SpatialRecord> spatial;    // one per region, in region order
    std::vector<std::string> poi_vocab;
    std::vector<std::string> weather_vocab = default_weather_vocab();
    AdjacencyGraph graph;

    // Throws if record counts, timestamps, or region ids disagree.
    void validate() const;
};

// ---------------------------------------------------------------- synthetic

struct SyntheticProfile {
    std::string graph = "grid";  // grid | ring
    double noise = 0.1;          // Poisson-like noise amplitude; 0 disables noise
    double scale_min = 20.0;     // region scale range, mapped from POI totals
    double scale_max = 200.0;
    double weekly_amplitude = 0.2;  // weekend / holiday dip
    double weather_effect = 0.15;   // flow reduction under bad weather
    std::size_t poi_categories = 4;
    std::string start = "2023-11-01T00:00:00";
    std::string region_prefix = "R";

    // Key-value pairs; unknown keys or bad values are rejected.
    static SyntheticProfile from_pairs(const std::map<std::string, std::string>& kv);
    static SyntheticProfile load(const std::filesystem::path& path);
    std::map<std::string, std::string> to_pairs() const;
};

struct SyntheticDataset {
    CityData city;
    TemporalConfounderTable temporal;
    SpatialConfounderTable spatial;
};

// Flows are a region-specific daily cycle scaled by the region's POI totals,
// modulated by day type and weather, plus noise. Fully determined by the arguments.
SyntheticDataset generate_synthetic(std::size_t n, std::size_t length, std::uint64_t seed,
                                    const SyntheticProfile& profile = {});

// ------------------------------------------------------------------ archive

// A dataset archive is a directory holding flow.csv, temporal.csv,
// spatial.csv, adjacency.csv and manifest.json.
void save_archive(const std::filesystem::path& dir, const CityData& city);
CityData load_archive(const std::filesystem::path& dir);

struct IngestPaths {
    std::filesystem::path flow;
    std::filesystem::path temporal;
    std::filesystem::path spatial;
    std::filesystem::path adjacency;
};

// Regions are ordered as in the spatial file.
CityData ingest_csv(const IngestPaths& paths, const std::vector<std::string>& weather_vocab = default_weather_vocab());

// ----------------------------------------------------------------- prepare

enum class FutureWeather { teacher_forced, persist };

struct PrepareOptions {
    std::size_t past = 6;
    std::size_t future = 6;
    std::size_t stride = 1;
    SplitRatios ratios;
    std::uint64_t seed = 0;
    std::size_t d_lap = 8;
    bool zone_onehot = false;
    FutureWeather future_weather = FutureWeather::teacher_forced;
};

struct PreparedData {
    std::vector<std::string> region_ids;
    std::vector<HourStamp> timestamps;
    TemporalConfounderTable temporal;  // [L, t_dim]
    SpatialConfounderTable spatial;    // [n, s_dim]
    LaplacianEmbedding lap;            // [n, d_lap]
    WindowSplits splits;               // standardized with `scaler`
    Scaler scaler;                     // fitted on the training split only
    FutureWeather future_weather = FutureWeather::teacher_forced;
    std::size_t weather_columns = 0;   // width of the weather one-hot block

    std::size_t regions() const { return region_ids.size(); }
};

PreparedData prepare(const CityData& city, const PrepareOptions& opts);

// Sets past/future/s_dim/t_dim/d_lap and the schemas from prepared data.
void bind_config_to_data(ModelConfig& cfg, const PreparedData& data);

// Owned inputs of one window.
struct Example {
    Tensor x;
    Tensor y;
    Tensor s_rows;
    Tensor lap;
    Tensor t_past;
    Tensor t_future;

    ModelInputs inputs() const { return ModelInputs{x, s_rows, lap, t_past, t_future}; }
};

Example make_example(const PreparedData& data, const WindowSample& w);

}  // namespace stdc
