#include "stdc/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "stdc/csv.hpp"

namespace stdc {

void CityData::validate() const {
    const std::size_t n = flow.regions();
    const std::size_t L = flow.length();
    if (n == 0 || L == 0) throw std::invalid_argument("city data: empty flow series");
    require_shape(flow.values, {L, n, kFlowFeatures}, "flow values");
    if (temporal.size() != L) {
        throw std::invalid_argument("city data: " + std::to_string(temporal.size()) + " temporal records for " +
                                    std::to_string(L) + " flow timesteps");
    }
    for (std::size_t t = 0; t < L; ++t) {
        if (temporal[t].timestamp != flow.timestamps[t]) {
            throw std::invalid_argument("city data: temporal record " + std::to_string(t) + " is at " +
                                        format_iso_hour(temporal[t].timestamp) + ", flow timestep is at " +
                                        format_iso_hour(flow.timestamps[t]));
        }
    }
    if (spatial.size() != n) {
        throw std::invalid_argument("city data: " + std::to_string(spatial.size()) + " spatial records for " +
                                    std::to_string(n) + " regions");
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (spatial[i].region_id != flow.region_ids[i]) {
            throw std::invalid_argument("city data: spatial record " + std::to_string(i) + " is region " +
                                        spatial[i].region_id + ", expected " + flow.region_ids[i]);
        }
        if (spatial[i].poi_counts.size() != poi_vocab.size()) {
            throw std::invalid_argument("city data: region " + spatial[i].region_id + " has " +
                                        std::to_string(spatial[i].poi_counts.size()) + " POI counts, vocabulary has " +
                                        std::to_string(poi_vocab.size()));
        }
    }
    if (graph.size() != n) {
        throw std::invalid_argument("city data: adjacency covers " + std::to_string(graph.size()) + " regions, flow has " +
                                    std::to_string(n));
    }
}

// ------------------------------------------------------------------ archive

namespace {

std::ofstream open_out(const std::filesystem::path& p) {
    std::ofstream out(p);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    return out;
}

void write_flow(const std::filesystem::path& p, const FlowSeries& flow) {
    auto out = open_out(p);
    out << "timestamp,region_id,inflow,outflow\n";
    for (std::size_t t = 0; t < flow.length(); ++t) {
        const std::string ts = format_iso_hour(flow.timestamps[t]);
        for (std::size_t i = 0; i < flow.regions(); ++i) {
            out << ts << ',' << flow.region_ids[i] << ',' << csv::format_double(flow.values.at(t, i, kInflow)) << ','
                << csv::format_double(flow.values.at(t, i, kOutflow)) << '\n';
        }
    }
}

void write_temporal(const std::filesystem::path& p, const std::vector<TemporalRecord>& recs) {
    auto out = open_out(p);
    out << "timestamp,hour,dow,is_holiday,weather,temperature\n";
    for (const auto& r : recs) {
        out << format_iso_hour(r.timestamp) << ',' << r.hour << ',' << r.dow << ',' << (r.holiday ? 1 : 0) << ','
            << r.weather << ',' << csv::format_double(r.temperature) << '\n';
    }
}

void write_spatial(const std::filesystem::path& p, const std::vector<SpatialRecord>& recs,
                   const std::vector<std::string>& poi_vocab) {
    auto out = open_out(p);
    out << "region_id";
    for (const auto& c : poi_vocab) out << ',' << c;
    out << ",houses_for_sale,avg_price,shootings,complaints\n";
    for (const auto& r : recs) {
        out << r.region_id;
        for (double v : r.poi_counts) out << ',' << csv::format_double(v);
        out << ',' << csv::format_double(r.houses_for_sale) << ',' << csv::format_double(r.avg_price) << ','
            << csv::format_double(r.shootings) << ',' << csv::format_double(r.complaints) << '\n';
    }
}

}  // namespace

void save_archive(const std::filesystem::path& dir, const CityData& city) {
    city.validate();
    std::filesystem::create_directories(dir);
    write_flow(dir / "flow.csv", city.flow);
    write_temporal(dir / "temporal.csv", city.temporal);
    write_spatial(dir / "spatial.csv", city.spatial, city.poi_vocab);
    save_adjacency(dir / "adjacency.csv", city.graph, city.flow.region_ids);
    nlohmann::json m;
    m["regions"] = city.flow.regions();
    m["length"] = city.flow.length();
    m["start"] = format_iso_hour(city.flow.timestamps.front());
    m["weather_vocab"] = city.weather_vocab;
    m["poi_vocab"] = city.poi_vocab;
    auto out = open_out(dir / "manifest.json");
    out << m.dump(2) << '\n';
}

CityData load_archive(const std::filesystem::path& dir) {
    std::vector<std::string> weather = default_weather_vocab();
    const auto manifest_path = dir / "manifest.json";
    if (std::filesystem::exists(manifest_path)) {
        std::ifstream in(manifest_path);
        const auto m = nlohmann::json::parse(in);
        if (m.contains("weather_vocab")) weather = m["weather_vocab"].get<std::vector<std::string>>();
    }
    return ingest_csv({dir / "flow.csv", dir / "temporal.csv", dir / "spatial.csv", dir / "adjacency.csv"}, weather);
}

CityData ingest_csv(const IngestPaths& paths, const std::vector<std::string>& weather_vocab) {
    CityData city;
    city.weather_vocab = weather_vocab;
    city.spatial = load_spatial_csv(paths.spatial, city.poi_vocab);
    std::vector<std::string> ids;
    for (const auto& r : city.spatial) ids.push_back(r.region_id);
    city.flow = load_flow_csv(paths.flow, ids);

    auto temporal = load_temporal_csv(paths.temporal);
    if (temporal.empty()) throw std::runtime_error(paths.temporal.string() + ": no temporal records");
    // Keep the rows covering the flow range.
    const auto first = city.flow.timestamps.front().hours;
    const auto last = city.flow.timestamps.back().hours;
    if (temporal.front().timestamp.hours > first || temporal.back().timestamp.hours < last) {
        throw std::runtime_error(paths.temporal.string() + ": temporal records cover " +
                                 format_iso_hour(temporal.front().timestamp) + " .. " +
                                 format_iso_hour(temporal.back().timestamp) + ", flow needs " +
                                 format_iso_hour(city.flow.timestamps.front()) + " .. " +
                                 format_iso_hour(city.flow.timestamps.back()));
    }
    const auto off = static_cast<std::size_t>(first - temporal.front().timestamp.hours);
    city.temporal.assign(temporal.begin() + static_cast<std::ptrdiff_t>(off),
                         temporal.begin() + static_cast<std::ptrdiff_t>(off + city.flow.length()));
    for (const auto& r : city.temporal) {
        if (std::find(weather_vocab.begin(), weather_vocab.end(), r.weather) == weather_vocab.end()) {
            throw std::runtime_error(paths.temporal.string() + ": unknown weather category '" + r.weather + "' at " +
                                     format_iso_hour(r.timestamp));
        }
    }
    city.graph = load_adjacency(paths.adjacency, ids);
    city.validate();
    return city;
}

// ----------------------------------------------------------------- prepare

PreparedData prepare(const CityData& city, const PrepareOptions& opts) {
    city.validate();
    PreparedData out;
    out.region_ids = city.flow.region_ids;
    out.timestamps = city.flow.timestamps;
    out.future_weather = opts.future_weather;
    out.weather_columns = city.weather_vocab.size();

    auto windows = make_windows(city.flow, opts.past, opts.future, opts.stride);
    const auto sizes = split_sizes(windows.size(), opts.ratios);
    if (sizes[0] == 0) throw std::invalid_argument("prepare: training split is empty");

    // Temperature statistics over the timesteps touched by training windows.
    const std::size_t train_end = windows[sizes[0] - 1].future_time_idx.back() + 1;
    std::vector<double> temps;
    for (std::size_t t = 0; t < train_end; ++t) temps.push_back(city.temporal[t].temperature);
    out.temporal = encode_temporal_features(city.temporal, city.weather_vocab, fit_standardization(temps));
    out.spatial = encode_spatial_features(city.spatial, city.flow.region_ids, city.poi_vocab,
                                          SpatialEncodeOptions{opts.zone_onehot});
    out.lap = laplacian_embedding(city.graph, opts.d_lap);

    out.splits = split_windows(std::move(windows), opts.ratios, opts.seed);
    out.scaler = fit_scaler(out.splits.train);
    standardize_windows(out.splits.train, out.scaler);
    standardize_windows(out.splits.val, out.scaler);
    standardize_windows(out.splits.test, out.scaler);
    return out;
}

void bind_config_to_data(ModelConfig& cfg, const PreparedData& data) {
    cfg.s_dim = data.spatial.schema.width();
    cfg.t_dim = data.temporal.schema.width();
    cfg.d_lap = data.lap.vectors.dim(1);
    cfg.temporal_schema = data.temporal.schema;
    cfg.spatial_schema = data.spatial.schema;
    if (!data.splits.train.empty()) {
        cfg.past = data.splits.train.front().past_time_idx.size();
        cfg.future = data.splits.train.front().future_time_idx.size();
    }
}

Example make_example(const PreparedData& data, const WindowSample& w) {
    Example ex;
    ex.x = w.x;
    ex.y = w.y;
    ex.s_rows = data.spatial.rows;
    ex.lap = data.lap.vectors;
    ex.t_past = gather_rows(data.temporal.rows, w.past_time_idx);
    ex.t_future = gather_rows(data.temporal.rows, w.future_time_idx);
    if (data.future_weather == FutureWeather::persist && data.weather_columns > 0) {
        // Future weather is unknown at forecast time: repeat the last observed category.
        constexpr std::size_t kWeatherOffset = 24 + 7 + 1;
        const std::size_t last = w.past_time_idx.size() - 1;
        for (std::size_t r = 0; r < ex.t_future.dim(0); ++r)
            for (std::size_t c = 0; c < data.weather_columns; ++c)
                ex.t_future.at(r, kWeatherOffset + c) = ex.t_past.at(last, kWeatherOffset + c);
    }
    return ex;
}

}  // namespace stdc
