#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

#include "stdc/dataset.hpp"

namespace stdc {

namespace {

const std::vector<std::string> kPoiNames{"office", "residential", "retail", "leisure", "transit", "education",
                                         "health", "industrial"};

// Relative flow reduction per weather category of the default vocabulary.
double weather_severity(const std::string& w) {
    if (w == "cloudy") return 0.25;
    if (w == "rain") return 0.75;
    if (w == "snow") return 1.0;
    if (w == "fog") return 0.5;
    return 0.0;
}

double parse_number(const std::string& key, const std::string& value) {
    char* end = nullptr;
    const double v = std::strtod(value.c_str(), &end);
    if (value.empty() || end != value.c_str() + value.size() || !std::isfinite(v)) {
        throw std::invalid_argument("synthetic profile: key '" + key + "' expects a number, got '" + value + "'");
    }
    return v;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

}  // namespace

SyntheticProfile SyntheticProfile::from_pairs(const std::map<std::string, std::string>& kv) {
    SyntheticProfile p;
    for (const auto& [key, value] : kv) {
        if (key == "graph") {
            if (value != "grid" && value != "ring") {
                throw std::invalid_argument("synthetic profile: graph must be 'grid' or 'ring', got '" + value + "'");
            }
            p.graph = value;
        } else if (key == "noise") {
            p.noise = parse_number(key, value);
        } else if (key == "scale_min") {
            p.scale_min = parse_number(key, value);
        } else if (key == "scale_max") {
            p.scale_max = parse_number(key, value);
        } else if (key == "weekly_amplitude") {
            p.weekly_amplitude = parse_number(key, value);
        } else if (key == "weather_effect") {
            p.weather_effect = parse_number(key, value);
        } else if (key == "poi_categories") {
            const double v = parse_number(key, value);
            if (v < 1 || v > static_cast<double>(kPoiNames.size()) || v != std::floor(v)) {
                throw std::invalid_argument("synthetic profile: poi_categories must be an integer in 1.." +
                                            std::to_string(kPoiNames.size()));
            }
            p.poi_categories = static_cast<std::size_t>(v);
        } else if (key == "start") {
            const auto t = parse_iso_time(value);
            if (!t || t->sub_hour_seconds != 0) {
                throw std::invalid_argument("synthetic profile: start must be an hourly ISO-8601 time");
            }
            p.start = value;
        } else if (key == "region_prefix") {
            p.region_prefix = value;
        } else {
            throw std::invalid_argument("synthetic profile: unknown key '" + key + "'");
        }
    }
    if (p.noise < 0.0) throw std::invalid_argument("synthetic profile: noise must be >= 0");
    if (!(p.scale_min > 0.0 && p.scale_max >= p.scale_min)) {
        throw std::invalid_argument("synthetic profile: need 0 < scale_min <= scale_max");
    }
    if (p.weekly_amplitude < 0.0 || p.weekly_amplitude >= 1.0) {
        throw std::invalid_argument("synthetic profile: weekly_amplitude must be in [0, 1)");
    }
    if (p.weather_effect < 0.0 || p.weather_effect >= 1.0) {
        throw std::invalid_argument("synthetic profile: weather_effect must be in [0, 1)");
    }
    return p;
}

SyntheticProfile SyntheticProfile::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open synthetic profile " + path.string());
    std::map<std::string, std::string> kv;
    std::string line;
    std::size_t no = 0;
    while (std::getline(in, line)) {
        ++no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw std::invalid_argument(path.string() + ":" + std::to_string(no) + ": expected key = value");
        }
        kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return from_pairs(kv);
}

std::map<std::string, std::string> SyntheticProfile::to_pairs() const {
    auto num = [](double v) {
        std::ostringstream os;
        os.precision(17);
        os << v;
        return os.str();
    };
    return {{"graph", graph},
            {"noise", num(noise)},
            {"scale_min", num(scale_min)},
            {"scale_max", num(scale_max)},
            {"weekly_amplitude", num(weekly_amplitude)},
            {"weather_effect", num(weather_effect)},
            {"poi_categories", std::to_string(poi_categories)},
            {"start", start},
            {"region_prefix", region_prefix}};
}

SyntheticDataset generate_synthetic(std::size_t n, std::size_t length, std::uint64_t seed,
                                    const SyntheticProfile& profile) {
    if (n < 2) throw std::invalid_argument("generate_synthetic: need at least 2 regions, got " + std::to_string(n));
    if (length < 24) {
        throw std::invalid_argument("generate_synthetic: need at least 24 timesteps, got " + std::to_string(length));
    }
    const auto start = parse_iso_time(profile.start);
    if (!start) throw std::invalid_argument("generate_synthetic: bad start time " + profile.start);

    Rng rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);

    CityData city;
    city.poi_vocab.assign(kPoiNames.begin(), kPoiNames.begin() + static_cast<std::ptrdiff_t>(profile.poi_categories));
    const int width = static_cast<int>(std::to_string(n - 1).size());
    for (std::size_t i = 0; i < n; ++i) {
        std::string num = std::to_string(i);
        city.flow.region_ids.push_back(profile.region_prefix + std::string(width - num.size(), '0') + num);
    }

    // Regions: POI counts drive both the flow scale and the timing of the daily peak.
    std::vector<double> activity(n), office_share(n);
    for (std::size_t i = 0; i < n; ++i) {
        SpatialRecord r;
        r.region_id = city.flow.region_ids[i];
        const double busy = 0.2 + 0.8 * unif(rng);
        for (std::size_t c = 0; c < profile.poi_categories; ++c) r.poi_counts.push_back(std::floor(60.0 * busy * unif(rng)));
        double total = 0.0;
        for (double v : r.poi_counts) total += v;
        activity[i] = std::log1p(total);
        const double office = r.poi_counts[0];
        const double residential = profile.poi_categories > 1 ? r.poi_counts[1] : 0.0;
        office_share[i] = (office + 1.0) / (office + residential + 2.0);
        r.houses_for_sale = std::floor(100.0 * unif(rng));
        r.avg_price = 3.0e5 + 1.2e6 * (0.5 * busy + 0.5 * unif(rng));
        r.shootings = std::floor(10.0 * unif(rng));
        r.complaints = std::floor(500.0 * busy * unif(rng));
        city.spatial.push_back(std::move(r));
    }
    const auto [amin, amax] = std::minmax_element(activity.begin(), activity.end());
    std::vector<double> scale(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double u = *amax > *amin ? (activity[i] - *amin) / (*amax - *amin) : 0.5;
        scale[i] = profile.scale_min + (profile.scale_max - profile.scale_min) * u;
    }

    // Calendar and weather.
    const std::size_t days = (length + static_cast<std::size_t>(hour_of_day(start->hour)) + 23) / 24 + 1;
    std::vector<std::string> day_weather(days);
    std::vector<double> day_temp(days);
    const double probs[] = {0.45, 0.25, 0.15, 0.05, 0.10};
    for (std::size_t dd = 0; dd < days; ++dd) {
        double u = unif(rng);
        std::size_t w = 0;
        while (w + 1 < 5 && u >= probs[w]) u -= probs[w++];
        day_weather[dd] = city.weather_vocab[w];
        day_temp[dd] = 12.0 + 8.0 * std::sin(2.0 * std::numbers::pi * static_cast<double>(dd) / 365.0) + 3.0 * gauss(rng);
    }
    const std::int64_t first_day = (start->hour.hours - hour_of_day(start->hour)) / 24;

    city.flow.values = Tensor({length, n, kFlowFeatures});
    for (std::size_t t = 0; t < length; ++t) {
        const HourStamp h{start->hour.hours + static_cast<std::int64_t>(t)};
        city.flow.timestamps.push_back(h);
        const auto day_idx = static_cast<std::size_t>((h.hours - hour_of_day(h)) / 24 - first_day);
        TemporalRecord rec;
        rec.timestamp = h;
        rec.hour = hour_of_day(h);
        rec.dow = day_of_week(h);
        rec.holiday = (h.hours / 24) % 30 == 0;
        rec.weather = day_weather[day_idx];
        rec.temperature = day_temp[day_idx] + 4.0 * std::sin(2.0 * std::numbers::pi * (rec.hour - 9) / 24.0);
        city.temporal.push_back(rec);

        const bool rest_day = rec.dow >= 5 || rec.holiday;
        const double day_factor = rest_day ? 1.0 - profile.weekly_amplitude : 1.0;
        const double weather_factor = 1.0 - profile.weather_effect * weather_severity(rec.weather);
        for (std::size_t i = 0; i < n; ++i) {
            const double peak_in = 18.0 - 9.0 * office_share[i];
            const double peak_out = peak_in + 9.0;
            for (std::size_t f = 0; f < kFlowFeatures; ++f) {
                const double peak = f == kInflow ? peak_in : peak_out;
                const double cycle = 0.5 + 0.5 * std::cos(2.0 * std::numbers::pi * (rec.hour - peak) / 24.0);
                double mean = scale[i] * (0.2 + cycle) * day_factor * weather_factor;
                if (profile.noise > 0.0) mean += profile.noise * std::sqrt(mean) * gauss(rng);
                city.flow.values.at(t, i, f) = std::max(0.0, std::round(mean));
            }
        }
    }

    city.graph = profile.graph == "ring" ? AdjacencyGraph::ring(n) : AdjacencyGraph::grid(n);
    city.validate();

    SyntheticDataset out;
    std::vector<double> temps;
    for (const auto& r : city.temporal) temps.push_back(r.temperature);
    out.temporal = encode_temporal_features(city.temporal, city.weather_vocab, fit_standardization(temps));
    out.spatial = encode_spatial_features(city.spatial, city.flow.region_ids, city.poi_vocab);
    out.city = std::move(city);
    return out;
}

}  // namespace stdc
