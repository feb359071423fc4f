#include "stdc/data.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <stdexcept>
#include <unordered_map>

#include "stdc/csv.hpp"

namespace stdc {

namespace {

void expect_header(const csv::File& f, const std::vector<std::string>& expected,
                   const std::filesystem::path& path) {
    if (f.header != expected) {
        std::string want;
        for (const auto& c : expected) want += (want.empty() ? "" : ",") + c;
        throw std::runtime_error(path.string() + ":1: expected header '" + want + "'");
    }
}

void expect_fields(const csv::Row& row, std::size_t count, const std::filesystem::path& path) {
    if (row.fields.size() != count) {
        throw std::runtime_error(path.string() + ":" + std::to_string(row.line) + ": expected " +
                                 std::to_string(count) + " fields, got " + std::to_string(row.fields.size()));
    }
}

HourStamp parse_hour(const std::string& field, const std::filesystem::path& path, std::size_t line) {
    const auto t = parse_iso_time(field);
    if (!t) {
        throw std::runtime_error(path.string() + ":" + std::to_string(line) + ": invalid timestamp '" + field + "'");
    }
    if (t->sub_hour_seconds != 0) {
        throw std::runtime_error(path.string() + ":" + std::to_string(line) + ": timestamp '" + field +
                                 "' is not on an hourly boundary (row " + std::to_string(line) + ")");
    }
    return t->hour;
}

}  // namespace

Standardization fit_standardization(std::span<const double> values) {
    if (values.empty()) return {};
    const double n = static_cast<double>(values.size());
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    const double sd = std::sqrt(var / n);
    return Standardization{mean, sd > 0.0 ? sd : 1.0};
}

const std::vector<std::string>& default_weather_vocab() {
    static const std::vector<std::string> vocab{"clear", "cloudy", "rain", "snow", "fog"};
    return vocab;
}

FlowSeries load_flow_csv(const std::filesystem::path& path, const std::vector<std::string>& region_ids) {
    const csv::File f = csv::read(path);
    expect_header(f, {"timestamp", "region_id", "inflow", "outflow"}, path);
    if (region_ids.empty()) throw std::invalid_argument("load_flow_csv: empty region list");

    std::unordered_map<std::string, std::size_t> region_index;
    for (std::size_t i = 0; i < region_ids.size(); ++i) {
        if (!region_index.emplace(region_ids[i], i).second) {
            throw std::invalid_argument("load_flow_csv: duplicate region id " + region_ids[i]);
        }
    }

    struct Entry {
        HourStamp hour;
        std::size_t region;
        double in, out;
        std::size_t line;
    };
    std::vector<Entry> entries;
    entries.reserve(f.rows.size());
    for (const auto& row : f.rows) {
        expect_fields(row, 4, path);
        const HourStamp h = parse_hour(row.fields[0], path, row.line);
        const auto it = region_index.find(row.fields[1]);
        if (it == region_index.end()) {
            throw std::runtime_error(path.string() + ":" + std::to_string(row.line) + ": unknown region_id '" +
                                     row.fields[1] + "'");
        }
        const double in = csv::parse_double(row.fields[2], path, row.line, "inflow");
        const double out = csv::parse_double(row.fields[3], path, row.line, "outflow");
        if (in < 0.0 || out < 0.0) {
            throw std::runtime_error(path.string() + ":" + std::to_string(row.line) + ": negative flow count");
        }
        entries.push_back({h, it->second, in, out, row.line});
    }
    if (entries.empty()) throw std::runtime_error(path.string() + ": no flow records");

    const auto [lo, hi] = std::minmax_element(entries.begin(), entries.end(),
                                              [](const Entry& a, const Entry& b) { return a.hour < b.hour; });
    const HourStamp first = lo->hour;
    const auto length = static_cast<std::size_t>(hi->hour.hours - first.hours + 1);

    FlowSeries flow;
    flow.region_ids = region_ids;
    flow.timestamps.reserve(length);
    for (std::size_t t = 0; t < length; ++t) flow.timestamps.push_back(HourStamp{first.hours + static_cast<std::int64_t>(t)});
    flow.values = Tensor({length, region_ids.size(), kFlowFeatures});
    std::vector<char> seen(length * region_ids.size(), 0);
    for (const auto& e : entries) {
        const auto t = static_cast<std::size_t>(e.hour.hours - first.hours);
        char& s = seen[t * region_ids.size() + e.region];
        if (s) {
            throw std::runtime_error(path.string() + ":" + std::to_string(e.line) + ": duplicate record for region " +
                                     region_ids[e.region] + " at " + format_iso_hour(e.hour));
        }
        s = 1;
        flow.values.at(t, e.region, kInflow) = e.in;
        flow.values.at(t, e.region, kOutflow) = e.out;
    }
    return flow;
}

std::vector<TemporalRecord> load_temporal_csv(const std::filesystem::path& path) {
    const csv::File f = csv::read(path);
    expect_header(f, {"timestamp", "hour", "dow", "is_holiday", "weather", "temperature"}, path);
    std::vector<TemporalRecord> out;
    out.reserve(f.rows.size());
    for (const auto& row : f.rows) {
        expect_fields(row, 6, path);
        TemporalRecord r;
        r.timestamp = parse_hour(row.fields[0], path, row.line);
        r.hour = static_cast<int>(csv::parse_int(row.fields[1], path, row.line, "hour"));
        r.dow = static_cast<int>(csv::parse_int(row.fields[2], path, row.line, "dow"));
        r.holiday = csv::parse_int(row.fields[3], path, row.line, "is_holiday") != 0;
        r.weather = row.fields[4];
        r.temperature = csv::parse_double(row.fields[5], path, row.line, "temperature");
        if (!out.empty() && r.timestamp.hours != out.back().timestamp.hours + 1) {
            throw std::runtime_error(path.string() + ":" + std::to_string(row.line) +
                                     ": temporal rows must be consecutive hours");
        }
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<SpatialRecord> load_spatial_csv(const std::filesystem::path& path, std::vector<std::string>& poi_vocab) {
    const csv::File f = csv::read(path);
    const auto& h = f.header;
    const std::vector<std::string> tail{"houses_for_sale", "avg_price", "shootings", "complaints"};
    if (h.size() < 1 + tail.size() || h.front() != "region_id" ||
        !std::equal(tail.begin(), tail.end(), h.end() - static_cast<std::ptrdiff_t>(tail.size()))) {
        throw std::runtime_error(path.string() +
                                 ":1: expected header 'region_id,<poi...>,houses_for_sale,avg_price,shootings,complaints'");
    }
    poi_vocab.assign(h.begin() + 1, h.end() - static_cast<std::ptrdiff_t>(tail.size()));
    const std::size_t k = poi_vocab.size();
    std::vector<SpatialRecord> out;
    for (const auto& row : f.rows) {
        expect_fields(row, h.size(), path);
        SpatialRecord r;
        r.region_id = row.fields[0];
        for (std::size_t c = 0; c < k; ++c) {
            r.poi_counts.push_back(csv::parse_double(row.fields[1 + c], path, row.line, h[1 + c]));
        }
        r.houses_for_sale = csv::parse_double(row.fields[1 + k], path, row.line, tail[0]);
        r.avg_price = csv::parse_double(row.fields[2 + k], path, row.line, tail[1]);
        r.shootings = csv::parse_double(row.fields[3 + k], path, row.line, tail[2]);
        r.complaints = csv::parse_double(row.fields[4 + k], path, row.line, tail[3]);
        out.push_back(std::move(r));
    }
    return out;
}

FeatureSchema temporal_schema(const std::vector<std::string>& weather_vocab) {
    FeatureSchema s;
    for (int h = 0; h < 24; ++h) s.columns.push_back("hour_" + std::to_string(h));
    for (int d = 0; d < 7; ++d) s.columns.push_back("dow_" + std::to_string(d));
    s.columns.emplace_back("is_holiday");
    for (const auto& w : weather_vocab) s.columns.push_back("weather_" + w);
    s.columns.emplace_back("temperature");
    return s;
}

TemporalConfounderTable encode_temporal_features(std::span<const TemporalRecord> records,
                                                 const std::vector<std::string>& weather_vocab,
                                                 const Standardization& temperature) {
    TemporalConfounderTable table;
    table.schema = temporal_schema(weather_vocab);
    const std::size_t width = table.schema.width();
    const std::size_t weather_off = 24 + 7 + 1;
    table.rows = Tensor({records.size(), width});
    for (std::size_t r = 0; r < records.size(); ++r) {
        const auto& rec = records[r];
        if (rec.hour < 0 || rec.hour > 23) {
            throw std::invalid_argument("temporal record " + std::to_string(r) + ": hour " + std::to_string(rec.hour) +
                                        " outside 0-23");
        }
        if (rec.dow < 0 || rec.dow > 6) {
            throw std::invalid_argument("temporal record " + std::to_string(r) + ": day-of-week " +
                                        std::to_string(rec.dow) + " outside 0-6");
        }
        const auto w = std::find(weather_vocab.begin(), weather_vocab.end(), rec.weather);
        if (w == weather_vocab.end()) {
            throw std::invalid_argument("unknown weather category '" + rec.weather + "' at temporal record " +
                                        std::to_string(r));
        }
        table.rows.at(r, static_cast<std::size_t>(rec.hour)) = 1.0;
        table.rows.at(r, 24 + static_cast<std::size_t>(rec.dow)) = 1.0;
        table.rows.at(r, 31) = rec.holiday ? 1.0 : 0.0;
        table.rows.at(r, weather_off + static_cast<std::size_t>(w - weather_vocab.begin())) = 1.0;
        table.rows.at(r, width - 1) = temperature.apply(rec.temperature);
    }
    return table;
}

FeatureSchema spatial_schema(const std::vector<std::string>& poi_vocab, const std::vector<std::string>& region_ids,
                             const SpatialEncodeOptions& opts) {
    FeatureSchema s;
    if (opts.zone_onehot) {
        for (const auto& id : region_ids) s.columns.push_back("zone_" + id);
    }
    for (const auto& p : poi_vocab) s.columns.push_back("poi_" + p);
    for (const char* c : {"houses_for_sale", "avg_price", "shootings", "complaints"}) s.columns.emplace_back(c);
    return s;
}

SpatialConfounderTable encode_spatial_features(std::span<const SpatialRecord> records,
                                               const std::vector<std::string>& region_ids,
                                               const std::vector<std::string>& poi_vocab,
                                               const SpatialEncodeOptions& opts) {
    std::map<std::string, const SpatialRecord*> by_id;
    for (const auto& r : records) {
        if (!by_id.emplace(r.region_id, &r).second) {
            throw std::invalid_argument("duplicate spatial record for region " + r.region_id);
        }
        if (r.poi_counts.size() != poi_vocab.size()) {
            throw std::invalid_argument("region " + r.region_id + ": expected " + std::to_string(poi_vocab.size()) +
                                        " POI counts, got " + std::to_string(r.poi_counts.size()));
        }
        auto check = [&](double v, const std::string& what) {
            if (!std::isfinite(v) || v < 0.0) {
                throw std::invalid_argument("region " + r.region_id + ": negative or non-finite count for " + what);
            }
        };
        for (std::size_t c = 0; c < poi_vocab.size(); ++c) check(r.poi_counts[c], "poi_" + poi_vocab[c]);
        check(r.houses_for_sale, "houses_for_sale");
        check(r.shootings, "shootings");
        check(r.complaints, "complaints");
        if (!std::isfinite(r.avg_price)) throw std::invalid_argument("region " + r.region_id + ": non-finite avg_price");
    }

    std::vector<const SpatialRecord*> ordered;
    for (const auto& id : region_ids) {
        const auto it = by_id.find(id);
        if (it == by_id.end()) throw std::invalid_argument("missing spatial record for region " + id);
        ordered.push_back(it->second);
    }

    std::vector<double> prices;
    for (const auto* r : ordered) prices.push_back(r->avg_price);
    const Standardization price = fit_standardization(prices);

    SpatialConfounderTable table;
    table.schema = spatial_schema(poi_vocab, region_ids, opts);
    const std::size_t zone = opts.zone_onehot ? region_ids.size() : 0;
    table.rows = Tensor({region_ids.size(), table.schema.width()});
    for (std::size_t i = 0; i < ordered.size(); ++i) {
        const auto& r = *ordered[i];
        std::size_t c = 0;
        if (opts.zone_onehot) table.rows.at(i, i) = 1.0;
        c = zone;
        for (double v : r.poi_counts) table.rows.at(i, c++) = std::log1p(v);
        table.rows.at(i, c++) = std::log1p(r.houses_for_sale);
        table.rows.at(i, c++) = price.apply(r.avg_price);
        table.rows.at(i, c++) = std::log1p(r.shootings);
        table.rows.at(i, c++) = std::log1p(r.complaints);
    }
    return table;
}

std::size_t window_count(std::size_t length, std::size_t past, std::size_t future, std::size_t stride) {
    if (stride == 0) throw std::invalid_argument("window stride must be >= 1");
    if (past == 0 || future == 0) throw std::invalid_argument("window lengths must be >= 1");
    if (length < past + future) {
        throw std::invalid_argument("series length " + std::to_string(length) + " is shorter than the minimum " +
                                    std::to_string(past + future) + " (T_p + T_f)");
    }
    return (length - past - future) / stride + 1;
}

std::vector<WindowSample> make_windows(const FlowSeries& flow, std::size_t past, std::size_t future,
                                       std::size_t stride) {
    const std::size_t count = window_count(flow.length(), past, future, stride);
    std::vector<WindowSample> out;
    out.reserve(count);
    for (std::size_t w = 0; w < count; ++w) {
        const std::size_t s = w * stride;
        WindowSample ws;
        ws.x = slice_rows(flow.values, s, s + past);
        ws.y = slice_rows(flow.values, s + past, s + past + future);
        ws.past_time_idx.resize(past);
        ws.future_time_idx.resize(future);
        std::iota(ws.past_time_idx.begin(), ws.past_time_idx.end(), s);
        std::iota(ws.future_time_idx.begin(), ws.future_time_idx.end(), s + past);
        out.push_back(std::move(ws));
    }
    return out;
}

std::array<std::size_t, 3> split_sizes(std::size_t count, const SplitRatios& ratios) {
    if (!(ratios.train > 0.0 && ratios.val > 0.0 && ratios.test > 0.0)) {
        throw std::invalid_argument("split ratios must be positive");
    }
    const double total = ratios.train + ratios.val + ratios.test;
    const auto val = static_cast<std::size_t>(std::floor(ratios.val / total * static_cast<double>(count)));
    const auto test = static_cast<std::size_t>(std::floor(ratios.test / total * static_cast<double>(count)));
    const std::size_t train = count - val - test;
    if (train == 0 || val == 0 || test == 0) {
        throw std::invalid_argument("split of " + std::to_string(count) + " windows leaves an empty bucket (" +
                                    std::to_string(train) + "/" + std::to_string(val) + "/" + std::to_string(test) +
                                    ")");
    }
    return {train, val, test};
}

WindowSplits split_windows(std::vector<WindowSample> windows, const SplitRatios& ratios, std::uint64_t seed) {
    const auto sizes = split_sizes(windows.size(), ratios);
    std::stable_sort(windows.begin(), windows.end(),
                     [](const WindowSample& a, const WindowSample& b) { return a.start() < b.start(); });
    WindowSplits s;
    auto it = std::make_move_iterator(windows.begin());
    s.train.assign(it, it + static_cast<std::ptrdiff_t>(sizes[0]));
    it += static_cast<std::ptrdiff_t>(sizes[0]);
    s.val.assign(it, it + static_cast<std::ptrdiff_t>(sizes[1]));
    it += static_cast<std::ptrdiff_t>(sizes[1]);
    s.test.assign(it, std::make_move_iterator(windows.end()));
    std::mt19937_64 rng(seed);
    std::shuffle(s.train.begin(), s.train.end(), rng);
    std::shuffle(s.val.begin(), s.val.end(), rng);
    return s;
}

Scaler::Scaler(std::vector<double> mean, std::vector<double> std) : mean_(std::move(mean)), std_(std::move(std)) {
    if (mean_.size() != std_.size()) throw std::invalid_argument("scaler mean/std size mismatch");
    for (std::size_t k = 0; k < std_.size(); ++k) {
        if (!(std_[k] > 0.0)) {
            throw std::invalid_argument("scaler feature " + std::to_string(k) + " has zero standard deviation");
        }
    }
}

Scaler Scaler::fit(std::span<const WindowSample> train) {
    if (train.empty()) throw std::invalid_argument("cannot fit scaler on an empty split");
    const std::size_t f = train.front().x.shape().back();
    std::vector<double> sum(f, 0.0);
    std::vector<double> count(f, 0.0);
    auto visit = [&](const Tensor& t, auto&& fn) {
        if (t.shape().back() != f) throw std::invalid_argument("scaler: inconsistent feature count");
        for (std::size_t i = 0; i < t.size(); ++i) fn(i % f, t[i]);
    };
    for (const auto& w : train) {
        auto acc = [&](std::size_t k, double v) {
            sum[k] += v;
            count[k] += 1.0;
        };
        visit(w.x, acc);
        visit(w.y, acc);
    }
    std::vector<double> mean(f);
    for (std::size_t k = 0; k < f; ++k) mean[k] = sum[k] / count[k];
    std::vector<double> sq(f, 0.0);
    for (const auto& w : train) {
        auto acc = [&](std::size_t k, double v) { sq[k] += (v - mean[k]) * (v - mean[k]); };
        visit(w.x, acc);
        visit(w.y, acc);
    }
    std::vector<double> sd(f);
    for (std::size_t k = 0; k < f; ++k) {
        sd[k] = std::sqrt(sq[k] / count[k]);
        if (!(sd[k] > 0.0)) {
            const char* name = k == kInflow ? "inflow" : (k == kOutflow ? "outflow" : "feature");
            throw std::invalid_argument(std::string("scaler: ") + name + " (feature " + std::to_string(k) +
                                        ") has zero standard deviation in the training split");
        }
    }
    return Scaler(std::move(mean), std::move(sd));
}

Tensor Scaler::transform(const Tensor& t) const {
    const std::size_t f = mean_.size();
    if (t.rank() == 0 || t.shape().back() != f) {
        throw std::invalid_argument("scaler: expected last axis " + std::to_string(f) + ", got " + shape_str(t.shape()));
    }
    Tensor out = t;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = (out[i] - mean_[i % f]) / std_[i % f];
    return out;
}

Tensor Scaler::inverse_transform(const Tensor& t) const {
    const std::size_t f = mean_.size();
    if (t.rank() == 0 || t.shape().back() != f) {
        throw std::invalid_argument("scaler: expected last axis " + std::to_string(f) + ", got " + shape_str(t.shape()));
    }
    Tensor out = t;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = out[i] * std_[i % f] + mean_[i % f];
    return out;
}

void standardize_windows(std::vector<WindowSample>& windows, const Scaler& scaler) {
    for (auto& w : windows) {
        w.x = scaler.transform(w.x);
        w.y = scaler.transform(w.y);
    }
}

}  // namespace stdc
