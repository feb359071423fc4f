#include "stdc/evaluation.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <stdexcept>

#include "stdc/csv.hpp"

namespace stdc {

namespace {

Tensor stack(const std::vector<Tensor>& parts) {
    if (parts.empty()) return {};
    Shape s{parts.size()};
    for (std::size_t d : parts.front().shape()) s.push_back(d);
    Tensor out(s);
    std::size_t off = 0;
    for (const auto& p : parts) {
        std::copy(p.storage().begin(), p.storage().end(), out.storage().begin() + static_cast<std::ptrdiff_t>(off));
        off += p.size();
    }
    return out;
}

}  // namespace

Predictions predict_windows(const ModelConfig& cfg, const ModelParams& params, const PreparedData& data,
                            std::span<const WindowSample> windows) {
    if (windows.empty()) throw std::invalid_argument("predict_windows: no windows");
    std::vector<Tensor> yh, yt;
    for (const auto& w : windows) {
        const Example ex = make_example(data, w);
        yh.push_back(data.scaler.inverse_transform(predict(cfg, params, ex.inputs())));
        yt.push_back(data.scaler.inverse_transform(ex.y));
    }
    return {stack(yh), stack(yt)};
}

Predictions persistence_windows(const PreparedData& data, std::span<const WindowSample> windows, std::size_t future) {
    if (windows.empty()) throw std::invalid_argument("persistence_windows: no windows");
    std::vector<Tensor> yh, yt;
    for (const auto& w : windows) {
        yh.push_back(data.scaler.inverse_transform(persistence_baseline(w.x, future)));
        yt.push_back(data.scaler.inverse_transform(w.y));
    }
    return {stack(yh), stack(yt)};
}

EvalReport evaluate(const ModelConfig& cfg, const ModelParams& params, const PreparedData& data,
                    std::span<const WindowSample> windows) {
    const Predictions p = predict_windows(cfg, params, data, windows);
    return compute_metrics(p.y_hat, p.y);
}

void check_schema(const FeatureSchema& expected, const FeatureSchema& actual, const std::string& what) {
    const std::size_t common = std::min(expected.width(), actual.width());
    for (std::size_t c = 0; c < common; ++c) {
        if (expected.columns[c] != actual.columns[c]) {
            throw std::invalid_argument(what + " schema mismatch at column " + std::to_string(c) + ": expected '" +
                                        expected.columns[c] + "', got '" + actual.columns[c] + "'");
        }
    }
    if (expected.width() != actual.width()) {
        const bool longer = expected.width() > actual.width();
        const std::string col = longer ? expected.columns[common] : actual.columns[common];
        throw std::invalid_argument(what + " schema mismatch at column " + std::to_string(common) + ": " +
                                    (longer ? "missing '" + col + "'" : "unexpected '" + col + "'") + " (expected " +
                                    std::to_string(expected.width()) + " columns, got " +
                                    std::to_string(actual.width()) + ")");
    }
}

EvalReport zero_shot_eval(const Checkpoint& ckpt, const CityData& ood, PrepareOptions opts) {
    const ModelConfig& cfg = ckpt.config;
    opts.past = cfg.past;
    opts.future = cfg.future;
    opts.d_lap = cfg.d_lap;
    const PreparedData data = prepare(ood, opts);
    check_schema(cfg.temporal_schema, data.temporal.schema, "temporal confounder");
    check_schema(cfg.spatial_schema, data.spatial.schema, "spatial confounder");
    if (data.splits.test.empty()) throw std::invalid_argument("zero_shot_eval: target city has no test windows");
    return evaluate(cfg, ckpt.params, data, data.splits.test);
}

GateExport export_gate_weights(const ModelConfig& cfg, const ModelParams& params, const PreparedData& data,
                               std::span<const WindowSample> windows) {
    std::vector<const WindowSample*> order;
    for (const auto& w : windows) order.push_back(&w);
    std::sort(order.begin(), order.end(),
              [](const WindowSample* a, const WindowSample* b) { return a->start() < b->start(); });

    const std::size_t n = data.regions();
    std::map<std::size_t, std::vector<double>> by_time;  // timestep -> per-region p_cs
    for (const WindowSample* w : order) {
        const bool fresh = std::any_of(w->past_time_idx.begin(), w->past_time_idx.end(),
                                       [&](std::size_t t) { return !by_time.count(t); });
        if (!fresh) continue;
        const Example ex = make_example(data, *w);
        Diagnostics diag;
        predict(cfg, params, ex.inputs(), &diag, DiagnosticsRequest{true, false});
        const Tensor& g = diag.encoder_gates.front();  // [T_p, n, d]
        const std::size_t d = g.dim(2);
        for (std::size_t k = 0; k < w->past_time_idx.size(); ++k) {
            const std::size_t t = w->past_time_idx[k];
            if (by_time.count(t)) continue;
            std::vector<double> row(n, 0.0);
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t c = 0; c < d; ++c) row[i] += g.at(k, i, c);
                row[i] /= static_cast<double>(d);
            }
            by_time.emplace(t, std::move(row));
        }
    }

    GateExport out;
    out.region_ids = data.region_ids;
    out.region_mean.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (const auto& [t, row] : by_time) {
            out.rows.push_back({data.region_ids[i], data.timestamps[t], row[i]});
            out.region_mean[i] += row[i];
        }
        if (!by_time.empty()) out.region_mean[i] /= static_cast<double>(by_time.size());
    }
    return out;
}

void write_gate_csv(const std::filesystem::path& path, const GateExport& g) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "region_id,timestamp,p_cs\n";
    for (const auto& r : g.rows) out << r.region_id << ',' << format_iso_hour(r.timestamp) << ',' << csv::format_double(r.p_cs) << '\n';
}

void write_gate_region_csv(const std::filesystem::path& path, const GateExport& g) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "region_id,mean_p_cs\n";
    for (std::size_t i = 0; i < g.region_ids.size(); ++i) {
        out << g.region_ids[i] << ',' << csv::format_double(g.region_mean[i]) << '\n';
    }
}

nlohmann::json AttentionExport::to_json() const {
    nlohmann::json j;
    j["shape"] = attention.shape();
    j["region_ids"] = region_ids;
    std::vector<std::string> p, f;
    for (auto h : past) p.push_back(format_iso_hour(h));
    for (auto h : future) f.push_back(format_iso_hour(h));
    j["past_timestamps"] = p;
    j["future_timestamps"] = f;
    nlohmann::json a = nlohmann::json::array();
    for (std::size_t i = 0; i < attention.dim(0); ++i) {
        nlohmann::json region = nlohmann::json::array();
        for (std::size_t q = 0; q < attention.dim(1); ++q) {
            std::vector<double> row;
            for (std::size_t k = 0; k < attention.dim(2); ++k) row.push_back(attention.at(i, q, k));
            region.push_back(row);
        }
        a.push_back(region);
    }
    j["attention"] = a;
    return j;
}

AttentionExport export_cta_attention(const ModelConfig& cfg, const ModelParams& params, const PreparedData& data,
                                     const WindowSample& window) {
    if (!params.cta) throw std::invalid_argument("export_cta_attention: model has no cross-time attention");
    const Example ex = make_example(data, window);
    Diagnostics diag;
    predict(cfg, params, ex.inputs(), &diag, DiagnosticsRequest{false, true});
    AttentionExport out;
    out.attention = std::move(diag.cta_attention);
    out.region_ids = data.region_ids;
    for (auto t : window.past_time_idx) out.past.push_back(data.timestamps[t]);
    for (auto t : window.future_time_idx) out.future.push_back(data.timestamps[t]);
    return out;
}

}  // namespace stdc
