#include <cmath>
#include <stdexcept>

#include "stdc/evaluation.hpp"

namespace stdc {

MetricSet compute_metric_set(std::span<const double> y_hat, std::span<const double> y) {
    if (y_hat.size() != y.size()) throw std::invalid_argument("compute_metric_set: size mismatch");
    MetricSet m;
    m.count = y.size();
    if (y.empty()) return m;
    double abs_sum = 0.0, sq_sum = 0.0, pct_sum = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double err = y_hat[i] - y[i];
        abs_sum += std::abs(err);
        sq_sum += err * err;
        if (std::abs(y[i]) >= kMapeThreshold) {
            pct_sum += std::abs(err) / std::abs(y[i]);
            ++m.mape_count;
        }
    }
    const double n = static_cast<double>(y.size());
    m.mae = abs_sum / n;
    m.mse = sq_sum / n;
    m.rmse = std::sqrt(m.mse);
    if (m.mape_count > 0) m.mape = 100.0 * pct_sum / static_cast<double>(m.mape_count);
    return m;
}

namespace {

SliceSummary summarize(std::vector<MetricSet> slices) {
    SliceSummary s;
    s.slices = std::move(slices);
    if (s.slices.empty()) return s;
    const double k = static_cast<double>(s.slices.size());
    for (const auto& m : s.slices) {
        s.mae_mean += m.mae / k;
        s.rmse_mean += m.rmse / k;
    }
    for (const auto& m : s.slices) {
        s.mae_std += (m.mae - s.mae_mean) * (m.mae - s.mae_mean) / k;
        s.rmse_std += (m.rmse - s.rmse_mean) * (m.rmse - s.rmse_mean) / k;
    }
    s.mae_std = std::sqrt(s.mae_std);
    s.rmse_std = std::sqrt(s.rmse_std);
    return s;
}

nlohmann::json metric_json(const MetricSet& m) {
    nlohmann::json j{{"mae", m.mae}, {"mse", m.mse}, {"rmse", m.rmse}, {"count", m.count}};
    j["mape"] = m.mape ? nlohmann::json(*m.mape) : nlohmann::json(nullptr);
    return j;
}

nlohmann::json slice_json(const SliceSummary& s) {
    nlohmann::json j{{"mae_mean", s.mae_mean}, {"mae_std", s.mae_std}, {"rmse_mean", s.rmse_mean},
                     {"rmse_std", s.rmse_std}};
    j["slices"] = nlohmann::json::array();
    for (const auto& m : s.slices) j["slices"].push_back(metric_json(m));
    return j;
}

}  // namespace

nlohmann::json EvalReport::to_json() const {
    nlohmann::json j;
    j["in"] = metric_json(in);
    j["out"] = metric_json(out);
    j["io"] = metric_json(io);
    j["per_region"] = slice_json(per_region);
    j["per_horizon"] = slice_json(per_horizon);
    j["in_out_mae_ratio"] = in_out_mae_ratio ? nlohmann::json(*in_out_mae_ratio) : nlohmann::json(nullptr);
    j["windows"] = windows;
    return j;
}

EvalReport compute_metrics(const Tensor& y_hat, const Tensor& y, Breakdown breakdown) {
    if (y_hat.shape() != y.shape()) {
        throw std::invalid_argument("compute_metrics: shape mismatch " + shape_str(y_hat.shape()) + " vs " +
                                    shape_str(y.shape()));
    }
    if (y.rank() != 3 && y.rank() != 4) {
        throw std::invalid_argument("compute_metrics: expected [T, n, f] or [W, T, n, f], got " + shape_str(y.shape()));
    }
    const bool batched = y.rank() == 4;
    const std::size_t W = batched ? y.dim(0) : 1;
    const std::size_t T = y.dim(batched ? 1 : 0);
    const std::size_t n = y.dim(batched ? 2 : 1);
    const std::size_t f = y.dim(batched ? 3 : 2);

    std::vector<double> a_in, b_in, a_out, b_out;
    std::vector<std::vector<double>> ra(n), rb(n), ha(T), hb(T);
    for (std::size_t w = 0; w < W; ++w)
        for (std::size_t t = 0; t < T; ++t)
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t c = 0; c < f; ++c) {
                    const std::size_t idx = ((w * T + t) * n + i) * f + c;
                    const double p = y_hat[idx], q = y[idx];
                    if (c == kInflow) {
                        a_in.push_back(p);
                        b_in.push_back(q);
                    } else if (c == kOutflow) {
                        a_out.push_back(p);
                        b_out.push_back(q);
                    }
                    if (breakdown.region) {
                        ra[i].push_back(p);
                        rb[i].push_back(q);
                    }
                    if (breakdown.horizon) {
                        ha[t].push_back(p);
                        hb[t].push_back(q);
                    }
                }

    EvalReport r;
    r.windows = W;
    r.in = compute_metric_set(a_in, b_in);
    r.out = compute_metric_set(a_out, b_out);
    r.io = compute_metric_set(y_hat.values(), y.values());
    if (!b_in.empty() && !b_out.empty() && r.out.mae > 0.0) r.in_out_mae_ratio = r.in.mae / r.out.mae;
    if (breakdown.region) {
        std::vector<MetricSet> s;
        for (std::size_t i = 0; i < n; ++i) s.push_back(compute_metric_set(ra[i], rb[i]));
        r.per_region = summarize(std::move(s));
    }
    if (breakdown.horizon) {
        std::vector<MetricSet> s;
        for (std::size_t t = 0; t < T; ++t) s.push_back(compute_metric_set(ha[t], hb[t]));
        r.per_horizon = summarize(std::move(s));
    }
    return r;
}

Tensor persistence_baseline(const Tensor& x, std::size_t future) {
    if (x.rank() != 3 || x.dim(0) == 0) throw std::invalid_argument("persistence_baseline: expected [T_p, n, f]");
    const std::size_t n = x.dim(1), f = x.dim(2), last = x.dim(0) - 1;
    Tensor out({future, n, f});
    for (std::size_t t = 0; t < future; ++t)
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t c = 0; c < f; ++c) out.at(t, i, c) = x.at(last, i, c);
    return out;
}

}  // namespace stdc
