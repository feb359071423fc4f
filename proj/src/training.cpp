#include "stdc/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>
#include <stdexcept>

#include <json.hpp>

namespace stdc {

void TrainConfig::validate() const {
    auto fail = [](const std::string& m) { throw std::invalid_argument("train config: " + m); };
    if (batch_size == 0) fail("batch_size must be >= 1");
    if (max_epochs == 0) fail("max_epochs must be >= 1");
    if (early_stop_patience == 0 || early_stop_patience >= max_epochs) fail("early_stop_patience must be in [1, max_epochs)");
    if (lr < 0.0 || !std::isfinite(lr)) fail("lr must be finite and >= 0");
    if (!(plateau.factor > 0.0 && plateau.factor < 1.0)) fail("plateau factor must be in (0, 1)");
    if (plateau.patience == 0) fail("plateau patience must be >= 1");
    if (plateau.min_lr < 0.0) fail("plateau min_lr must be >= 0");
    if (grad_clip && !(*grad_clip > 0.0)) fail("grad_clip must be > 0");
}

Adam::Adam(const std::vector<NamedTensor>& params, double beta1, double beta2, double eps)
    : beta1_(beta1), beta2_(beta2), eps_(eps) {
    for (const auto& p : params) {
        m_.emplace_back(p.tensor->shape());
        v_.emplace_back(p.tensor->shape());
    }
}

void Adam::step(const std::vector<NamedTensor>& params, const std::vector<NamedTensor>& grads, double lr) {
    if (params.size() != m_.size() || grads.size() != m_.size()) {
        throw std::invalid_argument("Adam::step: parameter list changed size");
    }
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t k = 0; k < m_.size(); ++k) {
        Tensor& p = *params[k].tensor;
        const Tensor& g = *grads[k].tensor;
        for (std::size_t i = 0; i < p.size(); ++i) {
            m_[k][i] = beta1_ * m_[k][i] + (1.0 - beta1_) * g[i];
            v_[k][i] = beta2_ * v_[k][i] + (1.0 - beta2_) * g[i] * g[i];
            const double mh = m_[k][i] / c1;
            const double vh = v_[k][i] / c2;
            p[i] -= lr * mh / (std::sqrt(vh) + eps_);
        }
    }
}

bool PlateauScheduler::step(double metric) {
    if (!has_best_ || metric < best_) {
        best_ = metric;
        has_best_ = true;
        bad_epochs_ = 0;
        return false;
    }
    if (++bad_epochs_ < cfg_.patience) return false;
    bad_epochs_ = 0;
    const double next = std::max(lr_ * cfg_.factor, cfg_.min_lr);
    if (next >= lr_) return false;
    lr_ = next;
    return true;
}

std::string to_jsonl(const EpochRecord& r) {
    nlohmann::json j{{"epoch", r.epoch}, {"train_loss", r.train_loss}, {"val_mae", r.val_mae}, {"lr", r.lr},
                     {"steps", r.steps}};
    return j.dump();
}

double evaluate_mae(const ModelConfig& cfg, const ModelParams& params, const PreparedData& data,
                    std::span<const WindowSample> windows) {
    if (windows.empty()) throw std::invalid_argument("evaluate_mae: no windows");
    double total = 0.0;
    std::size_t count = 0;
    for (const auto& w : windows) {
        const Example ex = make_example(data, w);
        const Tensor pred = data.scaler.inverse_transform(predict(cfg, params, ex.inputs()));
        const Tensor truth = data.scaler.inverse_transform(ex.y);
        for (std::size_t i = 0; i < pred.size(); ++i) total += std::abs(pred[i] - truth[i]);
        count += pred.size();
    }
    return total / static_cast<double>(count);
}

namespace {

void clip_global_norm(const std::vector<NamedTensor>& grads, double max_norm) {
    double sq = 0.0;
    for (const auto& g : grads)
        for (double v : g.tensor->values()) sq += v * v;
    const double norm = std::sqrt(sq);
    if (norm <= max_norm) return;
    const double s = max_norm / norm;
    for (const auto& g : grads) *g.tensor *= s;
}

}  // namespace

TrainState train(const ModelConfig& cfg, ModelParams init, const PreparedData& data, const TrainConfig& tc,
                 std::ostream* log) {
    tc.validate();
    cfg.validate();
    const auto& train_set = data.splits.train;
    const auto& val_set = data.splits.val;
    if (train_set.empty()) throw std::invalid_argument("train: training split is empty");
    if (val_set.empty()) throw std::invalid_argument("train: validation split is empty");

    std::vector<Example> examples;
    examples.reserve(train_set.size());
    for (const auto& w : train_set) examples.push_back(make_example(data, w));

    ModelParams params = std::move(init);
    ModelParams grads = zeros_like(params);
    const auto p_list = params.named();
    const auto g_list = grads.named();
    Adam adam(p_list);
    PlateauScheduler sched(tc.lr, tc.plateau);
    Rng rng(tc.seed);

    TrainState st;
    st.batch_size = tc.batch_size;
    st.train_windows = train_set.size();
    st.val_windows = val_set.size();
    bool have_best = false;

    std::vector<std::size_t> order(examples.size());
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t epoch = 0; epoch < tc.max_epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        EpochRecord rec;
        rec.epoch = epoch;
        rec.lr = sched.lr();
        double loss_sum = 0.0;
        for (std::size_t b = 0; b < order.size(); b += tc.batch_size) {
            const std::size_t e = std::min(order.size(), b + tc.batch_size);
            const double w = 1.0 / static_cast<double>(e - b);
            for (const auto& g : g_list) g.tensor->fill(0.0);
            double batch_loss = 0.0;
            for (std::size_t k = b; k < e; ++k) {
                const Example& ex = examples[order[k]];
                batch_loss += w * loss_and_gradient(cfg, params, ex.inputs(), ex.y, grads, w);
            }
            if (!std::isfinite(batch_loss)) {
                throw std::runtime_error("train: non-finite loss at epoch " + std::to_string(epoch) + ", step " +
                                         std::to_string(rec.steps));
            }
            if (tc.grad_clip) clip_global_norm(g_list, *tc.grad_clip);
            adam.step(p_list, g_list, rec.lr);
            loss_sum += batch_loss;
            ++rec.steps;
        }
        rec.train_loss = loss_sum / static_cast<double>(rec.steps);
        rec.val_mae = evaluate_mae(cfg, params, data, val_set);
        if (!std::isfinite(rec.val_mae)) {
            throw std::runtime_error("train: non-finite validation MAE at epoch " + std::to_string(epoch));
        }
        st.history.push_back(rec);
        if (log) *log << to_jsonl(rec) << '\n' << std::flush;

        if (!have_best || rec.val_mae < st.best_val_mae) {
            have_best = true;
            st.best_val_mae = rec.val_mae;
            st.best_epoch = epoch;
            st.best_params = params;
        }
        sched.step(rec.val_mae);
        if (epoch - st.best_epoch >= tc.early_stop_patience) {
            st.early_stopped = true;
            break;
        }
    }
    return st;
}

double GradientCheckReport::max_rel_error() const {
    double m = 0.0;
    for (const auto& p : params) m = std::max(m, p.max_rel_error);
    return m;
}

std::vector<std::string> GradientCheckReport::failing() const {
    std::vector<std::string> out;
    for (const auto& p : params)
        if (!p.pass) out.push_back(p.name);
    return out;
}

GradientCheckReport gradient_check(const ModelConfig& cfg, const ModelParams& params, std::span<const Example> batch,
                                   double tolerance, const GradientHook& corrupt) {
    if (batch.empty()) throw std::invalid_argument("gradient_check: empty batch");
    const double w = 1.0 / static_cast<double>(batch.size());
    ModelParams grads = zeros_like(params);
    for (const auto& ex : batch) loss_and_gradient(cfg, params, ex.inputs(), ex.y, grads, w);
    if (corrupt) corrupt(grads);

    ModelParams probe = params;
    auto loss = [&] {
        double s = 0.0;
        for (const auto& ex : batch) s += w * mae_loss(predict(cfg, probe, ex.inputs()), ex.y);
        return s;
    };

    constexpr double h = 1e-5;
    GradientCheckReport rep;
    rep.tolerance = tolerance;
    rep.pass = true;
    const auto p_list = probe.named();
    const auto g_list = grads.named();
    for (std::size_t k = 0; k < p_list.size(); ++k) {
        Tensor& p = *p_list[k].tensor;
        const Tensor& g = *g_list[k].tensor;
        ParamCheck pc{p_list[k].name, p.size(), 0.0, true};
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double orig = p[i];
            p[i] = orig + h;
            const double up = loss();
            p[i] = orig - h;
            const double down = loss();
            p[i] = orig;
            const double num = (up - down) / (2.0 * h);
            const double rel = std::abs(g[i] - num) / std::max({std::abs(g[i]), std::abs(num), 1e-6});
            pc.max_rel_error = std::max(pc.max_rel_error, rel);
        }
        pc.pass = pc.max_rel_error < tolerance;
        rep.pass = rep.pass && pc.pass;
        rep.params.push_back(std::move(pc));
    }
    return rep;
}

}  // namespace stdc
