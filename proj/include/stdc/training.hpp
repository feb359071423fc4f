#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stdc/dataset.hpp"
#include "stdc/model.hpp"

namespace stdc {

struct PlateauSchedule {
    double factor = 0.5;
    std::size_t patience = 10;  // epochs without improvement before a reduction
    double min_lr = 1e-5;
};

struct TrainConfig {
    double lr = 1e-3;
    std::size_t max_epochs = 120;
    std::size_t early_stop_patience = 50;
    PlateauSchedule plateau;
    std::size_t batch_size = 64;
    std::uint64_t seed = 0;
    std::optional<double> grad_clip;  // max global L2 norm

    void validate() const;
};

// Adam over a fixed list of tensors.
class Adam {
public:
    Adam(const std::vector<NamedTensor>& params, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

    void step(const std::vector<NamedTensor>& params, const std::vector<NamedTensor>& grads, double lr);
    std::size_t steps() const { return t_; }

private:
    double beta1_, beta2_, eps_;
    std::size_t t_ = 0;
    std::vector<Tensor> m_, v_;
};

// Reduce-on-plateau: after `patience` consecutive epochs without a strict
// improvement the rate is multiplied by `factor`, never going below `min_lr`.
class PlateauScheduler {
public:
    PlateauScheduler(double lr, PlateauSchedule cfg) : lr_(lr), cfg_(cfg) {}

    // Feeds one epoch's metric; returns true if the rate was reduced.
    bool step(double metric);
    double lr() const { return lr_; }

private:
    double lr_;
    PlateauSchedule cfg_;
    double best_ = 0.0;
    bool has_best_ = false;
    std::size_t bad_epochs_ = 0;
};

struct EpochRecord {
    std::size_t epoch = 0;
    double train_loss = 0.0;  // mean minibatch loss, standardized units
    double val_mae = 0.0;     // original units
    double lr = 0.0;          // rate used during this epoch
    std::size_t steps = 0;
};

struct TrainState {
    std::vector<EpochRecord> history;
    double best_val_mae = 0.0;
    std::size_t best_epoch = 0;
    ModelParams best_params;
    bool early_stopped = false;
    std::size_t batch_size = 0;
    std::size_t train_windows = 0;
    std::size_t val_windows = 0;
};

std::string to_jsonl(const EpochRecord& r);

// Mean absolute error over the windows, in original units.
double evaluate_mae(const ModelConfig& cfg, const ModelParams& params, const PreparedData& data,
                    std::span<const WindowSample> windows);

// Trains from `init`; returns the state whose best_params is the best-validation snapshot.
// One JSON line per epoch is written to `log` when given.
TrainState train(const ModelConfig& cfg, ModelParams init, const PreparedData& data, const TrainConfig& tc,
                 std::ostream* log = nullptr);

struct ParamCheck {
    std::string name;
    std::size_t size = 0;
    double max_rel_error = 0.0;
    bool pass = false;
};

struct GradientCheckReport {
    double tolerance = 0.0;
    std::vector<ParamCheck> params;
    bool pass = false;

    double max_rel_error() const;
    std::vector<std::string> failing() const;
};

// Lets a caller tamper with the analytic gradient before comparison.
using GradientHook = std::function<void(ModelParams& grads)>;

// Central differences with step 1e-5 on the mean window loss.
// Relative error is |a - n| / max(|a|, |n|, 1e-6).
GradientCheckReport gradient_check(const ModelConfig& cfg, const ModelParams& params, std::span<const Example> batch,
                                   double tolerance, const GradientHook& corrupt = {});

}  // namespace stdc
