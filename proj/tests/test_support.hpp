#pragma once

#include <random>

#include "stdc/dataset.hpp"
#include "stdc/model.hpp"

namespace stdc::test {

inline Tensor random_tensor(Shape shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    Tensor t(std::move(shape));
    for (double& v : t.storage()) v = u(rng);
    return t;
}

// Smallest useful configuration: one block each side, no norm, no residual.
inline ModelConfig tiny_config(std::size_t d = 4, std::size_t tp = 2, std::size_t tf = 2, std::size_t s_dim = 3,
                               std::size_t t_dim = 3, std::size_t d_lap = 1, std::uint64_t seed = 1) {
    ModelConfig c;
    c.d = d;
    c.d_lap = d_lap;
    c.encoder_layers = 1;
    c.decoder_layers = 1;
    c.heads = 1;
    c.past = tp;
    c.future = tf;
    c.s_dim = s_dim;
    c.t_dim = t_dim;
    c.layer_norm = false;
    c.residual = false;
    c.seed = seed;
    return c;
}

// Random inputs sized for `cfg` with n regions.
inline Example random_example(const ModelConfig& cfg, std::size_t n, std::mt19937_64& rng) {
    Example ex;
    ex.x = random_tensor({cfg.past, n, cfg.features}, rng);
    ex.y = random_tensor({cfg.future, n, cfg.features}, rng);
    ex.s_rows = random_tensor({n, cfg.s_dim}, rng);
    ex.lap = random_tensor({n, cfg.d_lap}, rng);
    ex.t_past = random_tensor({cfg.past, cfg.t_dim}, rng);
    ex.t_future = random_tensor({cfg.future, cfg.t_dim}, rng);
    return ex;
}

// Parameters drawn from a wider range than the default init so every path is exercised.
inline ModelParams random_params(const ModelConfig& cfg, std::mt19937_64& rng, double scale = 1.0) {
    ModelParams p = init_params(cfg);
    std::uniform_real_distribution<double> u(-scale, scale);
    for (auto& nt : p.named())
        for (double& v : nt.tensor->storage()) v = u(rng);
    return p;
}

}  // namespace stdc::test
