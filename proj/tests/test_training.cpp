#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "stdc/training.hpp"
#include "test_support.hpp"

using namespace stdc;
using stdc::test::random_example;
using stdc::test::random_params;
using stdc::test::tiny_config;

namespace {

PreparedData small_data(std::size_t n = 4, std::size_t length = 120, std::uint64_t seed = 1) {
    PrepareOptions o;
    o.past = 3;
    o.future = 2;
    o.d_lap = 2;
    o.seed = seed;
    return prepare(generate_synthetic(n, length, seed).city, o);
}

ModelConfig small_model(const PreparedData& d) {
    ModelConfig c;
    c.d = 8;
    c.heads = 2;
    c.encoder_layers = 1;
    c.decoder_layers = 1;
    bind_config_to_data(c, d);
    return c;
}

TrainConfig quick(std::size_t epochs) {
    TrainConfig t;
    t.max_epochs = epochs;
    t.early_stop_patience = epochs - 1;
    t.batch_size = 16;
    return t;
}

}  // namespace

TEST(Adam, SingleStepMatchesHandComputation) {
    Tensor w({1}, {1.0}), g({1}, {2.0});
    const std::vector<NamedTensor> p{{"w", &w}}, gr{{"w", &g}};
    Adam adam(p);
    adam.step(p, gr, 0.1);
    // m = 0.2, v = 0.004; bias-corrected m = 2, v = 4; step = 0.1 * 2 / (2 + 1e-8)
    EXPECT_NEAR(w[0], 1.0 - 0.1 * 2.0 / (2.0 + 1e-8), 1e-15);
    g[0] = -1.0;
    adam.step(p, gr, 0.1);
    const double m = (0.9 * 0.2 + 0.1 * -1.0) / (1 - 0.81);
    const double v = (0.999 * 0.004 + 0.001 * 1.0) / (1 - 0.999 * 0.999);
    EXPECT_NEAR(w[0], 1.0 - 0.1 * 2.0 / (2.0 + 1e-8) - 0.1 * m / (std::sqrt(v) + 1e-8), 1e-14);
}

TEST(Plateau, ReducesAfterPatienceAndRespectsFloor) {
    PlateauScheduler s(1e-3, PlateauSchedule{0.5, 3, 2e-4});
    EXPECT_FALSE(s.step(1.0));
    EXPECT_FALSE(s.step(1.0));
    EXPECT_FALSE(s.step(1.1));
    EXPECT_TRUE(s.step(1.0));  // third non-improving epoch
    EXPECT_DOUBLE_EQ(s.lr(), 5e-4);
    EXPECT_FALSE(s.step(0.5));  // improvement resets the counter
    for (int k = 0; k < 6; ++k) s.step(0.9);
    EXPECT_DOUBLE_EQ(s.lr(), 2e-4);
    for (int k = 0; k < 9; ++k) EXPECT_FALSE(s.step(0.9));
    EXPECT_DOUBLE_EQ(s.lr(), 2e-4);
}

TEST(Plateau, NeverRaisesRateBelowFloor) {
    PlateauScheduler s(0.0, PlateauSchedule{0.5, 1, 1e-5});
    s.step(1.0);
    s.step(2.0);
    EXPECT_EQ(s.lr(), 0.0);
}

TEST(TrainConfig, Validation) {
    TrainConfig t;
    EXPECT_NO_THROW(t.validate());
    t.batch_size = 0;
    EXPECT_THROW(t.validate(), std::invalid_argument);
    t = TrainConfig{};
    t.early_stop_patience = 120;
    EXPECT_THROW(t.validate(), std::invalid_argument);
}

TEST(Train, ZeroLearningRateLeavesParametersUnchanged) {
    const PreparedData d = small_data();
    const ModelConfig c = small_model(d);
    TrainConfig t = quick(3);
    t.lr = 0.0;
    const ModelParams init = init_params(c);
    const TrainState st = train(c, init, d, t);
    const auto a = init.named(), b = st.best_params.named();
    for (std::size_t k = 0; k < a.size(); ++k) EXPECT_EQ(*a[k].tensor, *b[k].tensor) << a[k].name;
}

TEST(Train, DeterministicHistoryAndLog) {
    const PreparedData d = small_data();
    const ModelConfig c = small_model(d);
    std::ostringstream l1, l2;
    const TrainState a = train(c, init_params(c), d, quick(4), &l1);
    const TrainState b = train(c, init_params(c), d, quick(4), &l2);
    ASSERT_EQ(a.history.size(), 4u);
    for (std::size_t e = 0; e < 4; ++e) {
        EXPECT_EQ(a.history[e].train_loss, b.history[e].train_loss);
        EXPECT_EQ(a.history[e].val_mae, b.history[e].val_mae);
    }
    EXPECT_EQ(l1.str(), l2.str());
    EXPECT_NE(l1.str().find("\"val_mae\""), std::string::npos);
}

TEST(Train, BestSnapshotMatchesBestEpoch) {
    const PreparedData d = small_data();
    const ModelConfig c = small_model(d);
    const TrainState st = train(c, init_params(c), d, quick(6));
    double best = std::numeric_limits<double>::infinity();
    for (const auto& r : st.history) best = std::min(best, r.val_mae);
    EXPECT_EQ(st.best_val_mae, best);
    EXPECT_EQ(st.history[st.best_epoch].val_mae, best);
    EXPECT_DOUBLE_EQ(evaluate_mae(c, st.best_params, d, d.splits.val), best);
    EXPECT_EQ(st.history.front().steps, (d.splits.train.size() + 15) / 16);
}

TEST(Train, EarlyStopsAfterPatience) {
    const PreparedData d = small_data();
    const ModelConfig c = small_model(d);
    TrainConfig t = quick(30);
    t.lr = 0.0;  // validation never improves after epoch 0
    t.early_stop_patience = 5;
    const TrainState st = train(c, init_params(c), d, t);
    EXPECT_TRUE(st.early_stopped);
    EXPECT_EQ(st.best_epoch, 0u);
    EXPECT_EQ(st.history.size(), 6u);
}

TEST(Train, NonFiniteLossAborts) {
    PreparedData d = small_data();
    const ModelConfig c = small_model(d);
    d.splits.train[0].x[0] = std::nan("");
    try {
        train(c, init_params(c), d, quick(2));
        FAIL();
    } catch (const std::runtime_error& e) {
        EXPECT_NE(std::string(e.what()).find("epoch 0"), std::string::npos);
    }
}

TEST(Train, EmptySplitRejected) {
    PreparedData d = small_data();
    const ModelConfig c = small_model(d);
    d.splits.val.clear();
    EXPECT_THROW(train(c, init_params(c), d, quick(2)), std::invalid_argument);
}

TEST(GradientCheck, PassesNegativeControlAndImpossibleTolerance) {
    ModelConfig c = tiny_config(4, 2, 2, 3, 3, 1, 5);
    std::mt19937_64 rng(6);
    const ModelParams p = random_params(c, rng, 0.5);
    const std::vector<Example> batch{random_example(c, 3, rng), random_example(c, 3, rng)};
    const auto ok = gradient_check(c, p, batch, 1e-4);
    EXPECT_TRUE(ok.pass) << ok.max_rel_error();
    EXPECT_EQ(ok.params.size(), p.named().size());

    const auto bad = gradient_check(c, p, batch, 1e-4, [](ModelParams& g) { g.head.weight *= 1.5; });
    EXPECT_FALSE(bad.pass);
    EXPECT_EQ(bad.failing(), (std::vector<std::string>{"head.weight"}));

    EXPECT_FALSE(gradient_check(c, p, batch, 0.0).pass);
}
