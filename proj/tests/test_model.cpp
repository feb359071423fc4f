#include <gtest/gtest.h>

#include <cstring>
#include <fstream>
#include <numeric>
#include <random>

#include "stdc/evaluation.hpp"
#include "stdc/model.hpp"
#include "test_support.hpp"

using namespace stdc;
using stdc::test::random_example;
using stdc::test::random_params;
using stdc::test::tiny_config;
namespace fs = std::filesystem;

namespace {

ModelConfig small_config() {
    ModelConfig c;
    c.d = 8;
    c.d_lap = 2;
    c.encoder_layers = 2;
    c.decoder_layers = 2;
    c.heads = 2;
    c.s_dim = 5;
    c.t_dim = 6;
    c.seed = 4;
    return c;
}

std::size_t predicted_count(const ModelConfig& c) {
    const std::size_t d = c.d, f = c.features, blk = 6 * (d * d + d) + 2 * d;
    const std::size_t first_in = c.str_compose == StrCompose::concat ? 2 * d : d;
    std::size_t n = f * d + d;
    if (c.ablation.sc) n += (c.s_dim + (c.ablation.lap ? c.d_lap : 0)) * d + d;
    if (c.ablation.tc) n += c.t_dim * d + d;
    n += 2 * (d * d + d);
    n += 6 * (first_in * d + d) + 2 * d + (c.encoder_layers - 1) * blk;
    n += c.ablation.map ? 3 * (d * d + d) : c.past * c.future + c.future;
    n += c.decoder_layers * blk;
    n += d * f + f;
    return n;
}

}  // namespace

TEST(Model, OutputShapeAndDeterminism) {
    const ModelConfig c = small_config();
    const ModelParams p = init_params(c);
    std::mt19937_64 rng(1);
    const Example ex = random_example(c, 8, rng);
    const Tensor a = predict(c, p, ex.inputs());
    EXPECT_EQ(a.shape(), (Shape{6, 8, 2}));
    EXPECT_EQ(a, predict(c, p, ex.inputs()));
    EXPECT_EQ(init_params(c).named().size(), p.named().size());
    EXPECT_EQ(init_params(c).head.weight, p.head.weight);
}

TEST(Model, ParameterCountMatchesArithmetic) {
    for (const Ablation& a : ablation_variants()) {
        ModelConfig c = small_config();
        c.ablation = a;
        EXPECT_EQ(init_params(c).parameter_count(), predicted_count(c)) << ablation_name(a);
    }
    ModelConfig c = small_config();
    c.str_compose = StrCompose::add;
    EXPECT_EQ(init_params(c).parameter_count(), predicted_count(c));
}

TEST(Model, VariantNamesInOrder) {
    std::vector<std::string> names;
    for (const auto& a : ablation_variants()) names.push_back(ablation_name(a));
    EXPECT_EQ(names, (std::vector<std::string>{"full", "w/o DC", "w/o MAP", "w/o SC", "w/o TC", "w/o LAP"}));
}

TEST(Model, WithoutDcGatesAreHalf) {
    ModelConfig c = small_config();
    c.ablation.dc = false;
    std::mt19937_64 rng(2);
    const Example ex = random_example(c, 4, rng);
    Diagnostics diag;
    predict(c, init_params(c), ex.inputs(), &diag, DiagnosticsRequest{true, false});
    ASSERT_EQ(diag.encoder_gates.size(), 2u);
    ASSERT_EQ(diag.decoder_gates.size(), 2u);
    for (const auto& g : diag.encoder_gates)
        for (double v : g.storage()) EXPECT_EQ(v, 0.5);
}

TEST(Model, UntrainedGatesAreOpenInterval) {
    const ModelConfig c = small_config();
    std::mt19937_64 rng(3);
    const Example ex = random_example(c, 4, rng);
    Diagnostics diag;
    predict(c, init_params(c), ex.inputs(), &diag, DiagnosticsRequest{true, false});
    // Confounder embeddings are non-negative, so untrained gates lean towards the spatial branch.
    for (double v : diag.encoder_gates.front().storage()) {
        EXPECT_GE(v, 0.5);
        EXPECT_LT(v, 1.0);
    }
}

TEST(Model, AblatedInputsAreIgnored) {
    ModelConfig c = small_config();
    c.ablation.sc = false;
    c.ablation.tc = false;
    const ModelParams p = init_params(c);
    std::mt19937_64 rng(4);
    Example ex = random_example(c, 3, rng);
    const Tensor a = predict(c, p, ex.inputs());
    ex.s_rows = Tensor({1, 1});
    ex.t_past = Tensor({1, 1});
    ex.t_future = Tensor({1, 1});
    EXPECT_EQ(a, predict(c, p, ex.inputs()));
}

TEST(Model, ErrorsNameTheStage) {
    const ModelConfig c = small_config();
    std::mt19937_64 rng(5);
    Example ex = random_example(c, 3, rng);
    ex.t_future = Tensor({6, 5});
    try {
        predict(c, init_params(c), ex.inputs());
        FAIL();
    } catch (const std::invalid_argument& e) {
        EXPECT_NE(std::string(e.what()).find("forward [inputs]"), std::string::npos) << e.what();
    }
}

TEST(Model, ConfigValidation) {
    ModelConfig c = small_config();
    c.heads = 3;
    EXPECT_THROW(c.validate(), std::invalid_argument);
    c = small_config();
    c.encoder_layers = 0;
    EXPECT_THROW(init_params(c), std::invalid_argument);
}

TEST(Model, RunsOnAnyRegionCount) {
    const ModelConfig c = small_config();
    const ModelParams p = init_params(c);
    std::mt19937_64 rng(6);
    for (std::size_t n : {1u, 8u, 12u}) {
        const Example ex = random_example(c, n, rng);
        EXPECT_TRUE(all_finite(predict(c, p, ex.inputs())));
    }
}

TEST(Model, RegionPermutationEquivariance) {
    ModelConfig c = small_config();
    const ModelParams p = init_params(c);
    std::mt19937_64 rng(7);
    const std::size_t n = 5;
    const Example ex = random_example(c, n, rng);
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    Example px = ex;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t t = 0; t < c.past; ++t)
            for (std::size_t f = 0; f < 2; ++f) px.x.at(t, i, f) = ex.x.at(t, perm[i], f);
    }
    px.s_rows = gather_rows(ex.s_rows, perm);
    px.lap = gather_rows(ex.lap, perm);
    const Tensor a = predict(c, p, ex.inputs()), b = predict(c, p, px.inputs());
    for (std::size_t t = 0; t < c.future; ++t)
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t f = 0; f < 2; ++f) EXPECT_NEAR(b.at(t, i, f), a.at(t, perm[i], f), 1e-10);
}

TEST(Model, MatchesOracleOnTinyInstances) {
    std::mt19937_64 rng(8);
    for (int k = 0; k < 20; ++k) {
        ModelConfig c = tiny_config(1 + rng() % 4, 1 + rng() % 4, 1 + rng() % 4, 2, 3, 1, rng());
        c.ablation = ablation_variants()[k % 6];
        const ModelParams p = random_params(c, rng);
        const Example ex = random_example(c, 1 + rng() % 4, rng);
        EXPECT_LT(max_abs_diff(predict(c, p, ex.inputs()), oracle_forward(c, p, ex.inputs())), 1e-10);
    }
}

TEST(Model, ZeroWeightsGiveZeroOutput) {
    const ModelConfig c = tiny_config();
    ModelParams p = init_params(c);
    for (auto& nt : p.named()) nt.tensor->fill(0.0);
    std::mt19937_64 rng(9);
    const Example ex = random_example(c, 3, rng);
    const Tensor a = predict(c, p, ex.inputs()), b = oracle_forward(c, p, ex.inputs());
    for (double v : a.storage()) EXPECT_EQ(v, 0.0);
    for (double v : b.storage()) EXPECT_EQ(v, 0.0);
}

TEST(Model, OracleRejectsNonStrictConfigs) {
    ModelConfig c = tiny_config();
    c.layer_norm = true;
    std::mt19937_64 rng(10);
    const Example ex = random_example(c, 2, rng);
    EXPECT_THROW(oracle_forward(c, init_params(c), ex.inputs()), std::invalid_argument);
    c = tiny_config(8);
    EXPECT_THROW(oracle_forward(c, init_params(c), random_example(c, 2, rng).inputs()), std::invalid_argument);
}

TEST(Loss, HandExamples) {
    EXPECT_DOUBLE_EQ(mae_loss(Tensor({2}, {2, 4}), Tensor({2}, {1, 2})), 1.5);
    const Tensor y({1, 2, 2}, {1, 2, 3, 4});
    EXPECT_EQ(mae_loss(y, y), 0.0);
    EXPECT_THROW(mae_loss(Tensor({2}), Tensor({3})), std::invalid_argument);
    // Invariant to a joint permutation of entries.
    const Tensor a({4}, {1, -2, 3, 0.5}), b({4}, {0, 0, 1, 1});
    EXPECT_DOUBLE_EQ(mae_loss(a, b), mae_loss(Tensor({4}, {0.5, 3, -2, 1}), Tensor({4}, {1, 1, 0, 0})));
}

TEST(Checkpoint, RoundTripIsBitIdentical) {
    const ModelConfig c = small_config();
    std::mt19937_64 rng(11);
    const ModelParams p = random_params(c, rng, 0.3);
    const fs::path path = fs::temp_directory_path() / "stdc_test_model.ckpt";
    save_checkpoint(path, Checkpoint{c, p, Scaler({1.0, 2.0}, {3.0, 4.0})});
    const Checkpoint back = load_checkpoint(path);
    EXPECT_EQ(to_json(back.config), to_json(c));
    ASSERT_TRUE(back.scaler);
    EXPECT_EQ(back.scaler->std()[1], 4.0);
    const Example ex = random_example(c, 8, rng);
    EXPECT_EQ(predict(c, p, ex.inputs()), predict(back.config, back.params, ex.inputs()));
    const Example big = random_example(c, 12, rng);
    EXPECT_TRUE(all_finite(predict(back.config, back.params, big.inputs())));
}

TEST(Checkpoint, TamperedVersionRejected) {
    const ModelConfig c = small_config();
    const fs::path path = fs::temp_directory_path() / "stdc_test_tampered.ckpt";
    save_checkpoint(path, Checkpoint{c, init_params(c), std::nullopt});
    {
        std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(8);
        const std::uint32_t v = 99;
        f.write(reinterpret_cast<const char*>(&v), sizeof v);
    }
    try {
        load_checkpoint(path);
        FAIL();
    } catch (const std::runtime_error& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("99"), std::string::npos);
        EXPECT_NE(msg.find(std::to_string(kCheckpointVersion)), std::string::npos);
    }
}
