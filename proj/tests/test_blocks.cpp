#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "stdc/cta.hpp"
#include "stdc/embedding.hpp"
#include "stdc/stdc_block.hpp"
#include "test_support.hpp"

using namespace stdc;
using stdc::test::random_tensor;

namespace {

EmbeddingParams make_embedding(std::size_t f, std::size_t s_in, std::size_t t_dim, std::size_t d, Rng& rng) {
    EmbeddingParams p;
    p.value_map = Affine::init(f, d, rng);
    p.spatial_map = Affine::init(s_in, d, rng);
    p.temporal_map = Affine::init(t_dim, d, rng);
    p.ste_fuse_s = Affine::init(d, d, rng);
    p.ste_fuse_t = Affine::init(d, d, rng);
    return p;
}

void expect_rows_stochastic(const Tensor& probs, double tol = 1e-9) {
    const std::size_t last = probs.shape().back();
    for (std::size_t r = 0; r < probs.size() / last; ++r) {
        double s = 0.0;
        for (std::size_t k = 0; k < last; ++k) {
            EXPECT_GE(probs[r * last + k], 0.0);
            s += probs[r * last + k];
        }
        EXPECT_NEAR(s, 1.0, tol);
    }
}

}  // namespace

TEST(Embedding, ShapesAndRelu) {
    Rng rng(1);
    const auto p = make_embedding(2, 5, 4, 8, rng);
    std::mt19937_64 g(2);
    const Tensor v = embed_values(random_tensor({3, 6, 2}, g), p);
    EXPECT_EQ(v.shape(), (Shape{3, 6, 8}));
    for (double x : v.storage()) EXPECT_GE(x, 0.0);
    const Tensor cs = embed_spatial_confounder(random_tensor({6, 3}, g), random_tensor({6, 2}, g), p);
    EXPECT_EQ(cs.shape(), (Shape{6, 8}));
    const Tensor ct = embed_temporal_confounder(random_tensor({3, 4}, g), p);
    const Tensor ste = fuse_ste(cs, ct, p);
    EXPECT_EQ(ste.shape(), (Shape{3, 6, 8}));
    EXPECT_EQ(compose_str(v, ste).shape(), (Shape{3, 6, 16}));
    EXPECT_EQ(compose_str(v, ste, StrCompose::add).shape(), (Shape{3, 6, 8}));
}

TEST(Embedding, RejectsWrongWidths) {
    Rng rng(1);
    const auto p = make_embedding(2, 5, 4, 8, rng);
    std::mt19937_64 g(2);
    EXPECT_THROW(embed_values(random_tensor({3, 6, 3}, g), p), std::invalid_argument);
    EXPECT_THROW(embed_spatial_confounder(random_tensor({6, 3}, g), random_tensor({5, 2}, g), p), std::invalid_argument);
    EXPECT_THROW(embed_temporal_confounder(random_tensor({3, 5}, g), p), std::invalid_argument);
}

TEST(Embedding, SteIsConstantWhenConfoundersAreZero) {
    Rng rng(3);
    const auto p = make_embedding(2, 5, 4, 4, rng);
    const Tensor ste = fuse_ste(Tensor({3, 4}), Tensor({2, 4}), p);
    for (std::size_t t = 0; t < 2; ++t)
        for (std::size_t i = 0; i < 3; ++i)
            for (std::size_t c = 0; c < 4; ++c) EXPECT_EQ(ste.at(t, i, c), ste.at(0, 0, c));
}

TEST(Block, AttentionRowsSumToOne) {
    Rng rng(4);
    const auto bp = StdcBlockParams::init(8, 8, true, false, rng);
    std::mt19937_64 g(5);
    const Tensor h = random_tensor({4, 5, 8}, g, -2, 2);
    BlockTrace tr;
    const Tensor out = stdc_block_forward(h, random_tensor({5, 8}, g), random_tensor({4, 8}, g), bp,
                                          BlockOptions{2, true, true, false}, &tr);
    EXPECT_EQ(out.shape(), (Shape{4, 5, 8}));
    EXPECT_EQ(tr.spatial_attention.shape(), (Shape{4, 2, 5, 5}));
    EXPECT_EQ(tr.temporal_attention.shape(), (Shape{5, 2, 4, 4}));
    expect_rows_stochastic(tr.spatial_attention);
    expect_rows_stochastic(tr.temporal_attention);
}

TEST(Block, GateIsConvexCombination) {
    std::mt19937_64 g(6);
    const Tensor hs = random_tensor({3, 2, 4}, g), ht = random_tensor({3, 2, 4}, g);
    const Tensor cs = random_tensor({2, 4}, g, -3, 3), ct = random_tensor({3, 4}, g, -3, 3);
    const GateOutput out = deconf_fusion(hs, ht, cs, ct);
    for (std::size_t k = 0; k < hs.size(); ++k) {
        EXPECT_EQ(out.p_cs[k] + out.p_ct[k], 1.0);
        EXPECT_NEAR(out.fused[k], out.p_cs[k] * hs[k] + out.p_ct[k] * ht[k], 1e-15);
    }
    EXPECT_NEAR(out.p_cs.at(2, 1, 3), 1.0 / (1.0 + std::exp(-(cs.at(1, 3) + ct.at(2, 3)))), 1e-15);
}

TEST(Block, FixedGateIsExactlyHalf) {
    std::mt19937_64 g(7);
    const GateOutput out = deconf_fusion(random_tensor({2, 2, 2}, g), random_tensor({2, 2, 2}, g),
                                         random_tensor({2, 2}, g), random_tensor({2, 2}, g), true);
    for (double v : out.p_cs.storage()) EXPECT_EQ(v, 0.5);
}

TEST(Block, LayerNormOutputIsNormalized) {
    Rng rng(8);
    const auto bp = StdcBlockParams::init(4, 4, true, false, rng);
    std::mt19937_64 g(9);
    const Tensor out = stdc_block_forward(random_tensor({2, 3, 4}, g), random_tensor({3, 4}, g),
                                          random_tensor({2, 4}, g), bp, BlockOptions{1, true, true, false});
    for (std::size_t r = 0; r < 6; ++r) {
        double m = 0.0, v = 0.0;
        for (std::size_t c = 0; c < 4; ++c) m += out[r * 4 + c] / 4;
        for (std::size_t c = 0; c < 4; ++c) v += (out[r * 4 + c] - m) * (out[r * 4 + c] - m) / 4;
        EXPECT_NEAR(m, 0.0, 1e-12);
        EXPECT_NEAR(v, 1.0, 1e-3);
    }
}

TEST(Block, RejectsBadInputWidth) {
    Rng rng(1);
    const auto bp = StdcBlockParams::init(8, 4, false, false, rng);
    EXPECT_THROW(stdc_block_forward(Tensor({2, 3, 4}), Tensor({3, 4}), Tensor({2, 4}), bp, BlockOptions{1, false, false, false}),
                 std::invalid_argument);
}

TEST(Cta, AttentionShapeAndRows) {
    Rng rng(10);
    const auto p = CtaParams::init(8, false, rng);
    std::mt19937_64 g(11);
    const CtaResult r = cross_time_attention(random_tensor({6, 8, 8}, g), random_tensor({6, 8, 8}, g),
                                             random_tensor({6, 8, 8}, g), p, 2);
    EXPECT_EQ(r.attention.shape(), (Shape{8, 6, 6}));
    EXPECT_EQ(r.h_future.shape(), (Shape{6, 8, 8}));
    expect_rows_stochastic(r.attention, 1e-12);
}

TEST(Cta, SinglePastStepGivesUnitWeights) {
    Rng rng(12);
    const auto p = CtaParams::init(4, false, rng);
    std::mt19937_64 g(13);
    const CtaResult r = cross_time_attention(random_tensor({3, 2, 4}, g), random_tensor({1, 2, 4}, g),
                                             random_tensor({1, 2, 4}, g), p, 1);
    for (double v : r.attention.storage()) EXPECT_EQ(v, 1.0);
}

TEST(Cta, AttentionIgnoresValues) {
    Rng rng(14);
    const auto p = CtaParams::init(4, false, rng);
    std::mt19937_64 g(15);
    const Tensor sf = random_tensor({2, 3, 4}, g), sp = random_tensor({3, 3, 4}, g);
    const auto a = cross_time_attention(sf, sp, random_tensor({3, 3, 4}, g), p, 2);
    const auto b = cross_time_attention(sf, sp, random_tensor({3, 3, 4}, g), p, 2);
    EXPECT_EQ(a.attention, b.attention);
    EXPECT_FALSE(a.h_future == b.h_future);
}

TEST(Cta, RegionMismatchRejected) {
    Rng rng(16);
    const auto p = CtaParams::init(4, false, rng);
    EXPECT_THROW(cross_time_attention(Tensor({2, 3, 4}), Tensor({2, 2, 4}), Tensor({2, 2, 4}), p, 1),
                 std::invalid_argument);
}

TEST(TimeMix, AffineOverTimeAxis) {
    Affine m = Affine::zeros(2, 3);
    m.weight.at(0, 1) = 1.0;  // future step 1 copies past step 0
    m.bias[2] = 5.0;
    ag::Tape tape;
    Binder bind(tape);
    Tensor h({2, 1, 2}, {1, 2, 3, 4});
    const Tensor y = time_mix(bind, tape.constant(h), m).value();
    ASSERT_EQ(y.shape(), (Shape{3, 1, 2}));
    EXPECT_EQ(y.at(1, 0, 0), 1.0);
    EXPECT_EQ(y.at(1, 0, 1), 2.0);
    EXPECT_EQ(y.at(0, 0, 0), 0.0);
    EXPECT_EQ(y.at(2, 0, 1), 5.0);
}
