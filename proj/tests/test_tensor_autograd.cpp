#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <random>

#include "stdc/autograd.hpp"
#include "test_support.hpp"

using namespace stdc;
using stdc::test::random_tensor;

namespace {

using Builder = std::function<ag::Var(ag::Tape&, const std::vector<ag::Var>&)>;

// Reduces the op output with a fixed random projection so every output element matters.
double check_grad(std::vector<Tensor> inputs, const Builder& op, std::uint64_t seed = 3) {
    std::mt19937_64 rng(seed);
    Tensor probe;
    auto scalar = [&](ag::Tape& tape, const std::vector<ag::Var>& vars) {
        ag::Var y = op(tape, vars);
        if (probe.shape() != y.shape()) probe = random_tensor(y.shape(), rng);
        return ag::sum_all(ag::mul(y, tape.constant(probe)));
    };

    std::vector<Tensor> grads;
    for (const auto& t : inputs) grads.emplace_back(t.shape());
    {
        ag::Tape tape;
        std::vector<ag::Var> vars;
        for (std::size_t k = 0; k < inputs.size(); ++k) vars.push_back(tape.param(inputs[k], &grads[k]));
        tape.backward(scalar(tape, vars));
    }
    auto eval = [&] {
        ag::Tape tape;
        std::vector<ag::Var> vars;
        for (const auto& t : inputs) vars.push_back(tape.constant(t));
        return scalar(tape, vars).value()[0];
    };
    double worst = 0.0;
    const double h = 1e-6;
    for (std::size_t k = 0; k < inputs.size(); ++k) {
        for (std::size_t i = 0; i < inputs[k].size(); ++i) {
            const double orig = inputs[k][i];
            inputs[k][i] = orig + h;
            const double up = eval();
            inputs[k][i] = orig - h;
            const double down = eval();
            inputs[k][i] = orig;
            const double num = (up - down) / (2 * h);
            worst = std::max(worst, std::abs(num - grads[k][i]) / std::max({std::abs(num), std::abs(grads[k][i]), 1e-6}));
        }
    }
    return worst;
}

}  // namespace

TEST(Tensor, ShapeAndIndexing) {
    Tensor t({2, 3, 4});
    EXPECT_EQ(t.size(), 24u);
    t.at(1, 2, 3) = 7.0;
    EXPECT_EQ(t[23], 7.0);
    EXPECT_EQ(shape_str(t.shape()), "(2, 3, 4)");
    EXPECT_THROW(t.reshaped({5, 5}), std::invalid_argument);
    EXPECT_EQ(t.reshaped({6, 4}).at(5, 3), 7.0);
}

TEST(Tensor, SliceAndGather) {
    Tensor t({3, 2}, {1, 2, 3, 4, 5, 6});
    EXPECT_EQ(slice_rows(t, 1, 3), Tensor({2, 2}, {3, 4, 5, 6}));
    const std::vector<std::size_t> idx{2, 0};
    EXPECT_EQ(gather_rows(t, idx), Tensor({2, 2}, {5, 6, 1, 2}));
    EXPECT_THROW(require_shape(t, {2, 3}, "t"), std::invalid_argument);
}

TEST(Autograd, AffineGradient) {
    std::mt19937_64 rng(1);
    const double err = check_grad({random_tensor({3, 2, 4}, rng), random_tensor({4, 5}, rng), random_tensor({5}, rng)},
                                  [](ag::Tape&, const std::vector<ag::Var>& v) { return ag::affine(v[0], v[1], v[2]); });
    EXPECT_LT(err, 1e-6);
}

TEST(Autograd, ElementwiseGradients) {
    std::mt19937_64 rng(2);
    const Tensor a = random_tensor({2, 3}, rng), b = random_tensor({2, 3}, rng);
    EXPECT_LT(check_grad({a}, [](ag::Tape&, auto& v) { return ag::sigmoid(v[0]); }), 1e-6);
    EXPECT_LT(check_grad({a}, [](ag::Tape&, auto& v) { return ag::relu(v[0]); }), 1e-6);
    EXPECT_LT(check_grad({a, b}, [](ag::Tape&, auto& v) { return ag::mul(v[0], v[1]); }), 1e-6);
    EXPECT_LT(check_grad({a, b}, [](ag::Tape&, auto& v) { return ag::add(v[0], ag::one_minus(v[1])); }), 1e-6);
    EXPECT_LT(check_grad({a}, [](ag::Tape&, auto& v) { return ag::scale(v[0], -2.5); }), 1e-6);
}

TEST(Autograd, ShapeOpGradients) {
    std::mt19937_64 rng(3);
    EXPECT_LT(check_grad({random_tensor({2, 3, 2}, rng), random_tensor({2, 3, 1}, rng)},
                         [](ag::Tape&, auto& v) { return ag::concat_last(v[0], v[1]); }),
              1e-6);
    EXPECT_LT(check_grad({random_tensor({3, 2}, rng), random_tensor({4, 2}, rng)},
                         [](ag::Tape&, auto& v) { return ag::token_sum(v[0], v[1]); }),
              1e-6);
    EXPECT_LT(check_grad({random_tensor({2, 3, 4}, rng)},
                         [](ag::Tape&, auto& v) { return ag::permute3(v[0], {2, 0, 1}); }),
              1e-6);
}

TEST(Autograd, TokenSumLayout) {
    ag::Tape tape;
    Tensor s({2, 1}, {10, 20});
    Tensor t({3, 1}, {1, 2, 3});
    const Tensor out = ag::token_sum(tape.constant(s), tape.constant(t)).value();
    ASSERT_EQ(out.shape(), (Shape{3, 2, 1}));
    EXPECT_EQ(out.at(2, 1, 0), 23.0);
    EXPECT_EQ(out.at(0, 0, 0), 11.0);
}

TEST(Autograd, PermuteLayout) {
    ag::Tape tape;
    Tensor x({2, 3, 4});
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = double(i);
    const Tensor y = ag::permute3(tape.constant(x), {1, 2, 0}).value();
    ASSERT_EQ(y.shape(), (Shape{3, 4, 2}));
    EXPECT_EQ(y.at(2, 3, 1), x.at(1, 2, 3));
}

TEST(Autograd, AttentionGradientMultiHead) {
    std::mt19937_64 rng(4);
    const double err = check_grad({random_tensor({2, 3, 4}, rng), random_tensor({2, 5, 4}, rng), random_tensor({2, 5, 4}, rng)},
                                  [](ag::Tape&, auto& v) { return ag::attention(v[0], v[1], v[2], 2, nullptr); });
    EXPECT_LT(err, 1e-5);
}

TEST(Autograd, AttentionProbsAreStochastic) {
    std::mt19937_64 rng(5);
    ag::Tape tape;
    Tensor probs;
    ag::attention(tape.constant(random_tensor({2, 3, 4}, rng, -3, 3)), tape.constant(random_tensor({2, 5, 4}, rng, -3, 3)),
                  tape.constant(random_tensor({2, 5, 4}, rng)), 2, &probs);
    ASSERT_EQ(probs.shape(), (Shape{2, 2, 3, 5}));
    for (std::size_t r = 0; r < probs.size() / 5; ++r) {
        double s = 0.0;
        for (std::size_t k = 0; k < 5; ++k) s += probs[r * 5 + k];
        EXPECT_NEAR(s, 1.0, 1e-12);
    }
}

TEST(Autograd, AttentionRejectsIndivisibleHeads) {
    ag::Tape tape;
    Tensor q({1, 2, 3});
    EXPECT_THROW(ag::attention(tape.constant(q), tape.constant(q), tape.constant(q), 2, nullptr), std::invalid_argument);
}

TEST(Autograd, LayerNormGradient) {
    std::mt19937_64 rng(6);
    const double err = check_grad({random_tensor({2, 3, 4}, rng), random_tensor({4}, rng), random_tensor({4}, rng)},
                                  [](ag::Tape&, auto& v) { return ag::layer_norm(v[0], v[1], v[2]); });
    EXPECT_LT(err, 1e-5);
}

TEST(Autograd, MeanAbsErrorValueAndGradient) {
    ag::Tape tape;
    Tensor pred({2}, {2, 4});
    Tensor grad({2});
    ag::Var loss = ag::mean_abs_error(tape.param(pred, &grad), Tensor({2}, {1, 2}));
    EXPECT_DOUBLE_EQ(loss.value()[0], 1.5);
    tape.backward(loss);
    EXPECT_DOUBLE_EQ(grad[0], 0.5);
    EXPECT_DOUBLE_EQ(grad[1], 0.5);
}

TEST(Autograd, BackwardRequiresScalar) {
    ag::Tape tape;
    Tensor x({2});
    Tensor g({2});
    EXPECT_THROW(tape.backward(tape.param(x, &g)), std::invalid_argument);
}

TEST(Autograd, GradientsAccumulateAcrossTapes) {
    Tensor x({1}, {3.0});
    Tensor g({1});
    for (int k = 0; k < 2; ++k) {
        ag::Tape tape;
        tape.backward(ag::scale(tape.param(x, &g), 2.0));
    }
    EXPECT_DOUBLE_EQ(g[0], 4.0);
}
