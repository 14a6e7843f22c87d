// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "aoil/gradcheck.hpp"

using namespace aoil;

namespace {

Vector gaussian(std::size_t n, Rng& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    Vector v(n);
    for (auto& x : v) x = g(rng);
    return v;
}

ModelConfig small() {
    return {.input_dim = 5, .hidden_dim = 8, .attention_dim = 6, .memory_slots = 4, .classes = 2};
}

}  // namespace

TEST(Forward, ZeroLambdaTotalIsPredictionPlusReconstruction) {
    ModelConfig c;
    c.lambda = 0.0;
    ModelState m(c, 3);
    const auto t = forward(Vector{0.1, -1.0, 2.0}, 1, m);
    EXPECT_EQ(t.loss.total, t.loss.prediction + t.loss.reconstruction);
    EXPECT_GT(t.loss.entropy, 0.0);
}

TEST(Forward, UntrainedLossFinitePositiveAndDeterministic) {
    Rng rng(4);
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        ModelState m(ModelConfig{}, seed);
        const Vector x = gaussian(3, rng);
        const auto a = forward(x, seed % 2, m);
        const auto b = forward(x, seed % 2, m);
        EXPECT_TRUE(std::isfinite(a.loss.total));
        EXPECT_GT(a.loss.total, 0.0);
        EXPECT_EQ(a.loss, b.loss);
        EXPECT_EQ(a.loss.total,
                  a.loss.prediction + a.loss.reconstruction + m.params().memory.lambda * a.loss.entropy);
    }
}

TEST(Forward, SimplexVectorsOverManyPasses) {
    Rng rng(5);
    for (int trial = 0; trial < 500; ++trial) {
        ModelState m(small(), static_cast<std::uint64_t>(trial));
        const auto t = forward(gaussian(5, rng), trial % 2, m);
        for (const Vector* v : {&t.fusion.alignment, &t.weights, &t.shrunk, &t.fusion.prediction}) {
            double s = 0.0;
            for (double x : *v) {
                EXPECT_GE(x, 0.0);
                s += x;
            }
            EXPECT_NEAR(s, 1.0, 1e-9);
        }
    }
}

TEST(Forward, WithoutMemoryDecoderReadsLatentDirectly) {
    ModelConfig c = small();
    c.use_memory = false;
    ModelState m(c, 1);
    const auto t = forward(Vector{1, 2, 3, 4, 5}, 0, m);
    EXPECT_EQ(t.memory_read, t.encoded.h[5]);
    EXPECT_EQ(t.loss.entropy, 0.0);
}

TEST(Forward, ReconstructionTargetIsTheCleanInput) {
    ModelState m(small(), 2);
    const Vector clean{0.5, -0.5, 1.0, 0.0, 2.0};
    Rng rng(9);
    const Vector noisy = corrupt(clean, {.enabled = true}, rng);
    ASSERT_NE(noisy, clean);
    const auto t = forward(noisy, 1, m, {.target = clean});
    EXPECT_EQ(t.target, clean);
    EXPECT_EQ(t.encoded.input, noisy);
    EXPECT_EQ(t.loss.reconstruction, reconstruction_error(clean, t.decoded.output));
}

TEST(Backward, PredictionLossDoesNotReachDecoderOrMemory) {
    ModelState m(small(), 7);
    const Vector x{0.3, -1.0, 0.2, 0.8, -0.4};
    const auto g0 = backward(forward(x, 0, m), m);
    const auto g1 = backward(forward(x, 1, m), m);
    EXPECT_EQ(g0.decoder, g1.decoder);
    EXPECT_EQ(g0.memory.units, g1.memory.units);
    EXPECT_NE(g0.classifier, g1.classifier);
}

TEST(Backward, StaleTraceRejected) {
    ModelState m(small(), 1);
    const auto t = forward(Vector(5, 0.1), 0, m);
    m.apply(backward(t, m));
    EXPECT_THROW(backward(t, m), ContractError);
}

TEST(Backward, EveryTensorMatchesFiniteDifferences) {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        GradcheckOptions opt;
        opt.seed = seed;
        const auto report = gradcheck(opt);
        EXPECT_EQ(report.tensors.size(), 31u);
        for (const auto& t : report.tensors) {
            EXPECT_LT(t.max_relative_error, 1e-4) << t.name << " seed " << seed;
        }
    }
}

TEST(Backward, NegativeControlIsCaught) {
    GradcheckOptions opt;
    opt.corrupt_gradient = true;
    const auto report = gradcheck(opt);
    EXPECT_FALSE(report.passed());
    for (const auto& t : report.tensors) {
        if (t.name != "encoder.W3") {
            EXPECT_LT(t.max_relative_error, 1e-4) << t.name;
        }
    }
}

TEST(TrainStep, ZeroLearningRateIsNoOp) {
    ModelConfig c;
    c.learning_rate = 0.0;
    ModelState m(c, 5);
    const ModelParams before = m.params();
    for (int i = 0; i < 5; ++i) train_step(Vector{1, 2, 3}, 1, m);
    EXPECT_EQ(m.params(), before);
}

TEST(TrainStep, RepeatedStepsReduceLossOnFixedExample) {
    Rng rng(11);
    int decreased = 0;
    for (std::uint64_t seed = 1; seed <= 40; ++seed) {
        ModelState m(ModelConfig{}, seed);
        const Vector x = gaussian(3, rng);
        const double first = train_step(x, seed % 2, m).total;
        for (int i = 0; i < 49; ++i) train_step(x, seed % 2, m);
        const double last = forward(x, seed % 2, m).loss.total;
        decreased += last <= first ? 1 : 0;
    }
    EXPECT_GE(decreased, 38);  // 95% of 40
}

TEST(TrainStep, SingleStepUsuallyDescends) {
    Rng rng(12);
    int decreased = 0;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        ModelState m(ModelConfig{}, seed);
        const Vector x = gaussian(3, rng);
        const double before = train_step(x, seed % 2, m).total;
        decreased += forward(x, seed % 2, m).loss.total < before ? 1 : 0;
    }
    EXPECT_GT(decreased, 50);
}

TEST(TrainStep, AdvancesEveryOptimizerState) {
    ModelState m(small(), 1);
    train_step(Vector(5, 0.3), 0, m);
    for (const auto& s : m.optimizer()) EXPECT_EQ(s.step_count, 1u);
    m.reset_optimizer();
    for (const auto& s : m.optimizer()) EXPECT_EQ(s.step_count, 0u);
}

TEST(Corrupt, DisabledOrZeroVarianceIsIdentity) {
    Rng rng(1);
    const Vector x{1, 2, 3};
    EXPECT_EQ(corrupt(x, {.enabled = false}, rng), x);
    EXPECT_EQ(corrupt(x, {.enabled = true, .corruption_variance = 0.0}, rng), x);
}

TEST(Corrupt, NoiseVarianceMatches) {
    Rng rng(2);
    const Vector x{0.0};
    double s = 0.0, ss = 0.0;
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
        const double d = corrupt(x, {.enabled = true}, rng)[0];
        s += d;
        ss += d * d;
    }
    const double mean = s / n;
    const double var = (ss - n * mean * mean) / (n - 1);
    EXPECT_NEAR(var, 0.1, 0.01);
}

TEST(Tensors, NamesUniqueAndOrdered) {
    ModelState m(small(), 1);
    const auto names = tensor_names(m.params());
    EXPECT_EQ(names.size(), 31u);
    EXPECT_EQ(std::set<std::string>(names.begin(), names.end()).size(), names.size());
    EXPECT_EQ(names.front(), "encoder.W0");
    EXPECT_EQ(names.back(), "classifier.bf");
    EXPECT_THROW(tensor_values(m.mutable_params(), "nope"), std::out_of_range);
}

TEST(Config, InvalidDimensionsRejected) {
    ModelConfig c;
    c.hidden_dim = 0;
    EXPECT_THROW(ModelState(c, 1), DimensionError);
    c = ModelConfig{};
    c.classes = 1;
    EXPECT_THROW(ModelState(c, 1), DimensionError);
    c = ModelConfig{};
    c.shrink_epsilon = 0.0;
    EXPECT_THROW(ModelState(c, 1), std::invalid_argument);
}

TEST(Checkpoint, RoundTripIsBitwiseAndResumesIdentically) {
    ModelState a(ModelConfig{}, 21);
    Rng rng(3);
    for (int i = 0; i < 30; ++i) train_step(gaussian(3, rng), i % 2, a);

    std::stringstream buf;
    a.save(buf);
    ModelState b = ModelState::load(buf);
    EXPECT_EQ(b.params(), a.params());
    EXPECT_EQ(b.config(), a.config());
    EXPECT_EQ(b.optimizer(), a.optimizer());

    for (int i = 0; i < 10; ++i) {
        const Vector x = gaussian(3, rng);
        EXPECT_EQ(train_step(x, i % 2, a), train_step(x, i % 2, b));
        EXPECT_EQ(corrupt(x, {.enabled = true}, a.rng()), corrupt(x, {.enabled = true}, b.rng()));
    }
    EXPECT_EQ(b.params(), a.params());
}

TEST(Checkpoint, MalformedInputRejected) {
    std::stringstream bad("aoil-checkpoint 9\n");
    EXPECT_THROW(ModelState::load(bad), std::runtime_error);
    std::stringstream good;
    ModelState(small(), 1).save(good);
    std::string text = good.str();
    text.resize(text.size() / 2);
    std::stringstream truncated(text);
    EXPECT_THROW(ModelState::load(truncated), std::exception);
}
