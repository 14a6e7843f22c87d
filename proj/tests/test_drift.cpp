// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include "aoil/drift.hpp"

using namespace aoil;

namespace {

Vector gaussian(std::size_t n, Rng& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    Vector v(n);
    for (auto& x : v) x = g(rng);
    return v;
}

SlidingLossWindow filled(double value, std::size_t n = 10) {
    SlidingLossWindow w(n);
    for (std::size_t i = 0; i < n; ++i) w.push(value);
    return w;
}

void train(ModelState& m, int steps, std::uint64_t seed) {
    Rng rng(seed);
    for (int i = 0; i < steps; ++i) train_step(gaussian(3, rng), i % 2, m);
}

}  // namespace

TEST(LossWindow, ConstantSequence) {
    const auto w = filled(0.1);
    EXPECT_NEAR(w.stats().mean, 0.1, 1e-15);
    EXPECT_NEAR(w.stats().stddev, 0.0, 1e-15);
}

TEST(LossWindow, MeanAndEviction) {
    SlidingLossWindow w(10);
    for (int i = 1; i <= 10; ++i) w.push(i);
    EXPECT_DOUBLE_EQ(w.stats().mean, 5.5);
    w.push(11);
    EXPECT_DOUBLE_EQ(w.stats().mean, 6.5);
    EXPECT_EQ(w.contents().front(), 2.0);
    EXPECT_EQ(w.contents().back(), 11.0);
}

TEST(LossWindow, SampleStandardDeviation) {
    SlidingLossWindow w(4);
    for (double v : {1.0, 2.0, 3.0, 4.0}) w.push(v);
    EXPECT_NEAR(w.stats().stddev, std::sqrt(5.0 / 3.0), 1e-15);
}

TEST(LossWindow, MatchesBruteForceEveryStep) {
    Rng rng(1);
    std::exponential_distribution<double> e(2.0);
    SlidingLossWindow w(10);
    std::vector<double> all;
    for (int i = 0; i < 500; ++i) {
        const double v = e(rng);
        all.push_back(v);
        const WindowStats s = w.push(v);
        const std::size_t n = std::min<std::size_t>(all.size(), 10);
        double mean = 0.0;
        for (std::size_t k = all.size() - n; k < all.size(); ++k) mean += all[k];
        mean /= static_cast<double>(n);
        double ss = 0.0;
        for (std::size_t k = all.size() - n; k < all.size(); ++k) {
            ss += (all[k] - mean) * (all[k] - mean);
        }
        EXPECT_NEAR(s.mean, mean, 1e-12);
        if (n > 1) {
            EXPECT_NEAR(s.stddev, std::sqrt(ss / static_cast<double>(n - 1)), 1e-12);
        }
    }
}

TEST(LossWindow, RejectsBadInput) {
    EXPECT_THROW(SlidingLossWindow(0), std::invalid_argument);
    SlidingLossWindow w(3);
    EXPECT_THROW(w.push(std::nan("")), std::invalid_argument);
}

TEST(Controller, StableFoundThenDrift) {
    ModelState m(ModelConfig{}, 1);
    DriftController c;
    EXPECT_EQ(c.check(filled(0.1), m, 0), DriftEventKind::StableFound);
    EXPECT_EQ(c.state(), DriftState::Monitoring);
    EXPECT_TRUE(c.snapshot().has_value());
    EXPECT_NEAR(c.stable().mean, 0.1, 1e-15);
    EXPECT_EQ(c.check(filled(0.5), m, 1), DriftEventKind::DriftDetected);
    EXPECT_EQ(c.state(), DriftState::Searching);
}

TEST(Controller, NoDriftWhileSearching) {
    ModelState m(ModelConfig{}, 1);
    DriftController c;
    EXPECT_EQ(c.check(filled(0.3), m, 0), DriftEventKind::None);
    EXPECT_EQ(c.check(filled(5.0), m, 1), DriftEventKind::None);
    EXPECT_EQ(c.state(), DriftState::Searching);
    EXPECT_TRUE(c.events().empty());
}

TEST(Controller, PartialWindowNeverFires) {
    ModelState m(ModelConfig{}, 1);
    DriftController c;
    SlidingLossWindow w(10);
    for (int i = 0; i < 9; ++i) {
        w.push(0.0);
        EXPECT_EQ(c.check(w, m, static_cast<std::size_t>(i)), DriftEventKind::None);
    }
}

TEST(Controller, NoisyWindowIsNotStable) {
    ModelState m(ModelConfig{}, 1);
    DriftController c;
    SlidingLossWindow w(10);
    for (int i = 0; i < 10; ++i) w.push(i % 2 == 0 ? 0.05 : 0.15);
    EXPECT_EQ(c.check(w, m, 0), DriftEventKind::None);
}

TEST(Controller, EventsAlternate) {
    ModelState m(ModelConfig{}, 1);
    DriftController c;
    Rng rng(3);
    std::uniform_real_distribution<double> jitter(-1e-4, 1e-4);
    SlidingLossWindow w(10);
    // alternating blocks of low flat loss and elevated loss
    for (std::size_t i = 0; i < 2000; ++i) {
        const bool low = (i / 40) % 2 == 0;
        w.push((low ? 0.1 : 0.3) + jitter(rng));
        c.check(w, m, i);
    }
    const auto& ev = c.events();
    ASSERT_GT(ev.size(), 4u);
    for (std::size_t k = 0; k < ev.size(); ++k) {
        EXPECT_EQ(ev[k].kind, k % 2 == 0 ? DriftEventKind::StableFound : DriftEventKind::DriftDetected);
    }
}

TEST(Snapshot, EqualsLiveLayersAndIsIsolated) {
    ModelState m(ModelConfig{}, 2);
    const SharedSnapshot s = snapshot_shared(m);
    for (std::size_t l = 0; l < kSharedLayers; ++l) EXPECT_EQ(s.layers[l], m.params().encoder.layers[l]);
    EXPECT_EQ(s.skip_in, m.params().encoder.skip_in);
    const SharedSnapshot copy = s;
    train(m, 100, 5);
    EXPECT_EQ(s, copy);
    EXPECT_NE(snapshot_shared(m), s);
}

TEST(Snapshot, UnchangedWithoutTraining) {
    ModelState m(ModelConfig{}, 2);
    EXPECT_EQ(snapshot_shared(m), snapshot_shared(m));
}

TEST(OnDrift, RestoresSharedAndRedrawsPrivate) {
    ModelState m(ModelConfig{}, 3);
    train(m, 20, 1);
    const SharedSnapshot snap = snapshot_shared(m);
    train(m, 50, 2);
    const EncoderParams before = m.params().encoder;
    on_drift(m, snap);
    const auto& enc = m.params().encoder;
    for (std::size_t l = 0; l < kSharedLayers; ++l) EXPECT_EQ(enc.layers[l], snap.layers[l]);
    EXPECT_EQ(enc.skip_in, snap.skip_in);
    for (std::size_t l = kSharedLayers; l < kDepth; ++l) {
        EXPECT_NE(enc.layers[l].weight, before.layers[l].weight);
        EXPECT_EQ(enc.layers[l].bias, Vector(enc.layers[l].bias.size(), 0.0));
    }
    EXPECT_EQ(m.adam_state("encoder.W4").step_count, 0u);
    EXPECT_EQ(m.adam_state("encoder.Wm").step_count, 0u);
    EXPECT_EQ(m.adam_state("decoder.W4").step_count, 70u);
}

TEST(OnDrift, ReinitializedWeightsHaveXavierVariance) {
    ModelState m(ModelConfig{}, 4);
    const SharedSnapshot snap = snapshot_shared(m);
    double ss = 0.0;
    std::size_t n = 0;
    for (int trial = 0; trial < 50; ++trial) {
        on_drift(m, snap);
        for (double v : m.params().encoder.layers[5].weight.values()) {
            ss += v * v;
            ++n;
        }
    }
    EXPECT_NEAR(ss / static_cast<double>(n), 2.0 / 60.0, 0.05 * 2.0 / 60.0);
}

TEST(OnDrift, EmptySnapshotIsContractError) {
    ModelState m(ModelConfig{}, 1);
    EXPECT_THROW(on_drift(m, std::nullopt), ContractError);
}

TEST(HardBuffer, KeepsHighestLosses) {
    HardBuffer b(2);
    b.offer(Vector{1}, 0, 0.1);
    b.offer(Vector{2}, 0, 0.5);
    b.offer(Vector{3}, 1, 0.3);
    ASSERT_EQ(b.entries().size(), 2u);
    EXPECT_EQ(b.entries()[0].loss, 0.5);
    EXPECT_EQ(b.entries()[1].loss, 0.3);
}

TEST(HardBuffer, TiesKeepEarlier) {
    HardBuffer b(3);
    for (int i = 0; i < 6; ++i) b.offer(Vector{static_cast<double>(i)}, 0, 1.0);
    ASSERT_EQ(b.entries().size(), 3u);
    for (int i = 0; i < 3; ++i) EXPECT_EQ(b.entries()[i].x[0], i);
}

TEST(HardBuffer, SingleOfferAndClear) {
    HardBuffer b(5);
    b.offer(Vector{4, 2}, 1, 0.7);
    ASSERT_EQ(b.entries().size(), 1u);
    EXPECT_EQ(b.entries()[0].y, 1u);
    b.clear();
    EXPECT_TRUE(b.empty());
}

TEST(Replay, EmptyBufferLeavesParameters) {
    ModelState m(ModelConfig{}, 1);
    const ModelParams before = m.params();
    replay(HardBuffer(5), m);
    EXPECT_EQ(m.params(), before);
}

TEST(Replay, SingleEntryEqualsOneTrainStep) {
    ModelState a(ModelConfig{}, 6), b(ModelConfig{}, 6);
    HardBuffer buf(5);
    buf.offer(Vector{0.2, -1.0, 0.5}, 1, 2.0);
    const LossBreakdown la = replay(buf, a);
    const LossBreakdown lb = train_step(Vector{0.2, -1.0, 0.5}, 1, b);
    EXPECT_EQ(la, lb);
    EXPECT_EQ(a.params(), b.params());
}

TEST(Replay, UsuallyReducesBufferedLoss) {
    int improved = 0;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        ModelState m(ModelConfig{}, seed);
        Rng rng(seed + 1000);
        HardBuffer buf(5);
        for (int i = 0; i < 5; ++i) {
            const Vector x = gaussian(3, rng);
            buf.offer(x, static_cast<std::size_t>(i % 2), forward(x, i % 2, m).loss.total);
        }
        const double before = replay(buf, m).total;
        double after = 0.0;
        for (const auto& e : buf.entries()) after += forward(e.x, e.y, m).loss.total;
        improved += after / 5.0 < before ? 1 : 0;
    }
    EXPECT_GT(improved, 50);
}
