// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "aoil/linalg.hpp"

using namespace aoil;

TEST(Matrix, ShapeAndStorage) {
    Matrix m(2, 3, 1.5);
    EXPECT_EQ(m.rows(), 2u);
    EXPECT_EQ(m.cols(), 3u);
    EXPECT_EQ(m.size(), 6u);
    m(1, 2) = 4.0;
    EXPECT_EQ(m.values()[5], 4.0);
    EXPECT_EQ(m.row(1)[2], 4.0);
}

TEST(Matrix, ProductsAgainstHandValues) {
    Matrix m(2, 3);
    // [[1 2 3] [4 5 6]]
    for (std::size_t i = 0; i < 6; ++i) m.values()[i] = static_cast<double>(i + 1);
    EXPECT_EQ(matvec(m, Vector{1, 0, -1}), (Vector{-2, -2}));
    EXPECT_EQ(matvec_t(m, Vector{1, 1}), (Vector{5, 7, 9}));
    add_outer(m, Vector{1, 2}, Vector{1, 0, 1});
    EXPECT_EQ(m(0, 0), 2.0);
    EXPECT_EQ(m(1, 2), 8.0);
    EXPECT_EQ(m(1, 1), 5.0);
}

TEST(Matrix, ShapeMismatchThrows) {
    Matrix m(2, 3);
    EXPECT_THROW(matvec(m, Vector{1, 2}), DimensionError);
    EXPECT_THROW(matvec_t(m, Vector{1, 2, 3}), DimensionError);
    EXPECT_THROW(dot(Vector{1}, Vector{1, 2}), DimensionError);
    EXPECT_THROW(add_outer(m, Vector{1}, Vector{1, 2, 3}), DimensionError);
}

TEST(Xavier, SameSeedSameEntry) {
    Rng a(7), b(7);
    EXPECT_EQ(xavier_init(1, 1, a), xavier_init(1, 1, b));
}

TEST(Xavier, ReproducibleBitwise) {
    Rng a(123), b(123);
    EXPECT_EQ(xavier_init(17, 9, a), xavier_init(17, 9, b));
}

TEST(Xavier, SampleMomentsMatchGlorotVariance) {
    Rng rng(1);
    const Matrix m = xavier_init(30, 30, rng);
    double mean = 0.0;
    for (double v : m.values()) mean += v;
    mean /= 900.0;
    double var = 0.0;
    for (double v : m.values()) var += (v - mean) * (v - mean);
    var /= 899.0;
    EXPECT_NEAR(mean, 0.0, 0.02);
    EXPECT_NEAR(var, 2.0 / 60.0, 0.2 * 2.0 / 60.0);
    const double limit = std::sqrt(6.0 / 60.0);
    for (double v : m.values()) EXPECT_LE(std::abs(v), limit);
}

TEST(Xavier, EmptyShapeThrows) {
    Rng rng(1);
    EXPECT_THROW(xavier_init(0, 5, rng), DimensionError);
    EXPECT_THROW(xavier_init(5, 0, rng), DimensionError);
}

TEST(Relu, SignCases) {
    EXPECT_EQ(relu(Vector{-1, 2, 0}), (Vector{0, 2, 0}));
    EXPECT_EQ(relu(Vector{-3, -0.5}), (Vector{0, 0}));
    const Vector pos{0.1, 7, 3};
    EXPECT_EQ(relu(pos), pos);
}

TEST(Softmax, KnownValues) {
    const Vector half = softmax(Vector{0, 0});
    EXPECT_DOUBLE_EQ(half[0], 0.5);
    EXPECT_DOUBLE_EQ(half[1], 0.5);

    const Vector big = softmax(Vector{1000, 1000, 1000});
    for (double v : big) EXPECT_NEAR(v, 1.0 / 3.0, 1e-15);

    const Vector logs = softmax(Vector{std::log(1.0), std::log(2.0), std::log(3.0)});
    EXPECT_NEAR(logs[0], 1.0 / 6.0, 1e-15);
    EXPECT_NEAR(logs[1], 2.0 / 6.0, 1e-15);
    EXPECT_NEAR(logs[2], 3.0 / 6.0, 1e-15);
}

TEST(Softmax, EmptyThrows) { EXPECT_THROW(softmax(Vector{}), DimensionError); }

TEST(Softmax, StaysOnSimplexForLargeInputs) {
    Rng rng(5);
    std::uniform_real_distribution<double> u(-1e4, 1e4);
    std::uniform_int_distribution<int> len(1, 40);
    for (int trial = 0; trial < 2000; ++trial) {
        Vector v(static_cast<std::size_t>(len(rng)));
        for (auto& x : v) x = u(rng);
        const Vector p = softmax(v);
        double total = 0.0;
        for (double x : p) {
            EXPECT_GE(x, 0.0);
            total += x;
        }
        EXPECT_NEAR(total, 1.0, 1e-9);
    }
}

TEST(Softmax, BackwardMatchesFiniteDifferences) {
    const Vector z{0.3, -1.2, 2.0, 0.0};
    const Vector g{1.0, -0.5, 0.25, 2.0};
    const Vector analytic = softmax_backward(softmax(z), g);
    for (std::size_t i = 0; i < z.size(); ++i) {
        Vector up = z, down = z;
        up[i] += 1e-6;
        down[i] -= 1e-6;
        const double fd = (dot(softmax(up), g) - dot(softmax(down), g)) / 2e-6;
        EXPECT_NEAR(analytic[i], fd, 1e-8);
    }
}

TEST(Cosine, Cases) {
    const Vector a{1, 2, 3};
    EXPECT_NEAR(cosine_similarity(a, a), 1.0, 1e-15);
    EXPECT_EQ(cosine_similarity(Vector{1, 0}, Vector{0, 1}), 0.0);
    EXPECT_NEAR(cosine_similarity(a, Vector{-1, -2, -3}), -1.0, 1e-15);
    EXPECT_EQ(cosine_similarity(Vector{0, 0, 0}, a), 0.0);
}

TEST(Cosine, SymmetricAndScaleInvariant) {
    Rng rng(11);
    std::normal_distribution<double> g(0.0, 1.0);
    std::uniform_real_distribution<double> k(0.01, 100.0);
    for (int trial = 0; trial < 500; ++trial) {
        Vector a(6), b(6);
        for (auto& v : a) v = g(rng);
        for (auto& v : b) v = g(rng);
        const double s = k(rng);
        Vector ka = a;
        for (auto& v : ka) v *= s;
        const double d = cosine_similarity(a, b);
        EXPECT_NEAR(d, cosine_similarity(b, a), 1e-15);
        EXPECT_NEAR(d, cosine_similarity(ka, b), 1e-13);
        EXPECT_LE(std::abs(d), 1.0);
    }
}

TEST(Adam, ZeroGradientFreshStateLeavesParameter) {
    Vector p{0.3, -2.0, 5.0};
    const Vector before = p;
    AdamState s;
    for (int i = 0; i < 10; ++i) adam_step(p, Vector(3, 0.0), s, 0.01);
    EXPECT_EQ(p, before);
    EXPECT_EQ(s.step_count, 10u);
}

TEST(Adam, FirstStepIsLearningRate) {
    // t = 1: m̂ = g, v̂ = g², step = lr·g/(|g| + ε)
    Vector p{0.0};
    AdamState s;
    adam_step(p, Vector{1.0}, s, 0.01);
    EXPECT_NEAR(p[0], -0.01 / (1.0 + 1e-8), 1e-15);
}

TEST(Adam, ConstantGradientDescends) {
    Vector p{1.0, 1.0};
    AdamState s;
    for (int i = 0; i < 100; ++i) adam_step(p, Vector{0.7, -3.0}, s, 0.01);
    EXPECT_LT(p[0], 1.0);
    EXPECT_GT(p[1], 1.0);
}

TEST(Adam, MatchesReferenceRecurrence) {
    Rng rng(3);
    std::normal_distribution<double> g(0.0, 1.0);
    Vector p{0.5, -0.25};
    Vector ref = p;
    double m[2] = {0, 0}, v[2] = {0, 0};
    AdamState s;
    for (int t = 1; t <= 50; ++t) {
        const Vector grad{g(rng), g(rng)};
        adam_step(p, grad, s, 0.05);
        for (int i = 0; i < 2; ++i) {
            m[i] = 0.9 * m[i] + 0.1 * grad[i];
            v[i] = 0.999 * v[i] + 0.001 * grad[i] * grad[i];
            const double mh = m[i] / (1 - std::pow(0.9, t));
            const double vh = v[i] / (1 - std::pow(0.999, t));
            ref[i] -= 0.05 * mh / (std::sqrt(vh) + 1e-8);
        }
    }
    EXPECT_NEAR(p[0], ref[0], 1e-12);
    EXPECT_NEAR(p[1], ref[1], 1e-12);
}

TEST(Adam, StateInvariants) {
    Rng rng(9);
    std::normal_distribution<double> g(0.0, 1.0);
    Matrix p(3, 4), grad(3, 4);
    AdamState s;
    for (int t = 1; t <= 20; ++t) {
        for (auto& x : grad.values()) x = g(rng);
        adam_step(p, grad, s, 0.01);
        EXPECT_EQ(s.step_count, static_cast<std::size_t>(t));
        for (double x : s.second_moment) EXPECT_GE(x, 0.0);
        EXPECT_TRUE(all_finite(p.values()));
    }
    s.reset();
    EXPECT_EQ(s.step_count, 0u);
    EXPECT_THROW(adam_step(p, Matrix(2, 2), s, 0.01), DimensionError);
}
