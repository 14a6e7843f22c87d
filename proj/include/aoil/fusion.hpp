// SPDX-License-Identifier: Apache-2.0
/**
 * @file   fusion.hpp
 * @brief  Self-attention over stacked encoder activations and the softmax
 *         classifier head.
 */
#pragma once

#include "aoil/linalg.hpp"

namespace aoil {

inline constexpr double kProbabilityFloor = 1e-12;

struct AttentionParams {
    Matrix projection;  // W_s1, d_a x D_h
    Vector context;     // w_s2, d_a

    bool operator==(const AttentionParams&) const = default;
};

struct ClassifierParams {
    Matrix weight;  // W_f, D_h x D_y
    Vector bias;    // b_f, D_y

    [[nodiscard]] std::size_t classes() const { return bias.size(); }

    bool operator==(const ClassifierParams&) const = default;
};

struct FusionTrace {
    Matrix stacked;            // H, one encoder activation per row
    Matrix tanh_projection;    // row j = tanh(W_s1 h_j)
    Vector logits;             // attention logits
    Vector alignment;          // A
    Vector context;            // C
    Vector class_logits;
    Vector prediction;         // ŷ
};

/// Attention logits e_j = w_s2 · tanh(W_s1 h_j); fills `tanh_rows` when given.
inline Vector attention_logits(const Matrix& H, const AttentionParams& p,
                               Matrix* tanh_rows = nullptr) {
    detail::require_same(H.cols(), p.projection.cols(), "attend");
    detail::require_same(p.context.size(), p.projection.rows(), "attend context");
    if (tanh_rows != nullptr) *tanh_rows = Matrix(H.rows(), p.projection.rows());
    Vector logits(H.rows());
    for (std::size_t j = 0; j < H.rows(); ++j) {
        Vector t = matvec(p.projection, H.row(j));
        for (auto& v : t) v = std::tanh(v);
        logits[j] = dot(p.context, t);
        if (tanh_rows != nullptr) std::copy(t.begin(), t.end(), tanh_rows->row(j).begin());
    }
    return logits;
}

/// A = softmax(w_s2ᵀ tanh(W_s1 Hᵀ))
inline Vector attend(const Matrix& H, const AttentionParams& p) {
    return softmax(attention_logits(H, p));
}

/// C = A H
inline Vector fuse(std::span<const double> A, const Matrix& H) {
    detail::require_same(A.size(), H.rows(), "fuse");
    return matvec_t(H, A);
}

inline Vector classifier_logits(std::span<const double> C, const ClassifierParams& p) {
    Vector z = matvec_t(p.weight, C);
    axpy(z, 1.0, p.bias);
    return z;
}

/// ŷ = softmax(C W_f + b_f)
inline Vector classify(std::span<const double> C, const ClassifierParams& p) {
    return softmax(classifier_logits(C, p));
}

/// −Σ y log ŷ with ŷ clamped below at 1e-12.
inline double cross_entropy(std::span<const double> y, std::span<const double> y_hat) {
    detail::require_same(y.size(), y_hat.size(), "cross_entropy");
    double acc = 0.0;
    for (std::size_t k = 0; k < y.size(); ++k) {
        if (y[k] != 0.0) acc -= y[k] * std::log(std::max(y_hat[k], kProbabilityFloor));
    }
    return acc;
}

inline Vector one_hot(std::size_t label, std::size_t classes) {
    if (label >= classes) {
        throw DimensionError("one_hot: label " + std::to_string(label) + " >= " +
                             std::to_string(classes));
    }
    Vector y(classes, 0.0);
    y[label] = 1.0;
    return y;
}

inline FusionTrace fusion_forward(const Matrix& H, const AttentionParams& att,
                                  const ClassifierParams& cls, const Vector* fixed_alignment) {
    FusionTrace t;
    t.stacked = H;
    t.logits = attention_logits(H, att, &t.tanh_projection);
    t.alignment = fixed_alignment != nullptr ? *fixed_alignment : softmax(t.logits);
    t.context = fuse(t.alignment, H);
    detail::require_same(t.context.size(), cls.weight.rows(), "classify");
    t.class_logits = classifier_logits(t.context, cls);
    t.prediction = softmax(t.class_logits);
    return t;
}

}  // namespace aoil
