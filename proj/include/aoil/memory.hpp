// SPDX-License-Identifier: Apache-2.0
/**
 * @file   memory.hpp
 * @brief  Memory-addressed latent reconstruction: cosine addressing, hard
 *         shrinkage, weighted read, and the entropy penalty on the read
 *         weights.
 */
#pragma once

#include <string>

#include "aoil/linalg.hpp"

namespace aoil {

struct MemoryModule {
    Matrix units;  // N x D_h, row i is memory slot m_i
    double shrink_epsilon = 1e-12;
    double lambda = 0.0002;

    [[nodiscard]] std::size_t slots() const { return units.rows(); }
    [[nodiscard]] std::size_t width() const { return units.cols(); }

    bool operator==(const MemoryModule&) const = default;
};

/// Softmax over cosine similarity between the latent and each memory slot.
inline Vector address(std::span<const double> h5, const MemoryModule& mem) {
    detail::require_same(h5.size(), mem.width(), "address");
    Vector sim(mem.slots());
    for (std::size_t i = 0; i < mem.slots(); ++i) sim[i] = cosine_similarity(h5, mem.units.row(i));
    return softmax(sim);
}

/// Hard shrinkage max(w,0)·w/(|w|+ε), then renormalization onto the simplex.
/// If every weight collapses to zero the result is uniform.
inline Vector shrink(std::span<const double> w, const MemoryModule& mem) {
    if (w.empty()) throw DimensionError("shrink: empty weight vector");
    Vector out(w.size());
    double total = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        out[i] = std::max(w[i], 0.0) * w[i] / (std::abs(w[i]) + mem.shrink_epsilon);
        total += out[i];
    }
    if (!(total > 0.0)) {
        std::fill(out.begin(), out.end(), 1.0 / static_cast<double>(out.size()));
        return out;
    }
    for (auto& o : out) o /= total;
    return out;
}

/// ĥ5 = Σ ŵ_i m_i
inline Vector read(std::span<const double> w_hat, const MemoryModule& mem) {
    detail::require_same(w_hat.size(), mem.slots(), "read");
    return matvec_t(mem.units, w_hat);
}

/// Shannon entropy with the 0·log 0 = 0 convention.
inline double entropy_reg(std::span<const double> w_hat) {
    double acc = 0.0;
    for (double p : w_hat) {
        if (p > 0.0) acc -= p * std::log(p);
    }
    return acc;
}

inline Vector entropy_reg_grad(std::span<const double> w_hat) {
    Vector g(w_hat.size(), 0.0);
    for (std::size_t i = 0; i < w_hat.size(); ++i) {
        if (w_hat[i] > 0.0) g[i] = -(std::log(w_hat[i]) + 1.0);
    }
    return g;
}

/// Gradient through shrink (including the renormalization).
inline Vector shrink_backward(std::span<const double> w, std::span<const double> w_hat,
                              std::span<const double> grad_w_hat, const MemoryModule& mem) {
    detail::require_same(w.size(), w_hat.size(), "shrink_backward");
    detail::require_same(w.size(), grad_w_hat.size(), "shrink_backward");
    const double eps = mem.shrink_epsilon;
    double total = 0.0;
    for (double wi : w) total += std::max(wi, 0.0) * wi / (std::abs(wi) + eps);
    Vector g(w.size(), 0.0);
    if (!(total > 0.0)) return g;

    // d(normalized_i)/d(raw_k) = (δ_ik − ŵ_i) / total
    const double inner = dot(grad_w_hat, w_hat);
    for (std::size_t k = 0; k < w.size(); ++k) {
        if (w[k] <= 0.0) continue;
        const double denom = w[k] + eps;
        const double d_raw = (w[k] * w[k] + 2.0 * w[k] * eps) / (denom * denom);
        g[k] = (grad_w_hat[k] - inner) / total * d_raw;
    }
    return g;
}

/// Gradients of the cosine similarities d(h, m_i) given dL/d(sim_i).
/// Accumulates into grad_units and returns dL/dh.
inline Vector cosine_backward(std::span<const double> h, const Matrix& units,
                              std::span<const double> grad_sim, Matrix& grad_units) {
    Vector grad_h(h.size(), 0.0);
    const double nh = norm(h);
    if (nh == 0.0) return grad_h;
    for (std::size_t i = 0; i < units.rows(); ++i) {
        const auto m = units.row(i);
        const double nm = norm(m);
        if (nm == 0.0 || grad_sim[i] == 0.0) continue;
        const double s = dot(h, m) / (nh * nm);
        const double gs = grad_sim[i];
        auto gm = grad_units.row(i);
        for (std::size_t d = 0; d < h.size(); ++d) {
            grad_h[d] += gs * (m[d] / (nh * nm) - s * h[d] / (nh * nh));
            gm[d] += gs * (h[d] / (nh * nm) - s * m[d] / (nm * nm));
        }
    }
    return grad_h;
}

}  // namespace aoil
