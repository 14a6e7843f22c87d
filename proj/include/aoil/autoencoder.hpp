// SPDX-License-Identifier: Apache-2.0
/**
 * @file   autoencoder.hpp
 * @brief  Six-layer residual encoder, its mirrored decoder, and the squared
 *         reconstruction error, with hand-written reverse passes.
 *
 * Encoder (h_{-1} = x):
 *   h_l = relu(b_l + W_l h_{l-1} + s_l)
 *   s_1 = W_m x,  s_3 = h_1,  s_5 = h_3,  s_l = 0 for even l.
 *
 * Decoder (u = memory read, indexed as level 5):
 *   g_k = relu(c_{k+1} + V_{k+1} g_{k+1} + t_k),  k = 4..0
 *   t_3 = u,  t_1 = g_3,  t_k = 0 for even k
 *   x_hat = c_0 + V_0 g_0 + V_m g_1            (linear output)
 */
#pragma once

#include <array>
#include <string>

#include "aoil/linalg.hpp"

namespace aoil {

inline constexpr std::size_t kDepth = 6;

struct Layer {
    Matrix weight;
    Vector bias;

    bool operator==(const Layer&) const = default;
};

struct EncoderParams {
    std::array<Layer, kDepth> layers;
    Matrix skip_in;  // D_h x D_x, feeds layer 1

    static EncoderParams zeros(std::size_t dx, std::size_t dh) {
        EncoderParams p;
        for (std::size_t l = 0; l < kDepth; ++l) {
            p.layers[l].weight = Matrix(dh, l == 0 ? dx : dh);
            p.layers[l].bias.assign(dh, 0.0);
        }
        p.skip_in = Matrix(dh, dx);
        return p;
    }

    static EncoderParams xavier(std::size_t dx, std::size_t dh, Rng& rng) {
        EncoderParams p = zeros(dx, dh);
        for (std::size_t l = 0; l < kDepth; ++l) {
            p.layers[l].weight = xavier_init(dh, l == 0 ? dx : dh, rng);
        }
        p.skip_in = xavier_init(dh, dx, rng);
        return p;
    }

    [[nodiscard]] std::size_t input_dim() const { return layers[0].weight.cols(); }
    [[nodiscard]] std::size_t hidden_dim() const { return layers[0].weight.rows(); }

    bool operator==(const EncoderParams&) const = default;
};

struct DecoderParams {
    std::array<Layer, kDepth> layers;
    Matrix skip_out;  // D_x x D_h, reads g_1

    static DecoderParams zeros(std::size_t dx, std::size_t dh) {
        DecoderParams p;
        for (std::size_t l = 0; l < kDepth; ++l) {
            const std::size_t out = l == 0 ? dx : dh;
            p.layers[l].weight = Matrix(out, dh);
            p.layers[l].bias.assign(out, 0.0);
        }
        p.skip_out = Matrix(dx, dh);
        return p;
    }

    static DecoderParams xavier(std::size_t dx, std::size_t dh, Rng& rng) {
        DecoderParams p = zeros(dx, dh);
        for (std::size_t l = 0; l < kDepth; ++l) {
            p.layers[l].weight = xavier_init(l == 0 ? dx : dh, dh, rng);
        }
        p.skip_out = xavier_init(dx, dh, rng);
        return p;
    }

    [[nodiscard]] std::size_t output_dim() const { return layers[0].weight.rows(); }
    [[nodiscard]] std::size_t hidden_dim() const { return layers[0].weight.cols(); }

    bool operator==(const DecoderParams&) const = default;
};

struct EncodeTrace {
    Vector input;
    std::array<Vector, kDepth> pre;
    std::array<Vector, kDepth> h;
};

struct DecodeTrace {
    Vector input;                   // u, the level-5 activation
    std::array<Vector, kDepth> pre; // pre[k] for g_k, k = 0..4; pre[5] unused
    std::array<Vector, kDepth> h;   // h[k] = g_k, h[5] = u
    Vector output;                  // x_hat
};

inline EncodeTrace encode(std::span<const double> x, const EncoderParams& p) {
    if (x.size() != p.input_dim()) {
        throw DimensionError("encode: input dim " + std::to_string(x.size()) + ", expected " +
                             std::to_string(p.input_dim()));
    }
    EncodeTrace t;
    t.input.assign(x.begin(), x.end());
    for (std::size_t l = 0; l < kDepth; ++l) {
        const Vector& below = l == 0 ? t.input : t.h[l - 1];
        Vector z = matvec(p.layers[l].weight, below);
        axpy(z, 1.0, p.layers[l].bias);
        if (l == 1) {
            axpy(z, 1.0, matvec(p.skip_in, t.input));
        } else if (l % 2 == 1) {
            axpy(z, 1.0, t.h[l - 2]);
        }
        t.h[l] = relu(z);
        t.pre[l] = std::move(z);
    }
    return t;
}

inline DecodeTrace decode(std::span<const double> u, const DecoderParams& p) {
    if (u.size() != p.hidden_dim()) {
        throw DimensionError("decode: input dim " + std::to_string(u.size()) + ", expected " +
                             std::to_string(p.hidden_dim()));
    }
    DecodeTrace t;
    t.input.assign(u.begin(), u.end());
    t.h[kDepth - 1] = t.input;
    for (std::size_t k = kDepth - 1; k-- > 0;) {
        Vector z = matvec(p.layers[k + 1].weight, t.h[k + 1]);
        axpy(z, 1.0, p.layers[k + 1].bias);
        if (k % 2 == 1) axpy(z, 1.0, t.h[k + 2]);
        t.h[k] = relu(z);
        t.pre[k] = std::move(z);
    }
    t.output = matvec(p.layers[0].weight, t.h[0]);
    axpy(t.output, 1.0, p.layers[0].bias);
    axpy(t.output, 1.0, matvec(p.skip_out, t.h[1]));
    return t;
}

/// Squared Euclidean distance ‖x − x̂‖².
inline double reconstruction_error(std::span<const double> x, std::span<const double> x_hat) {
    detail::require_same(x.size(), x_hat.size(), "reconstruction_error");
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - x_hat[i];
        acc += d * d;
    }
    return acc;
}

inline Vector reconstruction_error_grad(std::span<const double> x, std::span<const double> x_hat) {
    detail::require_same(x.size(), x_hat.size(), "reconstruction_error_grad");
    Vector g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) g[i] = 2.0 * (x_hat[i] - x[i]);
    return g;
}

namespace detail {
inline Vector relu_backward(std::span<const double> pre, std::span<const double> g) {
    Vector out(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) out[i] = pre[i] > 0.0 ? g[i] : 0.0;
    return out;
}
}  // namespace detail

/// Accumulates parameter gradients into `grads` given dL/dh_l for every
/// layer (grad_h is consumed). Returns dL/dx.
inline Vector encode_backward(const EncodeTrace& t, const EncoderParams& p,
                              std::array<Vector, kDepth> grad_h, EncoderParams& grads) {
    Vector grad_x(t.input.size(), 0.0);
    for (std::size_t l = kDepth; l-- > 0;) {
        const Vector gz = detail::relu_backward(t.pre[l], grad_h[l]);
        const Vector& below = l == 0 ? t.input : t.h[l - 1];
        add_outer(grads.layers[l].weight, gz, below);
        axpy(grads.layers[l].bias, 1.0, gz);
        const Vector g_below = matvec_t(p.layers[l].weight, gz);
        if (l == 0) {
            axpy(grad_x, 1.0, g_below);
        } else {
            axpy(grad_h[l - 1], 1.0, g_below);
        }
        if (l == 1) {
            add_outer(grads.skip_in, gz, t.input);
            axpy(grad_x, 1.0, matvec_t(p.skip_in, gz));
        } else if (l % 2 == 1) {
            axpy(grad_h[l - 2], 1.0, gz);
        }
    }
    return grad_x;
}

/// Accumulates decoder parameter gradients from dL/dx_hat. Returns dL/du.
inline Vector decode_backward(const DecodeTrace& t, const DecoderParams& p,
                              std::span<const double> grad_out, DecoderParams& grads) {
    std::array<Vector, kDepth> grad_h;
    for (std::size_t k = 0; k < kDepth; ++k) grad_h[k].assign(t.h[k].size(), 0.0);

    add_outer(grads.layers[0].weight, grad_out, t.h[0]);
    axpy(grads.layers[0].bias, 1.0, grad_out);
    add_outer(grads.skip_out, grad_out, t.h[1]);
    grad_h[0] = matvec_t(p.layers[0].weight, grad_out);
    axpy(grad_h[1], 1.0, matvec_t(p.skip_out, grad_out));

    for (std::size_t k = 0; k + 1 < kDepth; ++k) {
        const Vector gz = detail::relu_backward(t.pre[k], grad_h[k]);
        add_outer(grads.layers[k + 1].weight, gz, t.h[k + 1]);
        axpy(grads.layers[k + 1].bias, 1.0, gz);
        axpy(grad_h[k + 1], 1.0, matvec_t(p.layers[k + 1].weight, gz));
        if (k % 2 == 1) axpy(grad_h[k + 2], 1.0, gz);
    }
    return grad_h[kDepth - 1];
}

}  // namespace aoil
