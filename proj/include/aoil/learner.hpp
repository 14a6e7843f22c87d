// SPDX-License-Identifier: Apache-2.0
/**
 * @file   learner.hpp
 * @brief  Full forward pass (encoder → memory → decoder, encoder → attention
 *         → classifier), the composite loss, its reverse pass, Adam updates,
 *         input corruption for the denoising variant, and checkpoints.
 *
 * Gradient routing:
 *  - The classifier sees only the prediction loss.
 *  - Attention parameters get the full prediction-loss gradient, including
 *    the path through the alignment softmax.
 *  - Encoder layers get the prediction loss through C = Σ_j A_j h_j with A
 *    held constant, so the gradient reaching layer l is the A_j-weighted sum
 *    of the paths through every h_j with j ≥ l. They also get the
 *    reconstruction and entropy gradients through the memory addressing.
 *  - Decoder and memory see only reconstruction + λ·entropy.
 */
#pragma once

#include <array>
#include <concepts>
#include <cstdint>
#include <fstream>
#include <functional>
#include <iomanip>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "aoil/autoencoder.hpp"
#include "aoil/fusion.hpp"
#include "aoil/memory.hpp"

namespace aoil {

struct ModelConfig {
    std::size_t input_dim = 3;
    std::size_t hidden_dim = 30;
    std::size_t attention_dim = 30;
    std::size_t memory_slots = 50;
    std::size_t classes = 2;
    double lambda = 0.0002;
    double shrink_epsilon = 1e-12;
    double learning_rate = 0.01;
    /// Standard deviation of the Gaussian memory-slot initialization; 0 selects
    /// Xavier uniform. Addressing is scale-invariant, so this only sets how far
    /// the memory read can move away from the slot mean.
    double memory_init_stddev = 5.0;
    bool use_memory = true;

    void validate() const {
        if (input_dim == 0 || hidden_dim == 0 || attention_dim == 0 || memory_slots == 0) {
            throw DimensionError("model dimensions must be positive");
        }
        if (classes < 2) throw DimensionError("model needs at least two classes");
        if (!(shrink_epsilon > 0.0)) throw std::invalid_argument("shrink_epsilon must be > 0");
        if (lambda < 0.0 || learning_rate < 0.0 || memory_init_stddev < 0.0) {
            throw std::invalid_argument("lambda, learning_rate, memory_init_stddev must be >= 0");
        }
    }

    bool operator==(const ModelConfig&) const = default;
};

/// Every trainable tensor. Also used as the gradient container.
struct ModelParams {
    EncoderParams encoder;
    DecoderParams decoder;
    MemoryModule memory;
    AttentionParams attention;
    ClassifierParams classifier;

    static ModelParams zeros(const ModelConfig& c) {
        ModelParams p;
        p.encoder = EncoderParams::zeros(c.input_dim, c.hidden_dim);
        p.decoder = DecoderParams::zeros(c.input_dim, c.hidden_dim);
        p.memory.units = Matrix(c.memory_slots, c.hidden_dim);
        p.memory.lambda = c.lambda;
        p.memory.shrink_epsilon = c.shrink_epsilon;
        p.attention.projection = Matrix(c.attention_dim, c.hidden_dim);
        p.attention.context.assign(c.attention_dim, 0.0);
        p.classifier.weight = Matrix(c.hidden_dim, c.classes);
        p.classifier.bias.assign(c.classes, 0.0);
        return p;
    }

    static ModelParams xavier(const ModelConfig& c, Rng& rng) {
        ModelParams p = zeros(c);
        p.encoder = EncoderParams::xavier(c.input_dim, c.hidden_dim, rng);
        p.decoder = DecoderParams::xavier(c.input_dim, c.hidden_dim, rng);
        if (c.memory_init_stddev > 0.0) {
            std::normal_distribution<double> slot(0.0, c.memory_init_stddev);
            for (auto& v : p.memory.units.values()) v = slot(rng);
        } else {
            p.memory.units = xavier_init(c.memory_slots, c.hidden_dim, rng);
        }
        p.attention.projection = xavier_init(c.attention_dim, c.hidden_dim, rng);
        const Matrix ctx = xavier_init(c.attention_dim, 1, rng);
        p.attention.context.assign(ctx.values().begin(), ctx.values().end());
        p.classifier.weight = xavier_init(c.hidden_dim, c.classes, rng);
        return p;
    }

    bool operator==(const ModelParams&) const = default;
};

namespace detail {
inline constexpr std::array<std::string_view, 31> kTensorNames = {
    "encoder.W0", "encoder.b0", "encoder.W1", "encoder.b1", "encoder.W2", "encoder.b2",
    "encoder.W3", "encoder.b3", "encoder.W4", "encoder.b4", "encoder.W5", "encoder.b5",
    "encoder.Wm", "decoder.W0", "decoder.b0", "decoder.W1", "decoder.b1", "decoder.W2",
    "decoder.b2", "decoder.W3", "decoder.b3", "decoder.W4", "decoder.b4", "decoder.W5",
    "decoder.b5", "decoder.Wm", "memory.M",   "attention.Ws1", "attention.ws2",
    "classifier.Wf", "classifier.bf"};
}  // namespace detail

/// Visits (name, rows, cols, values) for every tensor in a fixed order.
template <typename Params, typename F>
    requires std::same_as<std::remove_const_t<Params>, ModelParams>
void for_each_tensor(Params& p, F&& f) {
    std::size_t k = 0;
    auto mat = [&](auto& m) { f(detail::kTensorNames[k++], m.rows(), m.cols(), m.values()); };
    auto vec = [&](auto& v) {
        f(detail::kTensorNames[k++], v.size(), std::size_t{1}, std::span(v.data(), v.size()));
    };
    for (std::size_t l = 0; l < kDepth; ++l) {
        mat(p.encoder.layers[l].weight);
        vec(p.encoder.layers[l].bias);
    }
    mat(p.encoder.skip_in);
    for (std::size_t l = 0; l < kDepth; ++l) {
        mat(p.decoder.layers[l].weight);
        vec(p.decoder.layers[l].bias);
    }
    mat(p.decoder.skip_out);
    mat(p.memory.units);
    mat(p.attention.projection);
    vec(p.attention.context);
    mat(p.classifier.weight);
    vec(p.classifier.bias);
}

inline std::vector<std::string> tensor_names(const ModelParams& p) {
    std::vector<std::string> names;
    for_each_tensor(p, [&](std::string_view n, auto, auto, auto) { names.emplace_back(n); });
    return names;
}

/// Mutable view of one named tensor.
inline std::span<double> tensor_values(ModelParams& p, std::string_view name) {
    std::span<double> found;
    for_each_tensor(p, [&](std::string_view n, auto, auto, std::span<double> v) {
        if (n == name) found = v;
    });
    if (found.data() == nullptr) throw std::out_of_range("no tensor named " + std::string(name));
    return found;
}

struct LossBreakdown {
    double prediction = 0.0;
    double reconstruction = 0.0;
    double entropy = 0.0;
    double total = 0.0;

    bool operator==(const LossBreakdown&) const = default;
};

struct NoiseConfig {
    bool enabled = false;
    double corruption_variance = 0.1;
    double corruption_fraction = 1.0;

    void validate() const {
        if (corruption_variance < 0.0) throw std::invalid_argument("corruption variance < 0");
        if (corruption_fraction < 0.0 || corruption_fraction > 1.0) {
            throw std::invalid_argument("corruption fraction outside [0,1]");
        }
    }
};

class ModelState {
  public:
    ModelState(ModelConfig config, std::uint64_t seed)
        : config_(config), seed_(seed), rng_(seed) {
        config_.validate();
        params_ = ModelParams::xavier(config_, rng_);
        reset_optimizer();
    }

    [[nodiscard]] const ModelConfig& config() const noexcept { return config_; }
    [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }
    [[nodiscard]] const ModelParams& params() const noexcept { return params_; }
    /// Direct parameter access; bumps the version so outstanding traces go stale.
    [[nodiscard]] ModelParams& mutable_params() noexcept {
        ++version_;
        return params_;
    }
    [[nodiscard]] std::uint64_t version() const noexcept { return version_; }
    [[nodiscard]] Rng& rng() noexcept { return rng_; }

    [[nodiscard]] const std::vector<AdamState>& optimizer() const noexcept { return adam_; }

    AdamState& adam_state(std::string_view name) { return adam_.at(index_of(name)); }
    [[nodiscard]] const AdamState& adam_state(std::string_view name) const {
        return adam_.at(index_of(name));
    }

    void set_learning_rate(double lr) { config_.learning_rate = lr; }

    void reset_optimizer() {
        adam_.clear();
        for_each_tensor(params_, [&](std::string_view, auto, auto, auto values) {
            adam_.emplace_back(values.size());
        });
    }

    /// Applies one Adam step per tensor.
    void apply(const ModelParams& grads) {
        std::vector<std::span<const double>> g;
        for_each_tensor(grads, [&](std::string_view, auto, auto, std::span<const double> v) {
            g.push_back(v);
        });
        std::size_t i = 0;
        for_each_tensor(params_, [&](std::string_view, auto, auto, std::span<double> v) {
            adam_step(v, g[i], adam_[i], config_.learning_rate);
            ++i;
        });
        ++version_;
    }

    void save(std::ostream& os) const;
    static ModelState load(std::istream& is);

  private:
    ModelState() = default;

    [[nodiscard]] std::size_t index_of(std::string_view name) const {
        for (std::size_t i = 0; i < detail::kTensorNames.size(); ++i) {
            if (detail::kTensorNames[i] == name) return i;
        }
        throw std::out_of_range("no tensor named " + std::string(name));
    }

    ModelConfig config_;
    std::uint64_t seed_ = 0;
    Rng rng_;
    ModelParams params_;
    std::vector<AdamState> adam_;
    std::uint64_t version_ = 0;
};

struct FullTrace {
    std::uint64_t model_version = 0;
    Vector target;      // reconstruction target (clean x)
    Vector label;       // one-hot y
    EncodeTrace encoded;
    Vector similarity;  // cos(h5, m_i)
    Vector weights;     // w
    Vector shrunk;      // ŵ
    Vector memory_read; // ĥ5 (decoder input)
    DecodeTrace decoded;
    FusionTrace fusion;
    LossBreakdown loss;
};

struct ForwardOptions {
    /// Reconstruction target; empty means the encoder input itself.
    std::span<const double> target{};
    /// When set, replaces the attention softmax output (gradient checks).
    const Vector* fixed_alignment = nullptr;
};

inline FullTrace forward(std::span<const double> x, std::size_t label, const ModelState& model,
                         ForwardOptions opts = {}) {
    const auto& cfg = model.config();
    const auto& p = model.params();
    FullTrace t;
    t.model_version = model.version();
    const auto target = opts.target.empty() ? x : opts.target;
    detail::require_same(target.size(), x.size(), "forward target");
    t.target.assign(target.begin(), target.end());
    t.label = one_hot(label, cfg.classes);

    t.encoded = encode(x, p.encoder);
    const Vector& h5 = t.encoded.h[kDepth - 1];
    if (cfg.use_memory) {
        t.similarity.resize(p.memory.slots());
        for (std::size_t i = 0; i < p.memory.slots(); ++i) {
            t.similarity[i] = cosine_similarity(h5, p.memory.units.row(i));
        }
        t.weights = softmax(t.similarity);
        t.shrunk = shrink(t.weights, p.memory);
        t.memory_read = read(t.shrunk, p.memory);
    } else {
        t.memory_read = h5;
    }
    t.decoded = decode(t.memory_read, p.decoder);

    Matrix H(kDepth, cfg.hidden_dim);
    for (std::size_t l = 0; l < kDepth; ++l) {
        std::copy(t.encoded.h[l].begin(), t.encoded.h[l].end(), H.row(l).begin());
    }
    t.fusion = fusion_forward(H, p.attention, p.classifier, opts.fixed_alignment);

    t.loss.prediction = cross_entropy(t.label, t.fusion.prediction);
    t.loss.reconstruction = reconstruction_error(t.target, t.decoded.output);
    t.loss.entropy = cfg.use_memory ? entropy_reg(t.shrunk) : 0.0;
    t.loss.total = t.loss.prediction + t.loss.reconstruction + p.memory.lambda * t.loss.entropy;
    return t;
}

inline std::size_t predicted_class(const FullTrace& t) {
    const auto& y = t.fusion.prediction;
    return static_cast<std::size_t>(std::max_element(y.begin(), y.end()) - y.begin());
}

/// Reverse pass for L_total. The trace must come from forward() on the same
/// model version.
inline ModelParams backward(const FullTrace& t, const ModelState& model) {
    if (t.model_version != model.version()) {
        throw ContractError("backward: trace was produced by a different model version");
    }
    const auto& cfg = model.config();
    const auto& p = model.params();
    ModelParams g = ModelParams::zeros(cfg);
    const auto& fu = t.fusion;

    // prediction loss
    Vector g_logits(cfg.classes, 0.0);
    for (std::size_t k = 0; k < cfg.classes; ++k) {
        g_logits[k] = fu.prediction[k] - t.label[k];
    }
    for (std::size_t k = 0; k < cfg.classes; ++k) {
        if (t.label[k] != 0.0 && fu.prediction[k] < kProbabilityFloor) {
            std::fill(g_logits.begin(), g_logits.end(), 0.0);
        }
    }
    add_outer(g.classifier.weight, fu.context, g_logits);
    axpy(g.classifier.bias, 1.0, g_logits);
    const Vector g_context = matvec(p.classifier.weight, g_logits);

    Vector g_align(kDepth);
    for (std::size_t j = 0; j < kDepth; ++j) g_align[j] = dot(fu.stacked.row(j), g_context);
    const Vector g_att_logits = softmax_backward(fu.alignment, g_align);
    for (std::size_t j = 0; j < kDepth; ++j) {
        const auto tj = fu.tanh_projection.row(j);
        axpy(g.attention.context, g_att_logits[j], tj);
        Vector g_pre(tj.size());
        for (std::size_t a = 0; a < tj.size(); ++a) {
            g_pre[a] = g_att_logits[j] * p.attention.context[a] * (1.0 - tj[a] * tj[a]);
        }
        add_outer(g.attention.projection, g_pre, fu.stacked.row(j));
    }

    std::array<Vector, kDepth> g_h;
    for (std::size_t j = 0; j < kDepth; ++j) {
        g_h[j].assign(cfg.hidden_dim, 0.0);
        axpy(g_h[j], fu.alignment[j], g_context);
    }

    // reconstruction + entropy
    const Vector g_out = reconstruction_error_grad(t.target, t.decoded.output);
    const Vector g_read = decode_backward(t.decoded, p.decoder, g_out, g.decoder);
    if (cfg.use_memory) {
        Vector g_shrunk(p.memory.slots());
        for (std::size_t i = 0; i < p.memory.slots(); ++i) {
            g_shrunk[i] = dot(p.memory.units.row(i), g_read);
        }
        add_outer(g.memory.units, t.shrunk, g_read);
        axpy(g_shrunk, p.memory.lambda, entropy_reg_grad(t.shrunk));
        const Vector g_w = shrink_backward(t.weights, t.shrunk, g_shrunk, p.memory);
        const Vector g_sim = softmax_backward(t.weights, g_w);
        const Vector g_h5 =
            cosine_backward(t.encoded.h[kDepth - 1], p.memory.units, g_sim, g.memory.units);
        axpy(g_h[kDepth - 1], 1.0, g_h5);
    } else {
        axpy(g_h[kDepth - 1], 1.0, g_read);
    }

    encode_backward(t.encoded, p.encoder, std::move(g_h), g.encoder);
    return g;
}

/// Forward, backward, one Adam step per tensor. Returns the pre-update loss.
inline LossBreakdown train_step(std::span<const double> x, std::size_t label, ModelState& model,
                                std::span<const double> target = {}) {
    const FullTrace t = forward(x, label, model, {.target = target});
    const ModelParams g = backward(t, model);
    model.apply(g);
    return t.loss;
}

/// Adds N(0, variance) to each coordinate when enabled and the example is
/// selected with probability corruption_fraction.
inline Vector corrupt(std::span<const double> x, const NoiseConfig& cfg, Rng& rng) {
    Vector out(x.begin(), x.end());
    if (!cfg.enabled || cfg.corruption_variance == 0.0) return out;
    if (cfg.corruption_fraction < 1.0) {
        std::bernoulli_distribution pick(cfg.corruption_fraction);
        if (!pick(rng)) return out;
    }
    std::normal_distribution<double> noise(0.0, std::sqrt(cfg.corruption_variance));
    for (auto& v : out) v += noise(rng);
    return out;
}

// ---------------------------------------------------------------------------
// checkpoint: text, hexfloat values, round-trips bitwise

inline void ModelState::save(std::ostream& os) const {
    os << "aoil-checkpoint 1\n";
    os << "seed " << seed_ << "\n";
    os << "version " << version_ << "\n";
    os << "config " << config_.input_dim << ' ' << config_.hidden_dim << ' '
       << config_.attention_dim << ' ' << config_.memory_slots << ' ' << config_.classes << ' '
       << std::hexfloat << config_.lambda << ' ' << config_.shrink_epsilon << ' '
       << config_.learning_rate << ' ' << config_.memory_init_stddev << std::defaultfloat << ' '
       << (config_.use_memory ? 1 : 0)
       << "\n";
    os << "rng " << rng_ << "\n";
    std::size_t i = 0;
    for_each_tensor(params_, [&](std::string_view name, std::size_t r, std::size_t c,
                                 std::span<const double> v) {
        const AdamState& a = adam_[i++];
        os << "tensor " << name << ' ' << r << ' ' << c << ' ' << a.step_count << "\n";
        os << std::hexfloat;
        for (double x : v) os << x << ' ';
        os << "\n";
        for (double x : a.first_moment) os << x << ' ';
        os << "\n";
        for (double x : a.second_moment) os << x << ' ';
        os << std::defaultfloat << "\n";
    });
    os << "end\n";
}

namespace detail {
inline double read_hex(std::istream& is) {
    std::string tok;
    if (!(is >> tok)) throw std::runtime_error("checkpoint: truncated value list");
    std::size_t used = 0;
    const double v = std::stod(tok, &used);
    if (used != tok.size()) throw std::runtime_error("checkpoint: bad number '" + tok + "'");
    return v;
}

inline void expect(std::istream& is, std::string_view word) {
    std::string tok;
    if (!(is >> tok) || tok != word) {
        throw std::runtime_error("checkpoint: expected '" + std::string(word) + "', got '" + tok +
                                 "'");
    }
}
}  // namespace detail

inline ModelState ModelState::load(std::istream& is) {
    ModelState m;
    detail::expect(is, "aoil-checkpoint");
    int fmt = 0;
    is >> fmt;
    if (fmt != 1) throw std::runtime_error("checkpoint: unsupported format " + std::to_string(fmt));
    detail::expect(is, "seed");
    is >> m.seed_;
    detail::expect(is, "version");
    is >> m.version_;
    detail::expect(is, "config");
    int use_memory = 1;
    is >> m.config_.input_dim >> m.config_.hidden_dim >> m.config_.attention_dim >>
        m.config_.memory_slots >> m.config_.classes;
    m.config_.lambda = detail::read_hex(is);
    m.config_.shrink_epsilon = detail::read_hex(is);
    m.config_.learning_rate = detail::read_hex(is);
    m.config_.memory_init_stddev = detail::read_hex(is);
    is >> use_memory;
    m.config_.use_memory = use_memory != 0;
    m.config_.validate();
    detail::expect(is, "rng");
    is >> m.rng_;
    if (!is) throw std::runtime_error("checkpoint: bad header");

    m.params_ = ModelParams::zeros(m.config_);
    m.reset_optimizer();
    std::size_t i = 0;
    for_each_tensor(m.params_, [&](std::string_view name, std::size_t r, std::size_t c,
                                   std::span<double> v) {
        detail::expect(is, "tensor");
        detail::expect(is, name);
        std::size_t rr = 0, cc = 0;
        AdamState& a = m.adam_[i++];
        is >> rr >> cc >> a.step_count;
        if (rr != r || cc != c) throw DimensionError("checkpoint: shape mismatch for " + std::string(name));
        for (auto& x : v) x = detail::read_hex(is);
        for (auto& x : a.first_moment) x = detail::read_hex(is);
        for (auto& x : a.second_moment) x = detail::read_hex(is);
    });
    detail::expect(is, "end");
    return m;
}

}  // namespace aoil
