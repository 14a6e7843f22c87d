// SPDX-License-Identifier: Apache-2.0
/**
 * @file   gradcheck.hpp
 * @brief  Central finite-difference check of every parameter tensor against
 *         backward().
 *
 * The numeric side only calls forward(). For every tensor except the
 * attention parameters the alignment vector is pinned to its unperturbed
 * value, which is the quantity backward() differentiates.
 *
 * The central difference of the total loss is accumulated term by term
 * (prediction, reconstruction, entropy). A large reconstruction term that a
 * tensor does not touch would otherwise cancel in the subtraction and leave
 * its rounding error, divided by 2h, in the estimate.
 *
 * Finite differences are meaningless across a ReLU kink, so sample points
 * whose pre-activations lie within `kink_margin` of zero are redrawn.
 */
#pragma once

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "aoil/learner.hpp"

namespace aoil {

struct GradcheckOptions {
    ModelConfig model{.input_dim = 5, .hidden_dim = 8, .attention_dim = 6, .memory_slots = 4,
                      .classes = 2};
    std::uint64_t seed = 1;
    double step = 1e-5;
    double tolerance = 1e-4;
    /// Floor on |fd| in the relative-error denominator.
    double floor = 1e-8;
    /// Minimum |pre-activation| at an accepted sample point; 0 disables.
    double kink_margin = 1e-3;
    std::size_t max_draws = 1000;
    /// Negative control: perturbs one analytic entry before comparing.
    bool corrupt_gradient = false;
};

struct TensorCheck {
    std::string name;
    double max_relative_error = 0.0;
    std::size_t entries = 0;
};

struct GradcheckReport {
    std::vector<TensorCheck> tensors;
    double tolerance = 0.0;
    /// Sample points drawn until one cleared the kink margin.
    std::size_t draws = 0;

    [[nodiscard]] bool passed() const {
        for (const auto& t : tensors) {
            if (!(t.max_relative_error < tolerance)) return false;
        }
        return true;
    }
    [[nodiscard]] double worst() const {
        double w = 0.0;
        for (const auto& t : tensors) w = std::max(w, t.max_relative_error);
        return w;
    }
};

namespace detail {
inline double kink_distance(const FullTrace& t) {
    double d = std::numeric_limits<double>::infinity();
    for (const auto& pre : t.encoded.pre) {
        for (double v : pre) d = std::min(d, std::abs(v));
    }
    // decoder pre[5] is unused; pre[0..4] feed ReLUs
    for (std::size_t k = 0; k + 1 < kDepth; ++k) {
        for (double v : t.decoded.pre[k]) d = std::min(d, std::abs(v));
    }
    return d;
}

struct GradcheckPoint {
    std::optional<ModelState> model;
    Vector x;
    Vector target;
    std::size_t label = 0;
};

/// Model and example for draw `k` of `seed`; draw 0 is the plain seed.
inline GradcheckPoint draw_point(const GradcheckOptions& opt, std::size_t k) {
    GradcheckPoint p;
    const std::uint64_t s = opt.seed + 0x632be59bd9b4e019ULL * k;
    p.model.emplace(opt.model, s);
    Rng rng(s ^ 0x9e3779b97f4a7c15ULL);
    std::normal_distribution<double> gauss(0.0, 1.0);
    p.x.resize(opt.model.input_dim);
    for (auto& v : p.x) v = gauss(rng);
    p.target.resize(opt.model.input_dim);
    for (auto& v : p.target) v = gauss(rng);
    p.label = std::uniform_int_distribution<std::size_t>(0, opt.model.classes - 1)(rng);
    return p;
}
}  // namespace detail

inline GradcheckReport gradcheck(const GradcheckOptions& opt) {
    GradcheckReport report;
    report.tolerance = opt.tolerance;

    detail::GradcheckPoint point;
    for (std::size_t k = 0; k < std::max<std::size_t>(opt.max_draws, 1); ++k) {
        point = detail::draw_point(opt, k);
        report.draws = k + 1;
        const FullTrace t = forward(point.x, point.label, *point.model, {.target = point.target});
        if (detail::kink_distance(t) >= opt.kink_margin) break;
    }
    ModelState& model = *point.model;
    const Vector& x = point.x;
    const Vector& target = point.target;
    const std::size_t label = point.label;

    const FullTrace base = forward(x, label, model, {.target = target});
    ModelParams analytic = backward(base, model);
    if (opt.corrupt_gradient) {
        auto v = tensor_values(analytic, "encoder.W3");
        v[0] = v[0] * 1.5 + 1e-3;
    }
    const Vector frozen = base.fusion.alignment;
    const double lambda = model.params().memory.lambda;

    const auto names = tensor_names(model.params());
    for (const auto& name : names) {
        const bool pin = name.rfind("attention.", 0) != 0;
        const auto grad = tensor_values(analytic, name);
        TensorCheck check{name, 0.0, grad.size()};
        for (std::size_t i = 0; i < grad.size(); ++i) {
            auto loss_at = [&](double delta) {
                auto values = tensor_values(model.mutable_params(), name);
                const double saved = values[i];
                values[i] = saved + delta;
                const LossBreakdown l =
                    forward(x, label, model,
                            {.target = target, .fixed_alignment = pin ? &frozen : nullptr})
                        .loss;
                values[i] = saved;
                return l;
            };
            const LossBreakdown up = loss_at(opt.step);
            const LossBreakdown down = loss_at(-opt.step);
            const double diff = (up.prediction - down.prediction) +
                                (up.reconstruction - down.reconstruction) +
                                lambda * (up.entropy - down.entropy);
            const double fd = diff / (2.0 * opt.step);
            const double rel = std::abs(grad[i] - fd) / std::max(std::abs(fd), opt.floor);
            check.max_relative_error = std::max(check.max_relative_error, rel);
        }
        report.tensors.push_back(check);
    }
    return report;
}

}  // namespace aoil
