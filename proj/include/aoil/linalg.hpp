// SPDX-License-Identifier: Apache-2.0
/**
 * @file   linalg.hpp
 * @brief  Dense row-major matrices, vector helpers, activations, Xavier
 *         initialization and the Adam optimizer.
 *
 * Everything is double precision. Vectors are plain std::vector<double>;
 * Matrix is a thin row-major owner with shape checks on every product.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace aoil {

using Vector = std::vector<double>;
using Rng = std::mt19937_64;

/// Raised when operand shapes do not line up.
class DimensionError : public std::invalid_argument {
  public:
    explicit DimensionError(const std::string& what) : std::invalid_argument(what) {}
};

/// Raised when a caller breaks a documented precondition (stale trace,
/// empty snapshot, ...).
class ContractError : public std::logic_error {
  public:
    explicit ContractError(const std::string& what) : std::logic_error(what) {}
};

namespace detail {
inline void require_same(std::size_t a, std::size_t b, const char* where) {
    if (a != b) {
        throw DimensionError(std::string(where) + ": size " + std::to_string(a) + " vs " +
                             std::to_string(b));
    }
}
}  // namespace detail

class Matrix {
  public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
    [[nodiscard]] std::size_t cols() const noexcept { return cols_; }
    [[nodiscard]] std::size_t size() const noexcept { return data_.size(); }

    double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

    [[nodiscard]] std::span<double> row(std::size_t r) noexcept {
        return {data_.data() + r * cols_, cols_};
    }
    [[nodiscard]] std::span<const double> row(std::size_t r) const noexcept {
        return {data_.data() + r * cols_, cols_};
    }

    [[nodiscard]] std::span<double> values() noexcept { return data_; }
    [[nodiscard]] std::span<const double> values() const noexcept { return data_; }

    void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

    [[nodiscard]] bool same_shape(const Matrix& o) const noexcept {
        return rows_ == o.rows_ && cols_ == o.cols_;
    }

    bool operator==(const Matrix& o) const = default;

  private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

// ---------------------------------------------------------------------------
// products

/// y = M v
inline Vector matvec(const Matrix& m, std::span<const double> v) {
    detail::require_same(m.cols(), v.size(), "matvec");
    Vector out(m.rows(), 0.0);
    for (std::size_t r = 0; r < m.rows(); ++r) {
        const auto row = m.row(r);
        double acc = 0.0;
        for (std::size_t c = 0; c < row.size(); ++c) acc += row[c] * v[c];
        out[r] = acc;
    }
    return out;
}

/// y = Mᵀ v
inline Vector matvec_t(const Matrix& m, std::span<const double> v) {
    detail::require_same(m.rows(), v.size(), "matvec_t");
    Vector out(m.cols(), 0.0);
    for (std::size_t r = 0; r < m.rows(); ++r) {
        const auto row = m.row(r);
        const double s = v[r];
        if (s == 0.0) continue;
        for (std::size_t c = 0; c < row.size(); ++c) out[c] += s * row[c];
    }
    return out;
}

/// M += a bᵀ
inline void add_outer(Matrix& m, std::span<const double> a, std::span<const double> b) {
    detail::require_same(m.rows(), a.size(), "add_outer rows");
    detail::require_same(m.cols(), b.size(), "add_outer cols");
    for (std::size_t r = 0; r < m.rows(); ++r) {
        const double s = a[r];
        if (s == 0.0) continue;
        auto row = m.row(r);
        for (std::size_t c = 0; c < row.size(); ++c) row[c] += s * b[c];
    }
}

inline double dot(std::span<const double> a, std::span<const double> b) {
    detail::require_same(a.size(), b.size(), "dot");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

inline double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

/// a += s * b
inline void axpy(Vector& a, double s, std::span<const double> b) {
    detail::require_same(a.size(), b.size(), "axpy");
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += s * b[i];
}

inline Vector add(std::span<const double> a, std::span<const double> b) {
    detail::require_same(a.size(), b.size(), "add");
    Vector out(a.begin(), a.end());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i];
    return out;
}

// ---------------------------------------------------------------------------
// activations

inline Vector relu(std::span<const double> v) {
    Vector out(v.size());
    std::transform(v.begin(), v.end(), out.begin(), [](double x) { return x > 0.0 ? x : 0.0; });
    return out;
}

/// Numerically safe softmax: the maximum is subtracted before exponentiating.
inline Vector softmax(std::span<const double> v) {
    if (v.empty()) throw DimensionError("softmax: empty input");
    const double peak = *std::max_element(v.begin(), v.end());
    Vector out(v.size());
    double total = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        out[i] = std::exp(v[i] - peak);
        total += out[i];
    }
    for (auto& o : out) o /= total;
    return out;
}

/// Gradient of a loss with respect to softmax logits, given the softmax
/// output p and the gradient g with respect to p.
inline Vector softmax_backward(std::span<const double> p, std::span<const double> g) {
    detail::require_same(p.size(), g.size(), "softmax_backward");
    const double inner = dot(p, g);
    Vector out(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) out[i] = p[i] * (g[i] - inner);
    return out;
}

/// Cosine similarity; 0 when either vector has zero norm.
inline double cosine_similarity(std::span<const double> a, std::span<const double> b) {
    detail::require_same(a.size(), b.size(), "cosine_similarity");
    const double na = norm(a);
    const double nb = norm(b);
    if (na == 0.0 || nb == 0.0) return 0.0;
    return std::clamp(dot(a, b) / (na * nb), -1.0, 1.0);
}

// ---------------------------------------------------------------------------
// initialization

/// Xavier/Glorot uniform draw on ±sqrt(6 / (rows + cols)).
inline Matrix xavier_init(std::size_t rows, std::size_t cols, Rng& rng) {
    if (rows == 0 || cols == 0) {
        throw DimensionError("xavier_init: empty shape " + std::to_string(rows) + "x" +
                             std::to_string(cols));
    }
    const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
    std::uniform_real_distribution<double> dist(-limit, limit);
    Matrix m(rows, cols);
    for (auto& v : m.values()) v = dist(rng);
    return m;
}

// ---------------------------------------------------------------------------
// Adam

inline constexpr double kMomentFlush = 1e-150;

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    bool operator==(const AdamConfig&) const = default;
};

struct AdamState {
    Vector first_moment;
    Vector second_moment;
    std::size_t step_count = 0;
    AdamConfig config;

    AdamState() = default;
    explicit AdamState(std::size_t n, AdamConfig cfg = {})
        : first_moment(n, 0.0), second_moment(n, 0.0), config(cfg) {}

    void reset() {
        std::fill(first_moment.begin(), first_moment.end(), 0.0);
        std::fill(second_moment.begin(), second_moment.end(), 0.0);
        step_count = 0;
    }

    bool operator==(const AdamState&) const = default;
};

/// One bias-corrected Adam update in place. The state is lazily sized on the
/// first call.
inline void adam_step(std::span<double> param, std::span<const double> grad, AdamState& state,
                      double lr) {
    detail::require_same(param.size(), grad.size(), "adam_step");
    if (state.first_moment.empty() && state.step_count == 0) {
        state.first_moment.assign(param.size(), 0.0);
        state.second_moment.assign(param.size(), 0.0);
    }
    detail::require_same(param.size(), state.first_moment.size(), "adam_step state");

    const auto& c = state.config;
    state.step_count += 1;
    const double t = static_cast<double>(state.step_count);
    const double bc1 = 1.0 - std::pow(c.beta1, t);
    const double bc2 = 1.0 - std::pow(c.beta2, t);
    const double step = lr / bc1;
    const double inv_bc2 = 1.0 / bc2;
    double* m = state.first_moment.data();
    double* v = state.second_moment.data();
    const std::size_t n = param.size();
    for (std::size_t i = 0; i < n; ++i) {
        const double g = grad[i];
        const double mi = c.beta1 * m[i] + (1.0 - c.beta1) * g;
        const double vi = c.beta2 * v[i] + (1.0 - c.beta2) * g * g;
        // moments of long-idle units decay toward subnormals, which are slow
        m[i] = std::abs(mi) < kMomentFlush ? 0.0 : mi;
        v[i] = vi < kMomentFlush ? 0.0 : vi;
        param[i] -= step * m[i] / (std::sqrt(v[i] * inv_bc2) + c.epsilon);
    }
}

inline void adam_step(Matrix& param, const Matrix& grad, AdamState& state, double lr) {
    if (!param.same_shape(grad)) throw DimensionError("adam_step: matrix shape mismatch");
    adam_step(param.values(), grad.values(), state, lr);
}

inline bool all_finite(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace aoil
