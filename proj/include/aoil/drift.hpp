// SPDX-License-Identifier: Apache-2.0
/**
 * @file   drift.hpp
 * @brief  Loss-window drift detection with a searching/monitoring state
 *         machine, shared-layer snapshot and restore, and the hard-example
 *         replay buffer.
 *
 * The controller only looks for drift after it has seen a stable window
 * (mean < δ_u and std < δ_σ). At that point encoder layers 0-2 and the input
 * skip are snapshotted. While monitoring, a window mean above
 * μ_stable + σ_stable is a drift: the snapshot is restored, layers 3-5 are
 * redrawn, and the controller goes back to searching.
 */
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "aoil/learner.hpp"

namespace aoil {

struct WindowStats {
    double mean = 0.0;
    double stddev = 0.0;
};

/// Ring buffer of the last `capacity` losses. Statistics are recomputed from
/// the contents on every push; stddev uses the n−1 denominator.
class SlidingLossWindow {
  public:
    explicit SlidingLossWindow(std::size_t capacity = 10) : capacity_(capacity) {
        if (capacity == 0) throw std::invalid_argument("loss window capacity must be >= 1");
        ring_.reserve(capacity);
    }

    WindowStats push(double loss) {
        if (!std::isfinite(loss)) throw std::invalid_argument("loss window: non-finite loss");
        if (ring_.size() < capacity_) {
            ring_.push_back(loss);
        } else {
            ring_[head_] = loss;
            head_ = (head_ + 1) % capacity_;
        }
        return stats();
    }

    [[nodiscard]] WindowStats stats() const {
        WindowStats s;
        if (ring_.empty()) return s;
        for (double v : ring_) s.mean += v;
        s.mean /= static_cast<double>(ring_.size());
        if (ring_.size() >= 2) {
            double ss = 0.0;
            for (double v : ring_) ss += (v - s.mean) * (v - s.mean);
            s.stddev = std::sqrt(ss / static_cast<double>(ring_.size() - 1));
        }
        return s;
    }

    /// Contents, oldest first.
    [[nodiscard]] std::vector<double> contents() const {
        std::vector<double> out;
        out.reserve(ring_.size());
        for (std::size_t i = 0; i < ring_.size(); ++i) out.push_back(ring_[(head_ + i) % ring_.size()]);
        return out;
    }

    [[nodiscard]] bool full() const noexcept { return ring_.size() == capacity_; }
    [[nodiscard]] std::size_t size() const noexcept { return ring_.size(); }
    [[nodiscard]] std::size_t capacity() const noexcept { return capacity_; }
    void clear() {
        ring_.clear();
        head_ = 0;
    }

  private:
    std::size_t capacity_;
    std::vector<double> ring_;
    std::size_t head_ = 0;
};

inline constexpr std::size_t kSharedLayers = 3;

/// Copies of the shared encoder tensors (layers 0-2 and the input skip).
struct SharedSnapshot {
    std::array<Layer, kSharedLayers> layers;
    Matrix skip_in;

    bool operator==(const SharedSnapshot&) const = default;
};

inline SharedSnapshot snapshot_shared(const ModelState& model) {
    const auto& enc = model.params().encoder;
    SharedSnapshot s;
    for (std::size_t l = 0; l < kSharedLayers; ++l) s.layers[l] = enc.layers[l];
    s.skip_in = enc.skip_in;
    return s;
}

/// Restores the shared layers from the snapshot, redraws the private layers
/// (Xavier weights, zero biases) and zeroes the Adam state of every encoder
/// tensor touched.
inline void on_drift(ModelState& model, const std::optional<SharedSnapshot>& snapshot) {
    if (!snapshot) throw ContractError("on_drift: no shared-layer snapshot recorded");
    auto& enc = model.mutable_params().encoder;
    for (std::size_t l = 0; l < kSharedLayers; ++l) enc.layers[l] = snapshot->layers[l];
    enc.skip_in = snapshot->skip_in;
    const std::size_t dh = enc.hidden_dim();
    for (std::size_t l = kSharedLayers; l < kDepth; ++l) {
        enc.layers[l].weight = xavier_init(dh, dh, model.rng());
        std::fill(enc.layers[l].bias.begin(), enc.layers[l].bias.end(), 0.0);
    }
    for (std::size_t l = 0; l < kDepth; ++l) {
        model.adam_state("encoder.W" + std::to_string(l)).reset();
        model.adam_state("encoder.b" + std::to_string(l)).reset();
    }
    model.adam_state("encoder.Wm").reset();
}

enum class DriftState { Searching, Monitoring };
enum class DriftEventKind { None, StableFound, DriftDetected };

inline const char* to_string(DriftEventKind k) {
    switch (k) {
        case DriftEventKind::StableFound: return "stable";
        case DriftEventKind::DriftDetected: return "drift";
        default: return "none";
    }
}

struct DriftEvent {
    std::size_t index = 0;
    DriftEventKind kind = DriftEventKind::None;
    double window_mean = 0.0;
    double window_std = 0.0;

    bool operator==(const DriftEvent&) const = default;
};

struct DriftThresholds {
    double mean = 0.2;    // δ_u
    double stddev = 0.01; // δ_σ
};

class DriftController {
  public:
    explicit DriftController(DriftThresholds thresholds = {}) : thresholds_(thresholds) {}

    /// Runs one stability or drift test. Nothing happens until the window is
    /// full. On DriftDetected the controller is already back in Searching;
    /// the caller applies on_drift() with snapshot().
    DriftEventKind check(const SlidingLossWindow& window, const ModelState& model,
                         std::size_t index) {
        if (!window.full()) return DriftEventKind::None;
        const WindowStats s = window.stats();
        if (state_ == DriftState::Searching) {
            if (s.mean < thresholds_.mean && s.stddev < thresholds_.stddev) {
                stable_ = s;
                snapshot_ = snapshot_shared(model);
                state_ = DriftState::Monitoring;
                events_.push_back({index, DriftEventKind::StableFound, s.mean, s.stddev});
                return DriftEventKind::StableFound;
            }
            return DriftEventKind::None;
        }
        if (s.mean > stable_.mean + stable_.stddev) {
            state_ = DriftState::Searching;
            events_.push_back({index, DriftEventKind::DriftDetected, s.mean, s.stddev});
            return DriftEventKind::DriftDetected;
        }
        return DriftEventKind::None;
    }

    [[nodiscard]] DriftState state() const noexcept { return state_; }
    [[nodiscard]] const WindowStats& stable() const noexcept { return stable_; }
    [[nodiscard]] const std::optional<SharedSnapshot>& snapshot() const noexcept { return snapshot_; }
    [[nodiscard]] const std::vector<DriftEvent>& events() const noexcept { return events_; }
    [[nodiscard]] const DriftThresholds& thresholds() const noexcept { return thresholds_; }

  private:
    DriftThresholds thresholds_;
    DriftState state_ = DriftState::Searching;
    WindowStats stable_;
    std::optional<SharedSnapshot> snapshot_;
    std::vector<DriftEvent> events_;
};

// ---------------------------------------------------------------------------
// hard buffer

struct HardExample {
    Vector x;
    std::size_t y = 0;
    double loss = 0.0;
};

/// Keeps the `capacity` highest-loss examples offered since the last clear,
/// in insertion order. Ties keep the earlier example.
class HardBuffer {
  public:
    explicit HardBuffer(std::size_t capacity = 5) : capacity_(capacity) {}

    void offer(std::span<const double> x, std::size_t y, double loss) {
        if (capacity_ == 0) return;
        if (entries_.size() < capacity_) {
            entries_.push_back({Vector(x.begin(), x.end()), y, loss});
            return;
        }
        // last of the minimal entries, so ties evict the newer one
        std::size_t victim = 0;
        for (std::size_t i = 1; i < entries_.size(); ++i) {
            if (entries_[i].loss <= entries_[victim].loss) victim = i;
        }
        if (!(loss > entries_[victim].loss)) return;
        entries_.erase(entries_.begin() + static_cast<std::ptrdiff_t>(victim));
        entries_.push_back({Vector(x.begin(), x.end()), y, loss});
    }

    [[nodiscard]] const std::vector<HardExample>& entries() const noexcept { return entries_; }
    [[nodiscard]] std::size_t capacity() const noexcept { return capacity_; }
    [[nodiscard]] bool empty() const noexcept { return entries_.empty(); }
    void clear() { entries_.clear(); }

  private:
    std::size_t capacity_;
    std::vector<HardExample> entries_;
};

/// One train_step per buffered example in stored order; returns the mean
/// pre-update losses. In denoising mode each replayed input is corrupted
/// afresh while the target stays clean.
inline LossBreakdown replay(const HardBuffer& buffer, ModelState& model,
                            const NoiseConfig& noise = {}) {
    LossBreakdown mean;
    if (buffer.empty()) return mean;
    for (const auto& e : buffer.entries()) {
        const Vector input = corrupt(e.x, noise, model.rng());
        const LossBreakdown l = train_step(input, e.y, model, e.x);
        mean.prediction += l.prediction;
        mean.reconstruction += l.reconstruction;
        mean.entropy += l.entropy;
        mean.total += l.total;
    }
    const double n = static_cast<double>(buffer.entries().size());
    mean.prediction /= n;
    mean.reconstruction /= n;
    mean.entropy /= n;
    mean.total /= n;
    return mean;
}

}  // namespace aoil
