// SPDX-License-Identifier: Apache-2.0
/**
 * @file   eval.hpp
 * @brief  Prequential (test-then-train) harness, classification metrics,
 *         rank-based AUC, stage-wise accuracy, and an online logistic
 *         regression baseline.
 */
#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "aoil/drift.hpp"
#include "aoil/streams.hpp"

namespace aoil {

// ---------------------------------------------------------------------------
// metrics

/// One-vs-rest tallies per class.
struct ConfusionCounts {
    std::vector<std::size_t> tp, fp, fn, tn;

    explicit ConfusionCounts(std::size_t classes = 2)
        : tp(classes, 0), fp(classes, 0), fn(classes, 0), tn(classes, 0) {}

    void add(std::size_t truth, std::size_t predicted) {
        for (std::size_t c = 0; c < tp.size(); ++c) {
            const bool t = truth == c;
            const bool p = predicted == c;
            if (t && p) ++tp[c];
            else if (!t && p) ++fp[c];
            else if (t && !p) ++fn[c];
            else ++tn[c];
        }
    }

    [[nodiscard]] std::size_t total() const {
        return tp.empty() ? 0 : tp[0] + fp[0] + fn[0] + tn[0];
    }
    [[nodiscard]] std::size_t correct() const {
        return std::accumulate(tp.begin(), tp.end(), std::size_t{0});
    }
};

/// (positive-class score, true label) pairs.
using ScoreStore = std::vector<std::pair<double, std::size_t>>;

/// Mann–Whitney AUC with midranks for ties; positives are label 1. Returns
/// NaN if either class is absent.
inline double auc(const ScoreStore& scores) {
    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a].first < scores[b].first; });

    double rank_sum = 0.0;
    std::size_t positives = 0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && scores[order[j]].first == scores[order[i]].first) ++j;
        // ranks i+1 .. j share their mean
        const double midrank = 0.5 * static_cast<double>(i + 1 + j);
        for (std::size_t k = i; k < j; ++k) {
            if (scores[order[k]].second == 1) {
                rank_sum += midrank;
                ++positives;
            }
        }
        i = j;
    }
    const std::size_t negatives = n - positives;
    if (positives == 0 || negatives == 0) return std::numeric_limits<double>::quiet_NaN();
    const double np = static_cast<double>(positives);
    const double u = rank_sum - np * (np + 1.0) / 2.0;
    return u / (np * static_cast<double>(negatives));
}

struct Metrics {
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double auc = 0.0;
};

/// Binary metrics with class 1 as the positive class.
inline Metrics metrics(const ConfusionCounts& counts, const ScoreStore& scores) {
    if (counts.total() == 0) throw std::invalid_argument("metrics: no examples");
    if (counts.tp.size() < 2) throw DimensionError("metrics: need two classes");
    Metrics m;
    m.accuracy = static_cast<double>(counts.correct()) / static_cast<double>(counts.total());
    const double tp = static_cast<double>(counts.tp[1]);
    const double fp = static_cast<double>(counts.fp[1]);
    const double fn = static_cast<double>(counts.fn[1]);
    m.precision = tp + fp > 0.0 ? tp / (tp + fp) : 0.0;
    m.recall = tp + fn > 0.0 ? tp / (tp + fn) : 0.0;
    m.f1 = m.precision + m.recall > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
                                        : 0.0;
    m.auc = auc(scores);
    return m;
}

struct StageSummary {
    std::array<double, 5> accuracy{};
    std::array<double, 4> delta{};
    std::array<std::size_t, 5> size{};
};

/// Accuracy over five equal slices; the remainder goes to the last slice.
inline StageSummary stage_deltas(const std::vector<bool>& correct) {
    if (correct.size() < 5) throw std::invalid_argument("stage_deltas: need at least 5 examples");
    StageSummary s;
    const std::size_t base = correct.size() / 5;
    std::size_t begin = 0;
    for (std::size_t k = 0; k < 5; ++k) {
        const std::size_t end = k == 4 ? correct.size() : begin + base;
        std::size_t hits = 0;
        for (std::size_t i = begin; i < end; ++i) hits += correct[i] ? 1 : 0;
        s.size[k] = end - begin;
        s.accuracy[k] = static_cast<double>(hits) / static_cast<double>(end - begin);
        begin = end;
    }
    for (std::size_t k = 0; k < 4; ++k) s.delta[k] = s.accuracy[k + 1] - s.accuracy[k];
    return s;
}

// ---------------------------------------------------------------------------
// prequential run

enum class Mode { Aoil, AoilDae, OilBase, AoilNoMemory, Ogd };

inline const char* to_string(Mode m) {
    switch (m) {
        case Mode::Aoil: return "aoil";
        case Mode::AoilDae: return "aoil-dae";
        case Mode::OilBase: return "oil-base";
        case Mode::AoilNoMemory: return "aoil-no-memory";
        case Mode::Ogd: return "ogd";
    }
    return "?";
}

inline Mode parse_mode(const std::string& s) {
    for (Mode m : {Mode::Aoil, Mode::AoilDae, Mode::OilBase, Mode::AoilNoMemory, Mode::Ogd}) {
        if (s == to_string(m)) return m;
    }
    throw std::invalid_argument("unknown mode '" + s + "'");
}

struct RunOptions {
    bool drift_control = true;
    bool standardize = true;
    NoiseConfig denoise;  // enabled → encoder sees a corrupted input
    std::size_t window = 10;
    std::size_t hard_buffer = 5;
    std::size_t replay_every = 50;
    DriftThresholds thresholds;
    std::size_t accuracy_window = 500;
};

/// Derives model and run settings for one of the named variants.
inline void apply_mode(Mode mode, ModelConfig& model, RunOptions& run) {
    model.use_memory = mode == Mode::Aoil || mode == Mode::AoilDae;
    run.drift_control = mode != Mode::OilBase;
    run.denoise.enabled = mode == Mode::AoilDae;
}

struct RunReport {
    std::size_t examples = 0;
    std::optional<Metrics> summary;
    ConfusionCounts counts;
    ScoreStore scores;
    std::vector<bool> correct;
    std::vector<std::size_t> predictions;
    std::vector<LossBreakdown> losses;
    std::vector<double> windowed_accuracy;
    std::vector<DriftEvent> events;
    std::optional<StageSummary> stages;
    double seconds = 0.0;

    [[nodiscard]] double accuracy() const { return summary ? summary->accuracy : 0.0; }
};

/// Encoder state around one drift reaction, for auditing restore semantics.
struct DriftAudit {
    std::size_t index;
    const EncoderParams& before;
    const EncoderParams& after;
    const SharedSnapshot& snapshot;
};

namespace detail {
class AccuracyTracker {
  public:
    explicit AccuracyTracker(std::size_t w) : width_(std::max<std::size_t>(w, 1)) {}
    double push(bool hit) {
        bits_.push_back(hit);
        hits_ += hit ? 1 : 0;
        if (bits_.size() > width_) {
            hits_ -= bits_[bits_.size() - width_ - 1] ? 1 : 0;
        }
        const std::size_t n = std::min(bits_.size(), width_);
        return static_cast<double>(hits_) / static_cast<double>(n);
    }

  private:
    std::size_t width_;
    std::vector<bool> bits_;
    std::size_t hits_ = 0;
};

inline void finish(RunReport& r, std::chrono::steady_clock::time_point start) {
    r.examples = r.correct.size();
    if (r.examples > 0) r.summary = metrics(r.counts, r.scores);
    if (r.examples >= 5) r.stages = stage_deltas(r.correct);
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}
}  // namespace detail

/// Test-then-train over one pass of the source. Per example: predict with the
/// current model; train (on a corrupted input in denoising mode); push the
/// total loss into the window; offer to the hard buffer; run the drift check
/// and react; replay the hard buffer every `replay_every` examples.
inline RunReport prequential_run(ModelState& model, DriftController& controller,
                                 ExampleSource& stream, const RunOptions& opt,
                                 const std::function<void(const DriftAudit&)>& audit = {}) {
    const auto start = std::chrono::steady_clock::now();
    opt.denoise.validate();
    RunReport r;
    r.counts = ConfusionCounts(model.config().classes);
    SlidingLossWindow window(opt.window);
    HardBuffer buffer(opt.hard_buffer);
    OnlineStandardizer scaler;
    detail::AccuracyTracker tracker(opt.accuracy_window);
    std::size_t seen = 0;

    while (auto raw = stream.next()) {
        if (raw->x.size() != model.config().input_dim) {
            throw DimensionError("example " + std::to_string(raw->index) + " has " +
                                 std::to_string(raw->x.size()) + " features, model expects " +
                                 std::to_string(model.config().input_dim));
        }
        const Vector x = opt.standardize ? scaler.standardize(raw->x) : raw->x;
        const std::size_t y = raw->y;

        FullTrace trace = forward(x, y, model);
        const std::size_t predicted = predicted_class(trace);
        const bool hit = predicted == y;
        r.correct.push_back(hit);
        r.predictions.push_back(predicted);
        r.counts.add(y, predicted);
        r.scores.emplace_back(trace.fusion.prediction.size() > 1 ? trace.fusion.prediction[1] : 0.0,
                              y);
        r.windowed_accuracy.push_back(tracker.push(hit));

        LossBreakdown loss;
        if (opt.denoise.enabled) {
            const Vector noisy = corrupt(x, opt.denoise, model.rng());
            loss = train_step(noisy, y, model, x);
        } else {
            loss = trace.loss;
            model.apply(backward(trace, model));
        }
        r.losses.push_back(loss);

        if (opt.drift_control) {
            window.push(loss.total);
            buffer.offer(x, y, loss.total);
            const auto event = controller.check(window, model, seen);
            if (event == DriftEventKind::DriftDetected) {
                if (audit) {
                    const EncoderParams before = model.params().encoder;
                    on_drift(model, controller.snapshot());
                    audit({seen, before, model.params().encoder, *controller.snapshot()});
                } else {
                    on_drift(model, controller.snapshot());
                }
                buffer.clear();
            }
            if (opt.replay_every > 0 && (seen + 1) % opt.replay_every == 0) {
                replay(buffer, model, opt.denoise);
            }
        }
        ++seen;
    }
    r.events = controller.events();
    detail::finish(r, start);
    return r;
}

/// Multinomial logistic regression trained by plain online gradient descent
/// under the same test-then-train protocol. Weights start at zero.
inline RunReport ogd_baseline(ExampleSource& stream, double lr, std::size_t classes = 2,
                              bool standardize = true, std::size_t accuracy_window = 500) {
    const auto start = std::chrono::steady_clock::now();
    RunReport r;
    r.counts = ConfusionCounts(classes);
    OnlineStandardizer scaler;
    detail::AccuracyTracker tracker(accuracy_window);
    const std::size_t dim = stream.feature_dim();
    Matrix w(classes, dim);
    Vector b(classes, 0.0);

    while (auto raw = stream.next()) {
        if (raw->x.size() != dim) throw DimensionError("ogd: feature dimension changed");
        const Vector x = standardize ? scaler.standardize(raw->x) : raw->x;
        Vector logits = matvec(w, x);
        axpy(logits, 1.0, b);
        const Vector p = softmax(logits);
        const std::size_t predicted =
            static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
        const bool hit = predicted == raw->y;
        r.correct.push_back(hit);
        r.predictions.push_back(predicted);
        r.counts.add(raw->y, predicted);
        r.scores.emplace_back(p.size() > 1 ? p[1] : 0.0, raw->y);
        r.windowed_accuracy.push_back(tracker.push(hit));

        const Vector y = one_hot(raw->y, classes);
        LossBreakdown loss;
        loss.prediction = cross_entropy(y, p);
        loss.total = loss.prediction;
        r.losses.push_back(loss);

        Vector g(classes);
        for (std::size_t k = 0; k < classes; ++k) g[k] = p[k] - y[k];
        for (std::size_t k = 0; k < classes; ++k) {
            auto row = w.row(k);
            for (std::size_t d = 0; d < dim; ++d) row[d] -= lr * g[k] * x[d];
            b[k] -= lr * g[k];
        }
    }
    detail::finish(r, start);
    return r;
}

// ---------------------------------------------------------------------------
// report files

/// Writes summary.txt (key=value), trace.csv and drift_events.csv. Nothing
/// time-dependent is written, so identical runs give identical files.
inline void write_report(const RunReport& r, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    auto open = [&](const char* name) {
        std::ofstream os(dir / name);
        if (!os) throw std::runtime_error("cannot write " + (dir / name).string());
        os.precision(17);
        return os;
    };
    {
        auto os = open("summary.txt");
        os << "examples=" << r.examples << '\n';
        if (r.summary) {
            os << "accuracy=" << r.summary->accuracy << '\n';
            os << "precision=" << r.summary->precision << '\n';
            os << "recall=" << r.summary->recall << '\n';
            os << "f1=" << r.summary->f1 << '\n';
            os << "auc=" << r.summary->auc << '\n';
        }
        std::size_t stable = 0, drifts = 0;
        for (const auto& e : r.events) {
            (e.kind == DriftEventKind::StableFound ? stable : drifts) += 1;
        }
        os << "stable_events=" << stable << '\n';
        os << "drift_events=" << drifts << '\n';
        if (r.stages) {
            for (std::size_t k = 0; k < 5; ++k) {
                os << "stage" << k + 1 << "_accuracy=" << r.stages->accuracy[k] << '\n';
            }
            for (std::size_t k = 0; k < 4; ++k) {
                os << "stage_delta" << k + 1 << '=' << r.stages->delta[k] << '\n';
            }
        }
    }
    {
        auto os = open("trace.csv");
        os << "index,label,predicted,correct,score,windowed_accuracy,prediction_loss,"
              "reconstruction_loss,entropy,total_loss\n";
        for (std::size_t i = 0; i < r.correct.size(); ++i) {
            const auto& l = r.losses[i];
            os << i << ',' << r.scores[i].second << ',' << r.predictions[i] << ','
               << (r.correct[i] ? 1 : 0) << ',' << r.scores[i].first << ','
               << r.windowed_accuracy[i] << ',' << l.prediction << ',' << l.reconstruction << ','
               << l.entropy << ',' << l.total << '\n';
        }
    }
    {
        auto os = open("drift_events.csv");
        os << "example_index,event,window_mean,window_std\n";
        for (const auto& e : r.events) {
            os << e.index << ',' << to_string(e.kind) << ',' << e.window_mean << ','
               << e.window_std << '\n';
        }
    }
}

}  // namespace aoil
