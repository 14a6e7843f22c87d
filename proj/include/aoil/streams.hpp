// SPDX-License-Identifier: Apache-2.0
/**
 * @file   streams.hpp
 * @brief  Example sources: SEA and rotating-hyperplane generators, delimited
 *         file ingestion, additive noise injection, and online z-scoring.
 */
#pragma once

#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "aoil/linalg.hpp"

namespace aoil {

struct StreamExample {
    Vector x;
    std::size_t y = 0;
    std::size_t index = 0;

    bool operator==(const StreamExample&) const = default;
};

/// Raised for malformed input data; carries the 1-based row number.
class DataError : public std::runtime_error {
  public:
    DataError(const std::string& what, std::size_t row)
        : std::runtime_error(what + " (row " + std::to_string(row) + ")"), row_(row) {}
    [[nodiscard]] std::size_t row() const noexcept { return row_; }

  private:
    std::size_t row_;
};

/// Pull-based sequential source.
class ExampleSource {
  public:
    virtual ~ExampleSource() = default;
    virtual std::optional<StreamExample> next() = 0;
    [[nodiscard]] virtual std::size_t feature_dim() const = 0;
    [[nodiscard]] virtual std::size_t class_count() const { return 2; }
};

inline std::vector<StreamExample> materialize(ExampleSource& src) {
    std::vector<StreamExample> out;
    while (auto e = src.next()) out.push_back(std::move(*e));
    return out;
}

/// Replays an in-memory vector.
class VectorSource final : public ExampleSource {
  public:
    VectorSource(std::vector<StreamExample> examples, std::size_t dim, std::size_t classes = 2)
        : examples_(std::move(examples)), dim_(dim), classes_(classes) {}

    std::optional<StreamExample> next() override {
        if (pos_ >= examples_.size()) return std::nullopt;
        return examples_[pos_++];
    }
    [[nodiscard]] std::size_t feature_dim() const override { return dim_; }
    [[nodiscard]] std::size_t class_count() const override { return classes_; }

  private:
    std::vector<StreamExample> examples_;
    std::size_t dim_;
    std::size_t classes_;
    std::size_t pos_ = 0;
};

// ---------------------------------------------------------------------------
// SEA concepts

struct SeaConfig {
    std::vector<double> thresholds{4.0, 7.0, 4.0, 7.0};
    std::size_t segment_length = 12500;
    double noise = 0.0;  // label flip probability
    std::uint64_t seed = 1;

    void validate() const {
        if (thresholds.empty()) throw std::invalid_argument("sea: threshold list is empty");
        if (segment_length == 0) throw std::invalid_argument("sea: segment_length must be >= 1");
        if (noise < 0.0 || noise > 1.0) throw std::invalid_argument("sea: noise outside [0,1]");
    }
    [[nodiscard]] std::size_t length() const { return thresholds.size() * segment_length; }
};

/// Label for the SEA concept with threshold q: 1 iff f1 + f2 < q.
inline std::size_t sea_label(double f1, double f2, double q) { return f1 + f2 < q ? 1 : 0; }

class SeaGenerator final : public ExampleSource {
  public:
    explicit SeaGenerator(SeaConfig cfg) : cfg_(std::move(cfg)), rng_(cfg_.seed) { cfg_.validate(); }

    std::optional<StreamExample> next() override {
        if (index_ >= cfg_.length()) return std::nullopt;
        std::uniform_real_distribution<double> feature(0.0, 10.0);
        StreamExample e;
        e.index = index_;
        e.x = {feature(rng_), feature(rng_), feature(rng_)};
        const double q = cfg_.thresholds[index_ / cfg_.segment_length];
        e.y = sea_label(e.x[0], e.x[1], q);
        if (cfg_.noise > 0.0 && std::bernoulli_distribution(cfg_.noise)(rng_)) e.y = 1 - e.y;
        ++index_;
        return e;
    }
    [[nodiscard]] std::size_t feature_dim() const override { return 3; }

  private:
    SeaConfig cfg_;
    Rng rng_;
    std::size_t index_ = 0;
};

// ---------------------------------------------------------------------------
// rotating hyperplane

struct HyperplaneConfig {
    std::size_t d = 10;
    double drift_magnitude = 0.001;
    std::size_t n = 50000;
    std::uint64_t seed = 1;

    void validate() const {
        if (d < 2) throw std::invalid_argument("hyperplane: d must be >= 2");
        if (drift_magnitude < 0.0) throw std::invalid_argument("hyperplane: drift_magnitude < 0");
    }
};

/// Features uniform on [0,1]^d; label 1 iff Σ w_j x_j > Σ w_j / 2. After
/// every example each weight moves by N(0, drift_magnitude²).
class HyperplaneGenerator final : public ExampleSource {
  public:
    explicit HyperplaneGenerator(HyperplaneConfig cfg) : cfg_(cfg), rng_(cfg.seed) {
        cfg_.validate();
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        weights_.resize(cfg_.d);
        for (auto& w : weights_) w = unit(rng_);
    }

    static std::size_t label_for(std::span<const double> w, std::span<const double> x) {
        double threshold = 0.0;
        for (double v : w) threshold += v;
        return dot(w, x) > threshold / 2.0 ? 1 : 0;
    }

    std::optional<StreamExample> next() override {
        if (index_ >= cfg_.n) return std::nullopt;
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        StreamExample e;
        e.index = index_++;
        e.x.resize(cfg_.d);
        for (auto& v : e.x) v = unit(rng_);
        e.y = label_for(weights_, e.x);
        if (cfg_.drift_magnitude > 0.0) {
            std::normal_distribution<double> step(0.0, cfg_.drift_magnitude);
            for (auto& w : weights_) w += step(rng_);
        }
        return e;
    }
    [[nodiscard]] std::size_t feature_dim() const override { return cfg_.d; }
    [[nodiscard]] const Vector& weights() const { return weights_; }

  private:
    HyperplaneConfig cfg_;
    Rng rng_;
    Vector weights_;
    std::size_t index_ = 0;
};

// ---------------------------------------------------------------------------
// delimited files

enum class HeaderMode { Auto, Present, Absent };

struct DelimitedOptions {
    /// Negative values count from the end (-1 = last column).
    long label_column = -1;
    char delimiter = ',';
    HeaderMode header = HeaderMode::Auto;
    /// Read labels as class indices 0, 1, ... instead of mapping by first
    /// appearance.
    bool integer_labels = false;
};

namespace detail {
inline std::vector<std::string> split_row(const std::string& line, char delim) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, delim)) {
        const auto b = field.find_first_not_of(" \t\r");
        const auto e = field.find_last_not_of(" \t\r");
        out.push_back(b == std::string::npos ? std::string{} : field.substr(b, e - b + 1));
    }
    if (!line.empty() && line.back() == delim) out.emplace_back();
    return out;
}

inline std::optional<double> parse_number(const std::string& s) {
    if (s.empty()) return std::nullopt;
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size() || !std::isfinite(v)) return std::nullopt;
        return v;
    } catch (const std::exception&) {
        return std::nullopt;
    }
}
}  // namespace detail

/// Streams rows of a delimited text file in file order. Labels are mapped to
/// 0-based indices in order of first appearance.
class DelimitedSource final : public ExampleSource {
  public:
    DelimitedSource(const std::string& path, DelimitedOptions opt)
        : in_(path), opt_(opt), path_(path) {
        if (!in_) throw DataError("cannot open '" + path + "'", 0);
        prime();
    }

    std::optional<StreamExample> next() override {
        if (pending_) {
            auto e = std::move(*pending_);
            pending_.reset();
            return e;
        }
        std::string line;
        while (std::getline(in_, line)) {
            ++row_;
            if (blank(line)) continue;
            return parse(line);
        }
        return std::nullopt;
    }

    [[nodiscard]] std::size_t feature_dim() const override { return arity_ - 1; }
    /// Classes seen so far; grows as new labels appear.
    [[nodiscard]] std::size_t class_count() const override {
        return std::max<std::size_t>(classes_seen_, 2);
    }
    [[nodiscard]] const std::vector<std::string>& label_names() const { return names_; }

  private:
    static bool blank(const std::string& line) {
        return line.find_first_not_of(" \t\r") == std::string::npos;
    }

    std::size_t label_index(std::size_t arity) const {
        const long col = opt_.label_column < 0 ? static_cast<long>(arity) + opt_.label_column
                                               : opt_.label_column;
        if (col < 0 || col >= static_cast<long>(arity)) {
            throw DataError("label column " + std::to_string(opt_.label_column) +
                                " outside row of " + std::to_string(arity) + " fields",
                            row_);
        }
        return static_cast<std::size_t>(col);
    }

    void prime() {
        std::string line;
        while (std::getline(in_, line)) {
            ++row_;
            if (!blank(line)) break;
            line.clear();
        }
        if (blank(line)) throw DataError("'" + path_ + "' has no data rows", row_);
        const auto fields = detail::split_row(line, opt_.delimiter);
        arity_ = fields.size();
        if (arity_ < 2) throw DataError("need at least one feature and a label", row_);
        const std::size_t lc = label_index(arity_);
        bool numeric = true;
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i != lc && !detail::parse_number(fields[i])) numeric = false;
        }
        const bool header = opt_.header == HeaderMode::Present ||
                            (opt_.header == HeaderMode::Auto && !numeric);
        if (!header) pending_ = parse(line);
    }

    StreamExample parse(const std::string& line) {
        const auto fields = detail::split_row(line, opt_.delimiter);
        if (fields.size() != arity_) {
            throw DataError("ragged row: " + std::to_string(fields.size()) + " fields, expected " +
                                std::to_string(arity_),
                            row_);
        }
        const std::size_t lc = label_index(arity_);
        StreamExample e;
        e.index = count_++;
        e.x.reserve(arity_ - 1);
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i == lc) continue;
            const auto v = detail::parse_number(fields[i]);
            if (!v) throw DataError("non-numeric feature '" + fields[i] + "'", row_);
            e.x.push_back(*v);
        }
        if (opt_.integer_labels) {
            e.y = integer_label(fields[lc]);
            if (e.y + 1 > classes_seen_) classes_seen_ = e.y + 1;
            return e;
        }
        const auto [it, fresh] = labels_.try_emplace(fields[lc], labels_.size());
        if (fresh) names_.push_back(fields[lc]);
        e.y = it->second;
        classes_seen_ = labels_.size();
        return e;
    }

    std::size_t integer_label(const std::string& field) const {
        std::size_t used = 0;
        unsigned long v = 0;
        try {
            v = std::stoul(field, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (field.empty() || used != field.size() || field.front() == '-') {
            throw DataError("label '" + field + "' is not a class index", row_);
        }
        return static_cast<std::size_t>(v);
    }

    std::ifstream in_;
    DelimitedOptions opt_;
    std::string path_;
    std::size_t arity_ = 0;
    std::size_t row_ = 0;
    std::size_t count_ = 0;
    std::size_t classes_seen_ = 0;
    std::optional<StreamExample> pending_;
    std::unordered_map<std::string, std::size_t> labels_;
    std::vector<std::string> names_;
};

inline std::vector<StreamExample> load_delimited(const std::string& path,
                                                 DelimitedOptions opt = {}) {
    DelimitedSource src(path, opt);
    return materialize(src);
}

/// Writes examples as `f1,...,fd,label` rows with 17 significant digits.
inline void write_delimited(std::ostream& os, std::span<const StreamExample> examples,
                            char delim = ',') {
    os.precision(17);
    for (const auto& e : examples) {
        for (double v : e.x) os << v << delim;
        os << e.y << '\n';
    }
}

// ---------------------------------------------------------------------------
// noise injection

/// Each example is selected with probability `fraction`; selected examples
/// get additive N(0, variance) noise on every feature. Labels are untouched.
class NoiseInjector final : public ExampleSource {
  public:
    NoiseInjector(ExampleSource& inner, double fraction, double variance, std::uint64_t seed)
        : inner_(inner), fraction_(fraction), variance_(variance), rng_(seed) {
        if (fraction < 0.0 || fraction > 1.0) {
            throw std::invalid_argument("noise fraction outside [0,1]");
        }
        if (variance < 0.0) throw std::invalid_argument("noise variance < 0");
    }

    std::optional<StreamExample> next() override {
        auto e = inner_.next();
        if (!e) return e;
        if (fraction_ > 0.0 && std::bernoulli_distribution(fraction_)(rng_)) {
            ++perturbed_;
            if (variance_ > 0.0) {
                std::normal_distribution<double> g(0.0, std::sqrt(variance_));
                for (auto& v : e->x) v += g(rng_);
            }
        }
        return e;
    }
    [[nodiscard]] std::size_t feature_dim() const override { return inner_.feature_dim(); }
    [[nodiscard]] std::size_t class_count() const override { return inner_.class_count(); }
    [[nodiscard]] std::size_t perturbed() const noexcept { return perturbed_; }

  private:
    ExampleSource& inner_;
    double fraction_;
    double variance_;
    Rng rng_;
    std::size_t perturbed_ = 0;
};

inline std::vector<StreamExample> inject_noise(std::span<const StreamExample> stream,
                                               double fraction, double variance,
                                               std::uint64_t seed) {
    VectorSource src({stream.begin(), stream.end()},
                     stream.empty() ? 0 : stream.front().x.size());
    NoiseInjector noisy(src, fraction, variance, seed);
    return materialize(noisy);
}

// ---------------------------------------------------------------------------
// online standardization

/// Per-feature Welford statistics. The current example is folded in before it
/// is transformed, so nothing after it is ever read and the very first
/// example maps to zero.
class OnlineStandardizer {
  public:
    static constexpr double kVarianceFloor = 1e-8;

    Vector standardize(std::span<const double> x) {
        if (count_ == 0) {
            mean_.assign(x.size(), 0.0);
            m2_.assign(x.size(), 0.0);
        }
        detail::require_same(x.size(), mean_.size(), "standardize");
        ++count_;
        const double n = static_cast<double>(count_);
        Vector out(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double delta = x[i] - mean_[i];
            mean_[i] += delta / n;
            m2_[i] += delta * (x[i] - mean_[i]);
            const double var = std::max(m2_[i] / n, kVarianceFloor);
            out[i] = (x[i] - mean_[i]) / std::sqrt(var);
        }
        return out;
    }

    [[nodiscard]] std::size_t count() const noexcept { return count_; }
    [[nodiscard]] const Vector& mean() const noexcept { return mean_; }

  private:
    std::size_t count_ = 0;
    Vector mean_;
    Vector m2_;
};

inline StreamExample standardize(StreamExample e, OnlineStandardizer& s) {
    e.x = s.standardize(e.x);
    return e;
}

}  // namespace aoil
