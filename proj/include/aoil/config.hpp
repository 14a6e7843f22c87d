// SPDX-License-Identifier: Apache-2.0
/**
 * @file   config.hpp
 * @brief  Run configuration: flat `key = value` files, validation, and an
 *         echo that reproduces a run exactly.
 */
#pragma once

#include <cstdint>
#include <functional>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "aoil/eval.hpp"

namespace aoil {

class ConfigError : public std::invalid_argument {
  public:
    explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

using KeyValues = std::map<std::string, std::string>;

/// Parses `key = value` lines. `#` starts a comment; blank lines are skipped.
/// Repeated keys are rejected.
inline KeyValues parse_key_values(std::istream& in, const std::string& origin = "config") {
    KeyValues kv;
    std::string line;
    std::size_t lineno = 0;
    auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        if (b == std::string::npos) return std::string{};
        const auto e = s.find_last_not_of(" \t\r");
        return s.substr(b, e - b + 1);
    };
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        const std::string where = origin + ":" + std::to_string(lineno);
        if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError(where + ": empty key");
        if (!kv.emplace(key, value).second) throw ConfigError(where + ": duplicate key '" + key + "'");
    }
    return kv;
}

enum class StreamKind { Sea, Hyperplane, File };

inline const char* to_string(StreamKind k) {
    switch (k) {
        case StreamKind::Sea: return "sea";
        case StreamKind::Hyperplane: return "hyperplane";
        case StreamKind::File: return "file";
    }
    return "?";
}

struct RunConfig {
    StreamKind stream = StreamKind::Sea;
    SeaConfig sea;
    HyperplaneConfig hyperplane;
    std::string file_path;
    DelimitedOptions file;

    ModelConfig model;
    Mode mode = Mode::Aoil;
    RunOptions run;
    double ogd_learning_rate = 0.01;

    /// Additive Gaussian noise on a fraction of stream examples.
    double noise_fraction = 0.0;
    double noise_variance = 0.1;

    std::uint64_t seed = 1;
    std::string output;
    std::string load_model;
    bool save_model = false;

    /// Every accepted key, in echo order.
    static const std::vector<std::string>& keys() {
        static const std::vector<std::string> k = {
            "stream", "seed", "mode", "output",
            "sea_thresholds", "sea_segment_length", "sea_noise",
            "hyperplane_d", "hyperplane_drift", "hyperplane_n",
            "file_path", "file_label_column", "file_delimiter", "file_header",
            "file_integer_labels",
            "hidden_dim", "attention_dim", "memory_slots", "lambda", "shrink_epsilon",
            "learning_rate", "memory_init_stddev",
            "window", "hard_buffer", "delta_u", "delta_sigma", "replay_every",
            "standardize", "dae_variance", "accuracy_window", "ogd_learning_rate",
            "noise_fraction", "noise_variance",
            "load_model", "save_model"};
        return k;
    }

    void set(const std::string& key, const std::string& value);
    [[nodiscard]] std::string get(const std::string& key) const;

    /// Applies every pair; unknown keys are an error.
    void merge(const KeyValues& kv) {
        for (const auto& [k, v] : kv) set(k, v);
    }

    /// Full `key = value` listing; feeding it back through parse_key_values
    /// and merge() reproduces this config.
    void echo(std::ostream& os) const {
        for (const auto& k : keys()) os << k << " = " << get(k) << '\n';
    }

    void validate() const {
        switch (stream) {
            case StreamKind::Sea: sea.validate(); break;
            case StreamKind::Hyperplane:
                hyperplane.validate();
                if (hyperplane.n == 0) throw ConfigError("hyperplane_n must be >= 1");
                break;
            case StreamKind::File:
                if (file_path.empty()) throw ConfigError("stream = file needs file_path");
                break;
        }
        if (mode != Mode::Ogd) model.validate();
        if (run.window < 2) throw ConfigError("window must be >= 2");
        if (run.hard_buffer == 0) throw ConfigError("hard_buffer must be >= 1");
        if (run.accuracy_window == 0) throw ConfigError("accuracy_window must be >= 1");
        if (!(run.thresholds.mean > 0.0) || !(run.thresholds.stddev > 0.0)) {
            throw ConfigError("delta_u and delta_sigma must be > 0");
        }
        run.denoise.validate();
        if (!(ogd_learning_rate >= 0.0)) throw ConfigError("ogd_learning_rate must be >= 0");
        if (noise_fraction < 0.0 || noise_fraction > 1.0) {
            throw ConfigError("noise_fraction outside [0,1]");
        }
        if (noise_variance < 0.0) throw ConfigError("noise_variance must be >= 0");
        if (mode == Mode::Ogd && !load_model.empty()) {
            throw ConfigError("mode ogd cannot load a model checkpoint");
        }
    }
};

namespace detail {
inline double to_real(const std::string& key, const std::string& v) {
    std::size_t used = 0;
    double out = 0.0;
    try {
        out = std::stod(v, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (v.empty() || used != v.size() || !std::isfinite(out)) {
        throw ConfigError(key + ": '" + v + "' is not a number");
    }
    return out;
}

inline std::uint64_t to_count(const std::string& key, const std::string& v) {
    std::size_t used = 0;
    unsigned long long out = 0;
    try {
        out = std::stoull(v, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (v.empty() || used != v.size() || v.front() == '-') {
        throw ConfigError(key + ": '" + v + "' is not a non-negative integer");
    }
    return out;
}

inline long to_integer(const std::string& key, const std::string& v) {
    std::size_t used = 0;
    long out = 0;
    try {
        out = std::stol(v, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (v.empty() || used != v.size()) throw ConfigError(key + ": '" + v + "' is not an integer");
    return out;
}

inline bool to_bool(const std::string& key, const std::string& v) {
    if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
    if (v == "0" || v == "false" || v == "no" || v == "off") return false;
    throw ConfigError(key + ": '" + v + "' is not a boolean");
}

inline std::vector<double> to_reals(const std::string& key, const std::string& v) {
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto b = item.find_first_not_of(" \t");
        const auto e = item.find_last_not_of(" \t");
        if (b == std::string::npos) throw ConfigError(key + ": empty list element");
        out.push_back(to_real(key, item.substr(b, e - b + 1)));
    }
    return out;
}

inline std::string real_text(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}
}  // namespace detail

inline void RunConfig::set(const std::string& key, const std::string& v) {
    using namespace detail;
    if (key == "stream") {
        if (v == "sea") stream = StreamKind::Sea;
        else if (v == "hyperplane") stream = StreamKind::Hyperplane;
        else if (v == "file") stream = StreamKind::File;
        else throw ConfigError("stream: unknown kind '" + v + "' (sea, hyperplane, file)");
    } else if (key == "seed") {
        seed = to_count(key, v);
    } else if (key == "mode") {
        try {
            mode = parse_mode(v);
        } catch (const std::invalid_argument&) {
            throw ConfigError("mode: '" + v + "' is not one of aoil, aoil-dae, oil-base, "
                              "aoil-no-memory, ogd");
        }
    } else if (key == "output") {
        output = v;
    } else if (key == "sea_thresholds") {
        sea.thresholds = v.empty() ? std::vector<double>{} : to_reals(key, v);
    } else if (key == "sea_segment_length") {
        sea.segment_length = to_count(key, v);
    } else if (key == "sea_noise") {
        sea.noise = to_real(key, v);
    } else if (key == "hyperplane_d") {
        hyperplane.d = to_count(key, v);
    } else if (key == "hyperplane_drift") {
        hyperplane.drift_magnitude = to_real(key, v);
    } else if (key == "hyperplane_n") {
        hyperplane.n = to_count(key, v);
    } else if (key == "file_path") {
        file_path = v;
    } else if (key == "file_label_column") {
        file.label_column = to_integer(key, v);
    } else if (key == "file_delimiter") {
        if (v == "tab" || v == "\\t") file.delimiter = '\t';
        else if (v.size() == 1) file.delimiter = v[0];
        else throw ConfigError("file_delimiter: expected one character or 'tab'");
    } else if (key == "file_header") {
        if (v == "auto") file.header = HeaderMode::Auto;
        else if (v == "present") file.header = HeaderMode::Present;
        else if (v == "absent") file.header = HeaderMode::Absent;
        else throw ConfigError("file_header: expected auto, present or absent");
    } else if (key == "file_integer_labels") {
        file.integer_labels = to_bool(key, v);
    } else if (key == "hidden_dim") {
        model.hidden_dim = to_count(key, v);
    } else if (key == "attention_dim") {
        model.attention_dim = to_count(key, v);
    } else if (key == "memory_slots") {
        model.memory_slots = to_count(key, v);
    } else if (key == "lambda") {
        model.lambda = to_real(key, v);
    } else if (key == "shrink_epsilon") {
        model.shrink_epsilon = to_real(key, v);
    } else if (key == "learning_rate") {
        model.learning_rate = to_real(key, v);
    } else if (key == "memory_init_stddev") {
        model.memory_init_stddev = to_real(key, v);
    } else if (key == "window") {
        run.window = to_count(key, v);
    } else if (key == "hard_buffer") {
        run.hard_buffer = to_count(key, v);
    } else if (key == "delta_u") {
        run.thresholds.mean = to_real(key, v);
    } else if (key == "delta_sigma") {
        run.thresholds.stddev = to_real(key, v);
    } else if (key == "replay_every") {
        run.replay_every = to_count(key, v);
    } else if (key == "standardize") {
        run.standardize = to_bool(key, v);
    } else if (key == "dae_variance") {
        run.denoise.corruption_variance = to_real(key, v);
    } else if (key == "accuracy_window") {
        run.accuracy_window = to_count(key, v);
    } else if (key == "ogd_learning_rate") {
        ogd_learning_rate = to_real(key, v);
    } else if (key == "noise_fraction") {
        noise_fraction = to_real(key, v);
    } else if (key == "noise_variance") {
        noise_variance = to_real(key, v);
    } else if (key == "load_model") {
        load_model = v;
    } else if (key == "save_model") {
        save_model = to_bool(key, v);
    } else {
        throw ConfigError("unknown key '" + key + "'");
    }
}

inline std::string RunConfig::get(const std::string& key) const {
    using detail::real_text;
    if (key == "stream") return to_string(stream);
    if (key == "seed") return std::to_string(seed);
    if (key == "mode") return to_string(mode);
    if (key == "output") return output;
    if (key == "sea_thresholds") {
        std::string s;
        for (std::size_t i = 0; i < sea.thresholds.size(); ++i) {
            if (i > 0) s += ',';
            s += real_text(sea.thresholds[i]);
        }
        return s;
    }
    if (key == "sea_segment_length") return std::to_string(sea.segment_length);
    if (key == "sea_noise") return real_text(sea.noise);
    if (key == "hyperplane_d") return std::to_string(hyperplane.d);
    if (key == "hyperplane_drift") return real_text(hyperplane.drift_magnitude);
    if (key == "hyperplane_n") return std::to_string(hyperplane.n);
    if (key == "file_path") return file_path;
    if (key == "file_label_column") return std::to_string(file.label_column);
    if (key == "file_delimiter") return file.delimiter == '\t' ? "tab" : std::string(1, file.delimiter);
    if (key == "file_header") {
        switch (file.header) {
            case HeaderMode::Auto: return "auto";
            case HeaderMode::Present: return "present";
            case HeaderMode::Absent: return "absent";
        }
    }
    if (key == "file_integer_labels") return file.integer_labels ? "true" : "false";
    if (key == "hidden_dim") return std::to_string(model.hidden_dim);
    if (key == "attention_dim") return std::to_string(model.attention_dim);
    if (key == "memory_slots") return std::to_string(model.memory_slots);
    if (key == "lambda") return real_text(model.lambda);
    if (key == "shrink_epsilon") return real_text(model.shrink_epsilon);
    if (key == "learning_rate") return real_text(model.learning_rate);
    if (key == "memory_init_stddev") return real_text(model.memory_init_stddev);
    if (key == "window") return std::to_string(run.window);
    if (key == "hard_buffer") return std::to_string(run.hard_buffer);
    if (key == "delta_u") return real_text(run.thresholds.mean);
    if (key == "delta_sigma") return real_text(run.thresholds.stddev);
    if (key == "replay_every") return std::to_string(run.replay_every);
    if (key == "standardize") return run.standardize ? "true" : "false";
    if (key == "dae_variance") return real_text(run.denoise.corruption_variance);
    if (key == "accuracy_window") return std::to_string(run.accuracy_window);
    if (key == "ogd_learning_rate") return real_text(ogd_learning_rate);
    if (key == "noise_fraction") return real_text(noise_fraction);
    if (key == "noise_variance") return real_text(noise_variance);
    if (key == "load_model") return load_model;
    if (key == "save_model") return save_model ? "true" : "false";
    throw ConfigError("unknown key '" + key + "'");
}

}  // namespace aoil
