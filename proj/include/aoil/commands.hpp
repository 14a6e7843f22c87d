// SPDX-License-Identifier: Apache-2.0
/**
 * @file   commands.hpp
 * @brief  The generate / run / gradcheck commands behind the command-line
 *         tool, kept here so they can be driven from tests.
 */
#pragma once

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <memory>
#include <sstream>
#include <string>

#include "aoil/config.hpp"
#include "aoil/gradcheck.hpp"

namespace aoil {

namespace detail {
inline std::ofstream open_output(const std::filesystem::path& path) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write '" + path.string() + "'");
    return os;
}

/// Generator streams are seeded from the run seed; the model and the noise
/// injector get derived seeds so the three never share a sequence.
inline std::uint64_t model_seed(std::uint64_t seed) { return seed * 2 + 1; }
inline std::uint64_t noise_seed(std::uint64_t seed) { return seed ^ 0x5851f42d4c957f2dULL; }

inline std::unique_ptr<ExampleSource> make_generator(const RunConfig& cfg) {
    switch (cfg.stream) {
        case StreamKind::Sea: {
            SeaConfig s = cfg.sea;
            s.seed = cfg.seed;
            return std::make_unique<SeaGenerator>(s);
        }
        case StreamKind::Hyperplane: {
            HyperplaneConfig h = cfg.hyperplane;
            h.seed = cfg.seed;
            return std::make_unique<HyperplaneGenerator>(h);
        }
        case StreamKind::File: break;
    }
    throw ConfigError("stream = file cannot be generated");
}
}  // namespace detail

/// Writes the generated stream as `f1,...,fd,label` rows (no header) plus a
/// `<path>.config` sidecar with the full configuration.
inline std::size_t cmd_generate(const RunConfig& cfg, const std::filesystem::path& path) {
    cfg.validate();
    auto source = detail::make_generator(cfg);
    const auto examples = materialize(*source);
    {
        auto os = detail::open_output(path);
        write_delimited(os, examples);
        if (!os) throw std::runtime_error("write failed for '" + path.string() + "'");
    }
    auto side = detail::open_output(path.string() + ".config");
    RunConfig echo = cfg;
    echo.output.clear();
    echo.echo(side);
    return examples.size();
}

/// `runs/<mode>-YYYYmmdd-HHMMSS`, with a numeric suffix if that already exists.
inline std::filesystem::path default_output_dir(const RunConfig& cfg,
                                                const std::filesystem::path& root = "runs") {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    localtime_r(&now, &tm);
    std::ostringstream name;
    name << to_string(cfg.mode) << '-' << std::put_time(&tm, "%Y%m%d-%H%M%S");
    std::filesystem::path dir = root / name.str();
    for (int k = 1; std::filesystem::exists(dir); ++k) {
        dir = root / (name.str() + "-" + std::to_string(k));
    }
    return dir;
}

/// Builds the stream and model for `cfg`, runs one prequential pass and
/// writes summary.txt, trace.csv, drift_events.csv and config.txt into `dir`.
inline RunReport cmd_run(const RunConfig& cfg, const std::filesystem::path& dir) {
    cfg.validate();

    std::unique_ptr<ExampleSource> source;
    std::size_t classes = 2;
    if (cfg.stream == StreamKind::File) {
        // the class count has to be known before the model is built
        DelimitedSource file(cfg.file_path, cfg.file);
        auto rows = materialize(file);
        const std::size_t dim = file.feature_dim();
        classes = file.class_count();
        source = std::make_unique<VectorSource>(std::move(rows), dim, classes);
    } else {
        source = detail::make_generator(cfg);
    }

    std::unique_ptr<NoiseInjector> noisy;
    ExampleSource* stream = source.get();
    if (cfg.noise_fraction > 0.0) {
        noisy = std::make_unique<NoiseInjector>(*source, cfg.noise_fraction, cfg.noise_variance,
                                                detail::noise_seed(cfg.seed));
        stream = noisy.get();
    }

    RunReport report;
    std::optional<ModelState> model;
    if (cfg.mode == Mode::Ogd) {
        report = ogd_baseline(*stream, cfg.ogd_learning_rate, classes, cfg.run.standardize,
                              cfg.run.accuracy_window);
    } else {
        ModelConfig mc = cfg.model;
        RunOptions ro = cfg.run;
        apply_mode(cfg.mode, mc, ro);
        mc.input_dim = stream->feature_dim();
        mc.classes = classes;
        if (!cfg.load_model.empty()) {
            std::ifstream in(cfg.load_model);
            if (!in) throw std::runtime_error("cannot read '" + cfg.load_model + "'");
            model.emplace(ModelState::load(in));
            if (model->config().input_dim != mc.input_dim || model->config().classes < classes) {
                throw DimensionError("checkpoint shape does not match the stream");
            }
        } else {
            model.emplace(mc, detail::model_seed(cfg.seed));
        }
        DriftController controller(ro.thresholds);
        report = prequential_run(*model, controller, *stream, ro);
    }

    write_report(report, dir);
    {
        auto os = detail::open_output(dir / "config.txt");
        RunConfig echo = cfg;
        echo.output.clear();
        echo.echo(os);
    }
    if (cfg.save_model && model) {
        auto os = detail::open_output(dir / "model.ckpt");
        model->save(os);
    }
    return report;
}

/// Finite-difference check of every tensor; see gradcheck().
inline GradcheckReport cmd_gradcheck(const GradcheckOptions& opt) { return gradcheck(opt); }

}  // namespace aoil
