// SPDX-License-Identifier: Apache-2.0
// aoil: generate streams, run prequential experiments, check gradients.

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "aoil/commands.hpp"

namespace {

std::string flag_name(std::string key) {
    std::replace(key.begin(), key.end(), '_', '-');
    return "--" + key;
}

/// One string option per config key. Repeating a flag is an error rather
/// than last-wins, so `--mode aoil --mode ogd` is rejected.
void add_config_flags(CLI::App& cmd, std::map<std::string, std::string>& flags,
                      std::string& config_file) {
    cmd.add_option("-c,--config", config_file, "key = value configuration file")
        ->check(CLI::ExistingFile);
    for (const auto& key : aoil::RunConfig::keys()) {
        cmd.add_option(flag_name(key), flags[key], "overrides '" + key + "'")
            ->multi_option_policy(CLI::MultiOptionPolicy::Throw);
    }
}

aoil::RunConfig resolve(const CLI::App& cmd, const std::map<std::string, std::string>& flags,
                        const std::string& config_file) {
    aoil::RunConfig cfg;
    if (!config_file.empty()) {
        std::ifstream in(config_file);
        cfg.merge(aoil::parse_key_values(in, config_file));
    }
    for (const auto& [key, value] : flags) {
        if (cmd.count(flag_name(key)) > 0) cfg.set(key, value);
    }
    cfg.validate();
    return cfg;
}

void print_metrics(const aoil::RunReport& r) {
    std::printf("examples   %zu\n", r.examples);
    if (r.summary) {
        std::printf("accuracy   %.4f\nprecision  %.4f\nrecall     %.4f\nf1         %.4f\n"
                    "auc        %.4f\n",
                    r.summary->accuracy, r.summary->precision, r.summary->recall, r.summary->f1,
                    r.summary->auc);
    }
    std::size_t drifts = 0;
    for (const auto& e : r.events) drifts += e.kind == aoil::DriftEventKind::DriftDetected;
    std::printf("drifts     %zu\nseconds    %.2f\n", drifts, r.seconds);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Adaptive online incremental learning for evolving data streams"};
    app.require_subcommand(1);

    std::map<std::string, std::string> gen_flags, run_flags;
    std::string gen_config, run_config, gen_out;

    auto* gen = app.add_subcommand("generate", "write a synthetic stream to a delimited file");
    add_config_flags(*gen, gen_flags, gen_config);
    gen->add_option("-o,--out", gen_out, "destination file")->required();

    auto* run = app.add_subcommand("run", "prequential test-then-train run");
    add_config_flags(*run, run_flags, run_config);

    aoil::GradcheckOptions gc;
    std::size_t gc_seeds = 1;
    auto* grad = app.add_subcommand("gradcheck", "finite-difference check of every tensor");
    grad->add_option("--seed", gc.seed, "first seed");
    grad->add_option("--seeds", gc_seeds, "number of consecutive seeds")->check(CLI::PositiveNumber);
    grad->add_option("--input-dim", gc.model.input_dim)->check(CLI::PositiveNumber);
    grad->add_option("--hidden-dim", gc.model.hidden_dim)->check(CLI::PositiveNumber);
    grad->add_option("--attention-dim", gc.model.attention_dim)->check(CLI::PositiveNumber);
    grad->add_option("--memory-slots", gc.model.memory_slots)->check(CLI::PositiveNumber);
    grad->add_option("--classes", gc.model.classes)->check(CLI::Range(2, 1000));
    grad->add_option("--step", gc.step, "central-difference step");
    grad->add_option("--tolerance", gc.tolerance, "max relative error");
    grad->add_flag("--corrupt-gradient", gc.corrupt_gradient,
                   "perturb one analytic entry (should fail)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*gen) {
            const auto cfg = resolve(*gen, gen_flags, gen_config);
            const std::size_t n = aoil::cmd_generate(cfg, gen_out);
            std::printf("wrote %zu examples to %s\n", n, gen_out.c_str());
            return 0;
        }
        if (*run) {
            const auto cfg = resolve(*run, run_flags, run_config);
            const std::filesystem::path dir =
                cfg.output.empty() ? aoil::default_output_dir(cfg) : std::filesystem::path(cfg.output);
            const auto report = aoil::cmd_run(cfg, dir);
            print_metrics(report);
            std::printf("report     %s\n", dir.string().c_str());
            return 0;
        }
        if (*grad) {
            bool ok = true;
            for (std::size_t k = 0; k < gc_seeds; ++k) {
                aoil::GradcheckOptions opt = gc;
                opt.seed = gc.seed + k;
                const auto report = aoil::cmd_gradcheck(opt);
                if (gc_seeds > 1) std::printf("seed %llu\n", static_cast<unsigned long long>(opt.seed));
                for (const auto& t : report.tensors) {
                    std::printf("  %-14s %4zu  max_rel_err %.3e  %s\n", t.name.c_str(), t.entries,
                                t.max_relative_error,
                                t.max_relative_error < report.tolerance ? "ok" : "FAIL");
                }
                ok = ok && report.passed();
            }
            std::printf("gradcheck %s (tolerance %.0e)\n", ok ? "PASS" : "FAIL", gc.tolerance);
            return ok ? 0 : 1;
        }
    } catch (const aoil::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
