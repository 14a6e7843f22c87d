// SPDX-License-Identifier: Apache-2.0
// End-to-end acceptance checks. Prints one PASS/FAIL line per check and
// exits non-zero if any check fails.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "aoil/commands.hpp"

using namespace aoil;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) {
    return std::chrono::duration<double>(Clock::now() - t).count();
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

struct Outcome {
    bool pass = false;
    std::string detail;
};

int failures = 0;

void report(int id, const char* name, const Outcome& o) {
    std::printf("%02d %-34s %s  %s\n", id, name, o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
    failures += o.pass ? 0 : 1;
}

template <typename... Args>
std::string fmt(const char* f, Args... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

// ---------------------------------------------------------------------------
// streams and runs

constexpr std::size_t kShortSegment = 5000;

SeaConfig drifting_sea(std::uint64_t seed) {
    return {.thresholds = {4.0, 7.0}, .segment_length = kShortSegment, .noise = 0.0, .seed = seed};
}

SeaConfig long_sea(std::uint64_t seed) {
    return {.thresholds = {4.0, 7.0, 4.0, 7.0}, .segment_length = 12500, .noise = 0.0,
            .seed = seed};
}

struct RunResult {
    RunReport report;
    std::vector<bool> audit_ok;  // one entry per drift reaction
    std::size_t audit_failures = 0;
};

/// One prequential run; the model seed is derived from the stream seed the
/// same way the command-line tool does it.
RunResult run_mode(Mode mode, ExampleSource& stream, std::uint64_t seed) {
    ModelConfig mc;
    RunOptions ro;
    apply_mode(mode, mc, ro);
    mc.input_dim = stream.feature_dim();
    ModelState model(mc, detail::model_seed(seed));
    DriftController controller(ro.thresholds);
    RunResult out;
    out.report = prequential_run(model, controller, stream, ro, [&](const DriftAudit& a) {
        bool ok = a.after.skip_in == a.snapshot.skip_in;
        for (std::size_t l = 0; l < kSharedLayers; ++l) {
            ok = ok && a.after.layers[l] == a.snapshot.layers[l];
        }
        for (std::size_t l = kSharedLayers; l < kDepth; ++l) {
            ok = ok && a.after.layers[l].weight != a.before.layers[l].weight;
        }
        out.audit_ok.push_back(ok);
        out.audit_failures += ok ? 0 : 1;
    });
    return out;
}

RunResult run_sea(Mode mode, const SeaConfig& cfg, double noise_fraction = 0.0) {
    SeaGenerator sea(cfg);
    if (noise_fraction > 0.0) {
        NoiseInjector noisy(sea, noise_fraction, 0.1, detail::noise_seed(cfg.seed));
        return run_mode(mode, noisy, cfg.seed);
    }
    return run_mode(mode, sea, cfg.seed);
}

// ---------------------------------------------------------------------------
// checks

Outcome gradients_match() {
    const auto t0 = Clock::now();
    double worst = 0.0;
    std::string worst_name;
    std::size_t failed = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        GradcheckOptions opt;
        opt.seed = seed;
        const auto r = gradcheck(opt);
        if (r.tensors.size() != 31) ++failed;
        for (const auto& t : r.tensors) {
            if (t.max_relative_error > worst) {
                worst = t.max_relative_error;
                worst_name = t.name + " seed " + std::to_string(seed);
            }
        }
        failed += r.passed() ? 0 : 1;
    }
    const double secs = seconds_since(t0);
    return {failed == 0 && secs < 30.0,
            fmt("20 seeds x 31 tensors, failed seeds %zu, worst %.2e (%s), %.1fs", failed, worst,
                worst_name.c_str(), secs)};
}

Outcome simplex_vectors() {
    std::size_t passes = 0, violations = 0;
    double worst = 0.0;
    Rng rng(2024);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> scale(0.01, 100.0);
    auto check = [&](const Vector& v) {
        double s = 0.0;
        for (double x : v) {
            if (x < 0.0) ++violations;
            s += x;
        }
        worst = std::max(worst, std::abs(s - 1.0));
        if (std::abs(s - 1.0) > 1e-9) ++violations;
    };
    for (std::uint64_t m = 0; m < 100; ++m) {
        ModelConfig c;
        c.memory_init_stddev = m % 2 == 0 ? 5.0 : 0.0;
        ModelState model(c, 1000 + m);
        for (int i = 0; i < 100; ++i) {
            const double k = scale(rng);
            Vector x(3);
            for (auto& v : x) v = k * gauss(rng);
            const auto t = forward(x, static_cast<std::size_t>(i % 2), model);
            check(t.fusion.alignment);
            check(t.weights);
            check(t.shrunk);
            check(t.fusion.prediction);
            ++passes;
        }
    }
    return {violations == 0 && passes == 10000,
            fmt("%zu forward passes, violations %zu, max |sum-1| %.1e", passes, violations, worst)};
}

double pairwise_auc(const ScoreStore& s) {
    double good = 0.0, pairs = 0.0;
    for (const auto& [sp, yp] : s) {
        if (yp != 1) continue;
        for (const auto& [sn, yn] : s) {
            if (yn == 1) continue;
            pairs += 1.0;
            good += sp > sn ? 1.0 : (sp == sn ? 0.5 : 0.0);
        }
    }
    return good / pairs;
}

Outcome auc_oracle() {
    Rng rng(77);
    std::uniform_int_distribution<int> len(2, 200);
    std::uniform_int_distribution<int> levels(1, 5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = 0.0;
    std::size_t tie_heavy = 0;
    for (int k = 0; k < 500; ++k) {
        ScoreStore s;
        const int n = len(rng);
        const bool ties = k % 2 == 0;
        const int lv = levels(rng);
        for (int i = 0; i < n; ++i) {
            const double score = ties ? std::floor(u(rng) * lv) / lv : u(rng);
            s.emplace_back(score, u(rng) < 0.5 ? 1 : 0);
        }
        // both classes present
        s[0].second = 1;
        s[1].second = 0;
        tie_heavy += ties ? 1 : 0;
        worst = std::max(worst, std::abs(auc(s) - pairwise_auc(s)));
    }
    return {worst < 1e-12, fmt("500 stores (%zu tie-heavy), max |diff| %.1e", tie_heavy, worst)};
}

struct DriftStudy {
    std::vector<RunResult> runs;
    std::vector<double> seconds;
};

DriftStudy drift_runs() {
    DriftStudy d;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto t0 = Clock::now();
        d.runs.push_back(run_sea(Mode::Aoil, drifting_sea(seed)));
        d.seconds.push_back(seconds_since(t0));
    }
    return d;
}

Outcome drift_delay(const DriftStudy& d) {
    std::size_t detected = 0, quiet = 0, vacuous = 0;
    std::string delays;
    for (const auto& r : d.runs) {
        const auto& ev = r.report.events;
        std::optional<std::size_t> first_stable;
        std::size_t false_alarms = 0;
        std::optional<std::size_t> hit;
        for (const auto& e : ev) {
            if (e.kind == DriftEventKind::StableFound && e.index < kShortSegment && !first_stable) {
                first_stable = e.index;
            }
            if (e.kind != DriftEventKind::DriftDetected) continue;
            if (e.index < kShortSegment) ++false_alarms;
            if (e.index >= kShortSegment && e.index < kShortSegment + 500 && !hit) hit = e.index;
        }
        if (hit) ++detected;
        if (first_stable && false_alarms == 0) ++quiet;
        if (!first_stable) ++vacuous;
        delays += hit ? std::to_string(*hit - kShortSegment) : std::string("-");
        delays += ' ';
    }
    const double slowest = *std::max_element(d.seconds.begin(), d.seconds.end());
    const bool pass = detected >= 8 && quiet >= 8 && slowest < 180.0;
    return {pass, fmt("detected<=500 in %zu/10, stable-then-quiet in %zu/10 (no stable state in "
                      "segment 1: %zu), delays [%s], slowest %.1fs",
                      detected, quiet, vacuous, delays.c_str(), slowest)};
}

Outcome restore_exact(const DriftStudy& d) {
    std::size_t events = 0, bad = 0;
    for (const auto& r : d.runs) {
        events += r.audit_ok.size();
        bad += r.audit_failures;
    }
    return {events > 0 && bad == 0, fmt("%zu drift reactions audited, %zu mismatches", events, bad)};
}

struct LongStudy {
    std::vector<RunResult> aoil;
};

Outcome sea_accuracy(const LongStudy& s, double& ogd_acc) {
    SeaGenerator g(long_sea(1));
    const auto ogd = ogd_baseline(g, 0.01);
    ogd_acc = ogd.accuracy();
    const double a = s.aoil.front().report.accuracy();
    const bool pass = a >= 0.85 && a - ogd_acc >= 0.02;
    return {pass, fmt("aoil %.4f (need >= 0.85), ogd %.4f, margin %+.2f points (need >= +2)", a,
                      ogd_acc, 100.0 * (a - ogd_acc))};
}

Outcome ablation_order(const DriftStudy& d) {
    std::vector<double> full, no_memory, base;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        full.push_back(d.runs[seed - 1].report.accuracy());
        no_memory.push_back(run_sea(Mode::AoilNoMemory, drifting_sea(seed)).report.accuracy());
        base.push_back(run_sea(Mode::OilBase, drifting_sea(seed)).report.accuracy());
    }
    const double mf = median(full), mn = median(no_memory), mb = median(base);
    return {mf >= mn && mf >= mb,
            fmt("median accuracy aoil %.4f, aoil-no-memory %.4f, oil-base %.4f", mf, mn, mb)};
}

Outcome stage_growth(const LongStudy& s) {
    std::size_t growing = 0;
    std::string lines;
    for (const auto& r : s.aoil) {
        const auto& st = *r.report.stages;
        bool ok = true;
        for (double dlt : st.delta) ok = ok && dlt >= -0.01;
        growing += ok ? 1 : 0;
        lines += fmt("[%.3f %.3f %.3f %.3f %.3f]", st.accuracy[0], st.accuracy[1], st.accuracy[2],
                     st.accuracy[3], st.accuracy[4]);
    }
    return {growing >= 4, fmt("non-decreasing (1pt slack) in %zu/5: %s", growing, lines.c_str())};
}

Outcome noise_robustness(const LongStudy& s) {
    std::vector<double> drop_aoil, drop_dae;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const double clean = s.aoil[seed - 1].report.accuracy();
        const double noisy = run_sea(Mode::Aoil, long_sea(seed), 0.2).report.accuracy();
        const double dae_clean = run_sea(Mode::AoilDae, long_sea(seed)).report.accuracy();
        const double dae_noisy = run_sea(Mode::AoilDae, long_sea(seed), 0.2).report.accuracy();
        drop_aoil.push_back(clean - noisy);
        drop_dae.push_back(dae_clean - dae_noisy);
    }
    const double ma = median(drop_aoil), md = median(drop_dae);
    return {md <= ma + 0.01,
            fmt("median drop aoil-dae %+.2f points, aoil %+.2f points", 100 * md, 100 * ma)};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Outcome deterministic_runs() {
    const fs::path root = fs::temp_directory_path() / "aoil_acceptance_determinism";
    fs::remove_all(root);
    std::size_t compared = 0, differing = 0;
    for (Mode mode : {Mode::Aoil, Mode::AoilDae, Mode::OilBase, Mode::AoilNoMemory, Mode::Ogd}) {
        RunConfig cfg;
        cfg.mode = mode;
        cfg.seed = 31;
        cfg.sea.thresholds = {4.0, 7.0};
        cfg.sea.segment_length = 2000;
        cfg.noise_fraction = 0.2;
        const fs::path a = root / (std::string(to_string(mode)) + "_a");
        const fs::path b = root / (std::string(to_string(mode)) + "_b");
        cmd_run(cfg, a);
        cmd_run(cfg, b);
        for (const char* f : {"summary.txt", "trace.csv", "drift_events.csv", "config.txt"}) {
            ++compared;
            differing += slurp(a / f) == slurp(b / f) && !slurp(a / f).empty() ? 0 : 1;
        }
    }
    return {differing == 0, fmt("%zu report files over 5 modes, %zu differ", compared, differing)};
}

}  // namespace

int main() {
    const auto t0 = Clock::now();
    report(1, "gradients-match-finite-differences", gradients_match());
    report(2, "probability-vectors-on-simplex", simplex_vectors());
    report(3, "auc-equals-pairwise-oracle", auc_oracle());

    const DriftStudy drift = drift_runs();
    report(4, "drift-detection-delay", drift_delay(drift));
    report(5, "snapshot-restore-exact", restore_exact(drift));

    LongStudy long_runs;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        long_runs.aoil.push_back(run_sea(Mode::Aoil, long_sea(seed)));
    }
    double ogd_acc = 0.0;
    report(6, "sea-accuracy-vs-ogd", sea_accuracy(long_runs, ogd_acc));
    report(7, "memory-and-drift-ablation-order", ablation_order(drift));
    report(8, "stage-accuracy-growth", stage_growth(long_runs));
    report(9, "denoising-noise-robustness", noise_robustness(long_runs));
    report(10, "bitwise-deterministic-reports", deterministic_runs());

    std::printf("%d of 10 checks failed, %.0fs total\n", failures, seconds_since(t0));
    return failures == 0 ? 0 : 1;
}
