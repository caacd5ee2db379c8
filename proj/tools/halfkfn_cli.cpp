// Command-line front end. Talks to the library only through the C API.
//
//   halfkfn detect   --source a.csv --target b.csv [--method ...] [--out report.json]
//   halfkfn simulate --out DIR [--seed S --n1 N --n2 N --delta D --sigma-gn G]
//   halfkfn power    [--config FILE] [sweep flags] --out DIR
//   halfkfn bench    [--config FILE] [sweep flags] --out DIR
//
// Exit status: detect 0 = no drift, 1 = drift; other commands 0 = success;
// 2 = any error. Diagnostics go to stderr only.

#include "halfkfn/halfkfn.h"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace {

constexpr int kExitNoDrift = 0;
constexpr int kExitDrift = 1;
constexpr int kExitError = 2;

struct SampleSetDeleter {
    void operator()(hkfn_sample_set* s) const { hkfn_sample_set_destroy(s); }
};
struct ReportDeleter {
    void operator()(hkfn_report* r) const { hkfn_report_destroy(r); }
};
struct ExperimentDeleter {
    void operator()(hkfn_experiment* e) const { hkfn_experiment_destroy(e); }
};
struct PowerReportDeleter {
    void operator()(hkfn_power_report* r) const { hkfn_power_report_destroy(r); }
};

using SampleSetPtr = std::unique_ptr<hkfn_sample_set, SampleSetDeleter>;
using ReportPtr = std::unique_ptr<hkfn_report, ReportDeleter>;
using ExperimentPtr = std::unique_ptr<hkfn_experiment, ExperimentDeleter>;
using PowerReportPtr = std::unique_ptr<hkfn_power_report, PowerReportDeleter>;

int report_error(hkfn_status status, const std::string& context) {
    std::cerr << "halfkfn: " << context << ": " << hkfn_status_string(status) << ": " << hkfn_last_error()
              << '\n';
    return kExitError;
}

struct DetectArgs {
    std::string source, target, out;
    std::string method = "half_kfn_bootstrap";
    std::size_t k = 1, perms = 100, boots = 10;
    double alpha = 0.05, noise = 1e-8;
    std::uint64_t seed = 0;
    bool one_sided = false;
};

int cmd_detect(const DetectArgs& a) {
    hkfn_sample_set* raw = nullptr;
    if (auto st = hkfn_sample_set_load_csv(a.source.c_str(), &raw); st != HKFN_OK)
        return report_error(st, "loading " + a.source);
    SampleSetPtr source(raw);
    if (auto st = hkfn_sample_set_load_csv(a.target.c_str(), &raw); st != HKFN_OK)
        return report_error(st, "loading " + a.target);
    SampleSetPtr target(raw);

    hkfn_detect_options opts;
    hkfn_detect_options_init(&opts);
    opts.method = a.method.c_str();
    opts.k = a.k;
    opts.permutations = a.perms;
    opts.resamples = a.boots;
    opts.alpha = a.alpha;
    opts.sigma_noise = a.noise;
    opts.seed = a.seed;
    opts.one_sided = a.one_sided ? 1 : 0;

    hkfn_report* rep = nullptr;
    if (auto st = hkfn_detect(source.get(), target.get(), &opts, &rep); st != HKFN_OK)
        return report_error(st, "detect");
    ReportPtr report(rep);

    if (a.out.empty()) {
        char* json = nullptr;
        if (auto st = hkfn_report_to_json(report.get(), &json); st != HKFN_OK) return report_error(st, "report");
        std::fputs(json, stdout);
        std::fputc('\n', stdout);
        hkfn_string_free(json);
    } else if (auto st = hkfn_report_write_json(report.get(), a.out.c_str()); st != HKFN_OK) {
        return report_error(st, "writing " + a.out);
    }
    return hkfn_report_is_drift(report.get()) ? kExitDrift : kExitNoDrift;
}

struct SimulateArgs {
    std::uint64_t seed = 0;
    long long n1 = 500, n2 = 500;
    double delta = 0.0, sigma_gn = 20.0;
    int iterations = 20000;
    std::optional<double> learning_rate;
    std::string out = ".";
};

int cmd_simulate(const SimulateArgs& a) {
    if (a.n1 <= 0 || a.n2 <= 0) {
        std::cerr << "halfkfn: simulate: --n1 and --n2 must be positive\n";
        return kExitError;
    }
    std::error_code ec;
    std::filesystem::create_directories(a.out, ec);
    if (ec) {
        std::cerr << "halfkfn: simulate: cannot create " << a.out << ": " << ec.message() << '\n';
        return kExitError;
    }
    hkfn_simulate_options opts;
    hkfn_simulate_options_init(&opts);
    opts.seed = a.seed;
    opts.n1 = static_cast<std::size_t>(a.n1);
    opts.n2 = static_cast<std::size_t>(a.n2);
    opts.delta = a.delta;
    opts.sigma_gn = a.sigma_gn;
    opts.reducer_iterations = a.iterations;
    if (a.learning_rate) opts.learning_rate = *a.learning_rate;

    hkfn_sample_set* s = nullptr;
    hkfn_sample_set* t = nullptr;
    if (auto st = hkfn_simulate(&opts, &s, &t); st != HKFN_OK) return report_error(st, "simulate");
    SampleSetPtr source(s), target(t);
    const auto dir = std::filesystem::path(a.out);
    for (auto [set, name] : {std::pair{source.get(), "source.csv"}, std::pair{target.get(), "target.csv"}}) {
        const auto path = (dir / name).string();
        if (auto st = hkfn_sample_set_save_csv(set, path.c_str()); st != HKFN_OK)
            return report_error(st, "writing " + path);
    }
    return 0;
}

struct StudyArgs {
    std::string config;
    std::string out = ".";
    // Flag name -> raw value, in command-line order; forwarded verbatim.
    std::vector<std::pair<std::string, std::string>> settings;
};

int cmd_study(const StudyArgs& a, bool bench) {
    hkfn_experiment* raw = nullptr;
    // With no explicit grid the full default sweep is run.
    if (auto st = hkfn_experiment_create(1, &raw); st != HKFN_OK) return report_error(st, "config");
    ExperimentPtr exp(raw);
    if (!a.config.empty())
        if (auto st = hkfn_experiment_load_file(exp.get(), a.config.c_str()); st != HKFN_OK)
            return report_error(st, "loading " + a.config);
    for (const auto& [key, value] : a.settings)
        if (auto st = hkfn_experiment_set(exp.get(), key.c_str(), value.c_str()); st != HKFN_OK)
            return report_error(st, "--" + key);

    std::error_code ec;
    std::filesystem::create_directories(a.out, ec);
    if (ec) {
        std::cerr << "halfkfn: cannot create " << a.out << ": " << ec.message() << '\n';
        return kExitError;
    }

    hkfn_power_report* rep = nullptr;
    const auto st = bench ? hkfn_run_timing_benchmark(exp.get(), &rep) : hkfn_run_power_study(exp.get(), &rep);
    if (st != HKFN_OK) return report_error(st, bench ? "bench" : "power");
    PowerReportPtr report(rep);

    const auto dir = std::filesystem::path(a.out);
    const std::string stem = bench ? "bench" : "power";
    const auto csv = (dir / (stem + ".csv")).string();
    const auto json = (dir / (stem + ".json")).string();
    if (auto s = hkfn_power_report_write_csv(report.get(), csv.c_str()); s != HKFN_OK)
        return report_error(s, "writing " + csv);
    if (auto s = hkfn_power_report_write_json(report.get(), json.c_str()); s != HKFN_OK)
        return report_error(s, "writing " + json);
    if (bench) {
        const auto ratio = (dir / "bench_ratio.csv").string();
        if (auto s = hkfn_power_report_write_ratio_csv(report.get(), ratio.c_str()); s != HKFN_OK)
            return report_error(s, "writing " + ratio);
    }
    return 0;
}

void add_study_flags(CLI::App* cmd, StudyArgs& a) {
    cmd->add_option("--config", a.config, "Flat key = value experiment file")->check(CLI::ExistingFile);
    cmd->add_option("--out", a.out, "Output directory");
    static const char* keys[] = {"n1",    "n2",   "delta", "sigma-gn", "method", "runs",       "alpha",
                                 "seed",  "k",    "perms", "boots",    "noise",  "iterations", "threads",
                                 "learning-rate"};
    for (const char* key : keys) {
        const std::string name = key;
        cmd->add_option_function<std::string>(
            "--" + name, [&a, name](const std::string& v) { a.settings.emplace_back(name, v); },
            "Experiment setting (comma-separated lists allowed)");
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Covariate drift detection with the Half-KFN statistic"};
    app.require_subcommand(1);

    DetectArgs detect;
    auto* d = app.add_subcommand("detect", "Test two softmax CSV files for drift");
    d->add_option("--source", detect.source, "Source softmax CSV")->required();
    d->add_option("--target", detect.target, "Target softmax CSV")->required();
    d->add_option("--method", detect.method,
                  "half_kfn_bootstrap | half_kfn_permutation | mmd | energy | fr | knn");
    d->add_option("--k", detect.k, "Neighbour count");
    d->add_option("--perms", detect.perms, "Permutation count P");
    d->add_option("--boots", detect.boots, "Bootstrap resample count M");
    d->add_option("--alpha", detect.alpha, "Significance level");
    d->add_option("--noise", detect.noise, "Tie-breaking noise standard deviation");
    d->add_option("--seed", detect.seed, "Random seed");
    d->add_option("--out", detect.out, "Write the JSON report here instead of stdout");
    d->add_flag("--one-sided", detect.one_sided, "One-sided bootstrap rejection");

    SimulateArgs sim;
    auto* s = app.add_subcommand("simulate", "Write reduced source/target CSVs from the simulated pipeline");
    s->add_option("--seed", sim.seed, "Random seed");
    s->add_option("--n1", sim.n1, "Source size");
    s->add_option("--n2", sim.n2, "Target size");
    s->add_option("--delta", sim.delta, "Drifted proportion of the target");
    s->add_option("--sigma-gn", sim.sigma_gn, "Drift noise standard deviation");
    s->add_option("--iterations", sim.iterations, "Reducer training iterations");
    s->add_option("--learning-rate", sim.learning_rate, "Reducer gradient-descent step size");
    s->add_option("--out", sim.out, "Output directory");

    StudyArgs power, bench;
    auto* p = app.add_subcommand("power", "Rejection rates over repeated simulated runs");
    add_study_flags(p, power);
    auto* b = app.add_subcommand("bench", "Serial single-run timings and permutation/bootstrap ratios");
    add_study_flags(b, bench);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e, std::cerr, std::cerr);
        return kExitError;
    }

    if (d->parsed()) return cmd_detect(detect);
    if (s->parsed()) return cmd_simulate(sim);
    if (p->parsed()) return cmd_study(power, false);
    if (b->parsed()) return cmd_study(bench, true);
    return kExitError;
}
