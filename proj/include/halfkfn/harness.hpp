#pragma once

#include "halfkfn/baselines.hpp"
#include "halfkfn/feature_space.hpp"
#include "halfkfn/inference.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace halfkfn {

// ---------------------------------------------------------------------------
// Simulated data: three classes on disjoint 5-D uniform blocks.
// ---------------------------------------------------------------------------

inline constexpr std::size_t kSimFeatureDim = 5;
inline constexpr std::size_t kSimClasses = 3;
inline constexpr std::size_t kSimPerClass = 2000;
inline constexpr std::size_t kSimTestBudget = 3000;

/// Lower edge of class c's block; the block is [lo, lo + 1]^5.
double simulated_block_low(std::size_t c);

struct LabeledFeatures {
    FeatureMatrix features;
    std::vector<int> labels;  // 0-based class index
};

/// 6000 x 5 training matrix: rows 0..1999 ~ U(1,2)^5 class 0, 2000..3999 ~
/// U(5,6)^5 class 1, 4000..5999 ~ U(10,11)^5 class 2.
LabeledFeatures generate_simulated_training(std::uint64_t seed);

struct TestSplit {
    FeatureMatrix control;    // n1 rows
    FeatureMatrix candidate;  // n2 rows
};

/// Draws a balanced unlabeled test pool of max(3000, n1 + n2) rows, shuffles
/// it and takes the first n1 rows as control and the next n2 as candidate.
/// Asking for more than 3000 rows logs a warning.
TestSplit generate_test_split(std::uint64_t seed, std::size_t n1, std::size_t n2);

/// Number of drifted rows: delta * n2 rounded half-to-even.
std::size_t drift_count(std::size_t n2, double delta);

/// Adds N(0, sigma_gn^2) to every coordinate of drift_count(rows, delta)
/// rows chosen uniformly without replacement.
FeatureMatrix inject_gaussian_drift(const FeatureMatrix& candidate, double delta, double sigma_gn,
                                    std::uint64_t seed);

// ---------------------------------------------------------------------------
// Detection methods
// ---------------------------------------------------------------------------

enum class Method { HalfKfnPermutation, HalfKfnBootstrap, Mmd, Energy, Fr, Knn };

const char* to_string(Method m) noexcept;
Method parse_method(const std::string& name);
std::vector<Method> all_methods();

struct DetectOptions {
    std::size_t k = 1;
    std::size_t permutations = 100;
    std::size_t resamples = 10;
    double alpha = 0.05;
    double sigma_noise = 1e-8;
    std::uint64_t seed = 0;
    Sidedness sidedness = Sidedness::TwoSided;
    BaselineOptions baseline;
};

/// Runs one detection method on a source/target pair.
TestReport run_method(Method method, const SampleSet& source, const SampleSet& target, const DetectOptions& options);

// ---------------------------------------------------------------------------
// Studies
// ---------------------------------------------------------------------------

struct ExperimentConfig {
    std::vector<std::pair<std::size_t, std::size_t>> sizes{{500, 500}};
    std::vector<double> deltas{0.0};
    double sigma_gn = 20.0;
    std::vector<Method> methods = all_methods();
    std::size_t runs = 100;
    double alpha = 0.05;
    std::uint64_t master_seed = 0;
    std::size_t k = 1;
    std::size_t permutations = 100;
    std::size_t resamples = 10;
    double sigma_noise = 1e-8;
    int reducer_iterations = 20000;
    double learning_rate = TrainOptions{}.learning_rate;
    std::size_t threads = 0;  // 0: hardware concurrency

    void validate() const;

    /// n1 = n2 in {100, 200, 500, 1000}, delta in {0, 0.01, 0.05}, all
    /// methods, 100 runs.
    static ExperimentConfig default_sweep();
};

/// Applies one flat `key = value` setting. Keys mirror the CLI flags
/// (n1, n2, delta, sigma-gn, method, runs, alpha, seed, k, perms, boots,
/// noise, iterations, learning-rate, threads). List-valued keys take
/// comma-separated values.
void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value);

/// Reads `key = value` lines ('#' starts a comment) on top of `base`.
ExperimentConfig load_experiment_config(const std::filesystem::path& path,
                                        ExperimentConfig base = ExperimentConfig{});

struct PowerCell {
    std::string method;
    double delta = 0.0;
    std::size_t n1 = 0;
    std::size_t n2 = 0;
    std::size_t runs = 0;
    std::size_t rejections = 0;
    double rejection_rate = 0.0;
    double mean_p = 0.0;
    double sd_p = 0.0;
    double mean_elapsed_s = 0.0;
};

struct TimingRatio {
    double delta = 0.0;
    std::size_t n1 = 0;
    std::size_t n2 = 0;
    double permutation_s = 0.0;
    double bootstrap_s = 0.0;
    double ratio = 0.0;  // permutation_s / bootstrap_s
};

struct PowerReport {
    std::vector<PowerCell> cells;
    std::vector<TimingRatio> ratios;
    nlohmann::json metadata = nlohmann::json::object();

    const PowerCell* find(const std::string& method, double delta, std::size_t n1) const;
};

/// Per-run p-values and decisions, exposed for calibration checks.
struct RunRecord {
    std::string method;
    double delta = 0.0;
    std::size_t n1 = 0;
    std::size_t n2 = 0;
    std::size_t run = 0;
    double p_value = 0.0;
    bool drift = false;
    double elapsed_s = 0.0;
};

struct StudyResult {
    PowerReport report;
    std::vector<RunRecord> records;
};

/// Trains the reducer once, then for every size, delta and run regenerates
/// the test split and drift from seeds derived from (master_seed, run),
/// reduces both sets and applies every method. Runs may execute
/// concurrently; aggregation is in run order.
StudyResult run_study(const ExperimentConfig& cfg, bool serial = false);

PowerReport run_power_study(const ExperimentConfig& cfg);

/// As run_power_study but strictly serial, and adds permutation/bootstrap
/// timing ratios for every cell where both Half-KFN methods ran.
PowerReport run_timing_benchmark(const ExperimentConfig& cfg);

/// Trains the simulated-data reducer used by the studies.
ReducerModel train_simulated_reducer(std::uint64_t seed, int iterations, double learning_rate);

/// Source/target softmax sets from the simulated pipeline.
struct SimulatedPair {
    SampleSet source;
    SampleSet target;
};
SimulatedPair simulate_pair(const ReducerModel& model, std::uint64_t seed, std::size_t n1, std::size_t n2,
                            double delta, double sigma_gn);

/// CSV columns: method,delta,n1,n2,rejection_rate,mean_p,sd_p,mean_elapsed_s.
std::string power_report_csv(const PowerReport& report);
/// CSV columns: delta,n1,n2,permutation_s,bootstrap_s,ratio.
std::string timing_ratio_csv(const PowerReport& report);
nlohmann::json to_json(const PowerReport& report);

void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace halfkfn
