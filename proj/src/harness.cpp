#include "halfkfn/harness.hpp"

#include "halfkfn/error.hpp"
#include "halfkfn/rng.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <thread>

namespace halfkfn {

namespace {

// Stream ids under a run seed.
constexpr std::uint64_t kSplitStream = 1;
constexpr std::uint64_t kDriftStream = 2;
constexpr std::uint64_t kTestStream = 3;

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    if (out.empty()) throw Error(ErrorCode::Config, "empty list value '" + value + "'");
    return out;
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
    T v{};
    const auto s = trim(text);
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw Error(ErrorCode::Config, "invalid value '" + text + "' for " + key);
    return v;
}

std::string normalize_key(std::string key) {
    key = trim(key);
    std::replace(key.begin(), key.end(), '_', '-');
    if (key.rfind("--", 0) == 0) key.erase(0, 2);
    return key;
}

}  // namespace

double simulated_block_low(std::size_t c) {
    static constexpr double lows[kSimClasses] = {1.0, 5.0, 10.0};
    return lows[c];
}

LabeledFeatures generate_simulated_training(std::uint64_t seed) {
    LabeledFeatures out;
    out.features.resize(static_cast<Eigen::Index>(kSimClasses * kSimPerClass), kSimFeatureDim);
    out.labels.resize(kSimClasses * kSimPerClass);
    auto rng = make_rng(seed, 0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::size_t c = 0; c < kSimClasses; ++c)
        for (std::size_t i = 0; i < kSimPerClass; ++i) {
            const auto row = static_cast<Eigen::Index>(c * kSimPerClass + i);
            for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(kSimFeatureDim); ++j)
                out.features(row, j) = simulated_block_low(c) + unit(rng);
            out.labels[static_cast<std::size_t>(row)] = static_cast<int>(c);
        }
    return out;
}

TestSplit generate_test_split(std::uint64_t seed, std::size_t n1, std::size_t n2) {
    if (n1 == 0 || n2 == 0) throw Error(ErrorCode::InvalidInput, "n1 and n2 must be positive");
    if (n1 + n2 > kSimTestBudget)
        warn("test split of " + std::to_string(n1 + n2) + " rows exceeds the " + std::to_string(kSimTestBudget) +
             "-row test pool; enlarging the pool");
    const std::size_t budget = std::max(kSimTestBudget, n1 + n2);
    auto rng = make_rng(seed, 0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    FeatureMatrix pool(static_cast<Eigen::Index>(budget), kSimFeatureDim);
    for (std::size_t i = 0; i < budget; ++i)
        for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(kSimFeatureDim); ++j)
            pool(static_cast<Eigen::Index>(i), j) = simulated_block_low(i % kSimClasses) + unit(rng);

    std::vector<Eigen::Index> order(budget);
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::shuffle(order.begin(), order.end(), rng);

    TestSplit split;
    split.control.resize(static_cast<Eigen::Index>(n1), kSimFeatureDim);
    split.candidate.resize(static_cast<Eigen::Index>(n2), kSimFeatureDim);
    for (std::size_t i = 0; i < n1; ++i) split.control.row(static_cast<Eigen::Index>(i)) = pool.row(order[i]);
    for (std::size_t i = 0; i < n2; ++i)
        split.candidate.row(static_cast<Eigen::Index>(i)) = pool.row(order[n1 + i]);
    return split;
}

std::size_t drift_count(std::size_t n2, double delta) {
    if (!(delta >= 0.0 && delta <= 1.0)) throw Error(ErrorCode::InvalidInput, "delta must lie in [0,1]");
    // nearbyint follows the default round-to-nearest-even mode.
    return static_cast<std::size_t>(std::nearbyint(delta * static_cast<double>(n2)));
}

FeatureMatrix inject_gaussian_drift(const FeatureMatrix& candidate, double delta, double sigma_gn,
                                    std::uint64_t seed) {
    const auto rows = static_cast<std::size_t>(candidate.rows());
    const std::size_t count = drift_count(rows, delta);
    if (count > 0 && !(sigma_gn > 0.0)) throw Error(ErrorCode::InvalidInput, "sigma_gn must be positive");
    FeatureMatrix out = candidate;
    if (count == 0) return out;
    auto rng = make_rng(seed, 0);
    std::vector<std::size_t> idx(rows);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::shuffle(idx.begin(), idx.end(), rng);
    std::sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(count));
    std::normal_distribution<double> noise(0.0, sigma_gn);
    for (std::size_t i = 0; i < count; ++i)
        for (Eigen::Index j = 0; j < out.cols(); ++j) out(static_cast<Eigen::Index>(idx[i]), j) += noise(rng);
    return out;
}

const char* to_string(Method m) noexcept {
    switch (m) {
        case Method::HalfKfnPermutation: return "half_kfn_permutation";
        case Method::HalfKfnBootstrap: return "half_kfn_bootstrap";
        case Method::Mmd: return "mmd";
        case Method::Energy: return "energy";
        case Method::Fr: return "fr";
        case Method::Knn: return "knn";
    }
    return "unknown";
}

std::vector<Method> all_methods() {
    return {Method::Mmd, Method::Energy, Method::Fr, Method::Knn, Method::HalfKfnPermutation,
            Method::HalfKfnBootstrap};
}

Method parse_method(const std::string& name) {
    for (Method m : all_methods())
        if (name == to_string(m)) return m;
    throw Error(ErrorCode::Config, "unknown method '" + name + "'");
}

TestReport run_method(Method method, const SampleSet& source, const SampleSet& target, const DetectOptions& o) {
    PermutationConfig perm{o.permutations, o.sigma_noise, o.alpha, o.seed};
    switch (method) {
        case Method::HalfKfnPermutation: return permutation_test(source, target, o.k, perm);
        case Method::HalfKfnBootstrap:
            return bootstrap_test(source, target, BootstrapConfig{o.resamples, o.k, o.alpha, o.seed, o.sidedness});
        case Method::Mmd: return baseline_permutation_test(source, target, BaselineName::Mmd, o.baseline, perm);
        case Method::Energy:
            return baseline_permutation_test(source, target, BaselineName::Energy, o.baseline, perm);
        case Method::Fr: return baseline_permutation_test(source, target, BaselineName::Fr, o.baseline, perm);
        case Method::Knn: return baseline_permutation_test(source, target, BaselineName::Knn, o.baseline, perm);
    }
    throw Error(ErrorCode::Config, "unknown method");
}

void ExperimentConfig::validate() const {
    if (sizes.empty()) throw Error(ErrorCode::Config, "no sample sizes configured");
    for (const auto& [a, b] : sizes)
        if (a == 0 || b == 0) throw Error(ErrorCode::Config, "sample sizes must be positive");
    if (deltas.empty()) throw Error(ErrorCode::Config, "no drift proportions configured");
    for (double d : deltas)
        if (!(d >= 0.0 && d <= 1.0)) throw Error(ErrorCode::Config, "delta must lie in [0,1]");
    if (!(sigma_gn > 0.0)) throw Error(ErrorCode::Config, "sigma-gn must be positive");
    if (methods.empty()) throw Error(ErrorCode::Config, "no methods configured");
    if (runs < 1) throw Error(ErrorCode::Config, "runs must be at least 1");
    if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorCode::Config, "alpha must lie in (0,1)");
    if (k < 1 || permutations < 1 || resamples < 2)
        throw Error(ErrorCode::Config, "k >= 1, perms >= 1 and boots >= 2 are required");
    if (!(sigma_noise > 0.0)) throw Error(ErrorCode::Config, "noise must be positive");
    if (reducer_iterations < 1 || !(learning_rate > 0.0))
        throw Error(ErrorCode::Config, "reducer iterations and learning rate must be positive");
}

ExperimentConfig ExperimentConfig::default_sweep() {
    ExperimentConfig cfg;
    cfg.sizes = {{100, 100}, {200, 200}, {500, 500}, {1000, 1000}};
    cfg.deltas = {0.0, 0.01, 0.05};
    return cfg;
}

void apply_setting(ExperimentConfig& cfg, const std::string& raw_key, const std::string& value) {
    const std::string key = normalize_key(raw_key);
    if (key == "n1" || key == "n2") {
        std::vector<std::size_t> values;
        for (const auto& item : split_list(value)) values.push_back(parse_number<std::size_t>(key, item));
        auto& sizes = cfg.sizes;
        if (key == "n1") {
            // n2 follows n1 unless set afterwards.
            sizes.clear();
            for (auto v : values) sizes.emplace_back(v, v);
        } else if (values.size() == 1) {
            for (auto& s : sizes) s.second = values[0];
        } else if (values.size() == sizes.size()) {
            for (std::size_t i = 0; i < sizes.size(); ++i) sizes[i].second = values[i];
        } else {
            throw Error(ErrorCode::Config, "n2 list length must be 1 or match n1");
        }
    } else if (key == "delta") {
        cfg.deltas.clear();
        for (const auto& item : split_list(value)) cfg.deltas.push_back(parse_number<double>(key, item));
    } else if (key == "sigma-gn") {
        cfg.sigma_gn = parse_number<double>(key, value);
    } else if (key == "method" || key == "methods") {
        cfg.methods.clear();
        for (const auto& item : split_list(value)) {
            if (item == "all") {
                const auto all = all_methods();
                cfg.methods.insert(cfg.methods.end(), all.begin(), all.end());
            } else {
                cfg.methods.push_back(parse_method(item));
            }
        }
    } else if (key == "runs") {
        cfg.runs = parse_number<std::size_t>(key, value);
    } else if (key == "alpha") {
        cfg.alpha = parse_number<double>(key, value);
    } else if (key == "seed") {
        cfg.master_seed = parse_number<std::uint64_t>(key, value);
    } else if (key == "k") {
        cfg.k = parse_number<std::size_t>(key, value);
    } else if (key == "perms") {
        cfg.permutations = parse_number<std::size_t>(key, value);
    } else if (key == "boots") {
        cfg.resamples = parse_number<std::size_t>(key, value);
    } else if (key == "noise") {
        cfg.sigma_noise = parse_number<double>(key, value);
    } else if (key == "iterations") {
        cfg.reducer_iterations = parse_number<int>(key, value);
    } else if (key == "learning-rate") {
        cfg.learning_rate = parse_number<double>(key, value);
    } else if (key == "threads") {
        cfg.threads = parse_number<std::size_t>(key, value);
    } else {
        throw Error(ErrorCode::Config, "unknown setting '" + raw_key + "'");
    }
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path, ExperimentConfig base) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open config " + path.string());
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw Error(ErrorCode::Config, path.string() + ":" + std::to_string(lineno) + ": expected key = value");
        apply_setting(base, line.substr(0, eq), line.substr(eq + 1));
    }
    base.validate();
    return base;
}

const PowerCell* PowerReport::find(const std::string& method, double delta, std::size_t n1) const {
    for (const auto& c : cells)
        if (c.method == method && c.delta == delta && c.n1 == n1) return &c;
    return nullptr;
}

ReducerModel train_simulated_reducer(std::uint64_t seed, int iterations, double learning_rate) {
    const auto train = generate_simulated_training(derive_seed(seed, 1));
    return train_reducer(train.features, train.labels, TrainOptions{learning_rate, iterations, derive_seed(seed, 2)});
}

SimulatedPair simulate_pair(const ReducerModel& model, std::uint64_t seed, std::size_t n1, std::size_t n2,
                            double delta, double sigma_gn) {
    const auto split = generate_test_split(derive_seed(seed, kSplitStream), n1, n2);
    const auto drifted = inject_gaussian_drift(split.candidate, delta, sigma_gn, derive_seed(seed, kDriftStream));
    return {reduce(model, split.control, Origin::Source), reduce(model, drifted, Origin::Target)};
}

StudyResult run_study(const ExperimentConfig& cfg, bool serial) {
    cfg.validate();
    const ReducerModel model = train_simulated_reducer(derive_seed(cfg.master_seed, 0), cfg.reducer_iterations,
                                                       cfg.learning_rate);

    struct Item {
        std::size_t size_index, delta_index, run;
    };
    std::vector<Item> items;
    for (std::size_t s = 0; s < cfg.sizes.size(); ++s)
        for (std::size_t d = 0; d < cfg.deltas.size(); ++d)
            for (std::size_t r = 0; r < cfg.runs; ++r) items.push_back({s, d, r});

    std::vector<std::vector<RunRecord>> results(items.size());
    std::vector<std::exception_ptr> errors(items.size());

    const auto work = [&](std::size_t idx) {
        try {
            const auto& it = items[idx];
            const auto [n1, n2] = cfg.sizes[it.size_index];
            const double delta = cfg.deltas[it.delta_index];
            const std::uint64_t run_seed = derive_seed(cfg.master_seed, it.run + 1);
            const auto data = simulate_pair(model, run_seed, n1, n2, delta, cfg.sigma_gn);
            DetectOptions opts;
            opts.k = cfg.k;
            opts.permutations = cfg.permutations;
            opts.resamples = cfg.resamples;
            opts.alpha = cfg.alpha;
            opts.sigma_noise = cfg.sigma_noise;
            opts.seed = derive_seed(run_seed, kTestStream);
            for (Method m : cfg.methods) {
                const auto report = run_method(m, data.source, data.target, opts);
                results[idx].push_back(
                    {to_string(m), delta, n1, n2, it.run, report.p_value, report.drift(), report.elapsed_s});
            }
        } catch (...) {
            errors[idx] = std::current_exception();
        }
    };

    std::size_t threads = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
    if (serial) threads = 1;
    threads = std::min(threads, items.size());
    if (threads <= 1) {
        for (std::size_t i = 0; i < items.size(); ++i) work(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < threads; ++t)
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < items.size(); i = next++) work(i);
            });
        for (auto& th : pool) th.join();
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);

    StudyResult out;
    for (auto& rs : results) out.records.insert(out.records.end(), rs.begin(), rs.end());

    for (const auto& [n1, n2] : cfg.sizes)
        for (double delta : cfg.deltas)
            for (Method m : cfg.methods) {
                PowerCell cell{to_string(m), delta, n1, n2};
                std::vector<double> ps;
                double elapsed = 0.0;
                for (const auto& r : out.records) {
                    if (r.method != cell.method || r.delta != delta || r.n1 != n1 || r.n2 != n2) continue;
                    ps.push_back(r.p_value);
                    elapsed += r.elapsed_s;
                    if (r.drift) ++cell.rejections;
                }
                cell.runs = ps.size();
                const double count = static_cast<double>(cell.runs);
                cell.rejection_rate = static_cast<double>(cell.rejections) / count;
                cell.mean_p = std::accumulate(ps.begin(), ps.end(), 0.0) / count;
                double ss = 0.0;
                for (double p : ps) ss += (p - cell.mean_p) * (p - cell.mean_p);
                cell.sd_p = cell.runs > 1 ? std::sqrt(ss / (count - 1.0)) : 0.0;
                cell.mean_elapsed_s = elapsed / count;
                out.report.cells.push_back(cell);
            }

    out.report.metadata = {{"runs", cfg.runs},
                           {"alpha", cfg.alpha},
                           {"sigma_gn", cfg.sigma_gn},
                           {"master_seed", cfg.master_seed},
                           {"k", cfg.k},
                           {"permutations", cfg.permutations},
                           {"resamples", cfg.resamples},
                           {"sigma_noise", cfg.sigma_noise},
                           {"reducer_iterations", cfg.reducer_iterations},
                           {"learning_rate", cfg.learning_rate},
                           {"reducer_final_loss",
                            model.loss_trace.empty() ? 0.0 : model.loss_trace.back().second}};
    return out;
}

PowerReport run_power_study(const ExperimentConfig& cfg) {
    return run_study(cfg).report;
}

PowerReport run_timing_benchmark(const ExperimentConfig& cfg) {
    PowerReport report = run_study(cfg, true).report;
    for (const auto& [n1, n2] : cfg.sizes)
        for (double delta : cfg.deltas) {
            const PowerCell* perm = report.find(to_string(Method::HalfKfnPermutation), delta, n1);
            const PowerCell* boot = report.find(to_string(Method::HalfKfnBootstrap), delta, n1);
            if (!perm || !boot) continue;
            report.ratios.push_back({delta, n1, n2, perm->mean_elapsed_s, boot->mean_elapsed_s,
                                     boot->mean_elapsed_s > 0 ? perm->mean_elapsed_s / boot->mean_elapsed_s : 0.0});
        }
    report.metadata["timing"] =
        "wall time of the test call only, serial execution; permutation count and resample count are this "
        "run's settings and may differ from other reported timings";
    return report;
}

std::string power_report_csv(const PowerReport& report) {
    std::ostringstream os;
    os << "method,delta,n1,n2,rejection_rate,mean_p,sd_p,mean_elapsed_s\n";
    for (const auto& c : report.cells)
        os << c.method << ',' << format_double(c.delta) << ',' << c.n1 << ',' << c.n2 << ','
           << format_double(c.rejection_rate) << ',' << format_double(c.mean_p) << ',' << format_double(c.sd_p)
           << ',' << format_double(c.mean_elapsed_s) << '\n';
    return os.str();
}

std::string timing_ratio_csv(const PowerReport& report) {
    std::ostringstream os;
    os << "delta,n1,n2,permutation_s,bootstrap_s,ratio\n";
    for (const auto& r : report.ratios)
        os << format_double(r.delta) << ',' << r.n1 << ',' << r.n2 << ',' << format_double(r.permutation_s) << ','
           << format_double(r.bootstrap_s) << ',' << format_double(r.ratio) << '\n';
    return os.str();
}

nlohmann::json to_json(const PowerReport& report) {
    nlohmann::json cells = nlohmann::json::array();
    for (const auto& c : report.cells)
        cells.push_back({{"method", c.method},
                         {"delta", c.delta},
                         {"n1", c.n1},
                         {"n2", c.n2},
                         {"runs", c.runs},
                         {"rejection_rate", c.rejection_rate},
                         {"mean_p", c.mean_p},
                         {"sd_p", c.sd_p},
                         {"mean_elapsed_s", c.mean_elapsed_s}});
    nlohmann::json ratios = nlohmann::json::array();
    for (const auto& r : report.ratios)
        ratios.push_back({{"delta", r.delta},
                          {"n1", r.n1},
                          {"n2", r.n2},
                          {"permutation_s", r.permutation_s},
                          {"bootstrap_s", r.bootstrap_s},
                          {"ratio", r.ratio}});
    return {{"cells", cells}, {"timing_ratios", ratios}, {"metadata", report.metadata}};
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    out << text;
    if (!out) throw Error(ErrorCode::Io, "failed writing " + path.string());
}

}  // namespace halfkfn
