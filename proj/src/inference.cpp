#include "halfkfn/inference.hpp"

#include "halfkfn/error.hpp"
#include "halfkfn/rng.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

namespace halfkfn {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

double choose2(std::size_t m) {
    return 0.5 * static_cast<double>(m) * static_cast<double>(m > 0 ? m - 1 : 0);
}

void check_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw Error(ErrorCode::InvalidInput, "alpha must lie in (0,1)");
}

}  // namespace

void PermutationConfig::validate() const {
    if (permutations < 1) throw Error(ErrorCode::InvalidInput, "permutation count must be at least 1");
    if (!(sigma_noise > 0.0) || !std::isfinite(sigma_noise))
        throw Error(ErrorCode::InvalidInput, "sigma_noise must be positive");
    check_alpha(alpha);
}

void BootstrapConfig::validate() const {
    if (resamples < 2) throw Error(ErrorCode::InvalidInput, "resample count must be at least 2");
    if (k != 1) throw Error(ErrorCode::InvalidInput, "the bootstrap test supports k = 1 only");
    check_alpha(alpha);
}

PermutationOutcome run_permutation(const PooledSample& pool, const StatisticFactory& factory,
                                   Orientation orientation, const PermutationConfig& cfg) {
    cfg.validate();
    const SplitStatistic stat = factory(pool);

    std::vector<std::size_t> order(pool.n());
    std::iota(order.begin(), order.end(), std::size_t{0});

    PermutationOutcome out;
    out.observed = stat(order);
    std::normal_distribution<double> noise(0.0, cfg.sigma_noise);
    auto rng0 = make_rng(cfg.seed, 0);
    const double observed = out.observed + noise(rng0);

    out.null_values.reserve(cfg.permutations);
    std::size_t extreme = 0;
    for (std::size_t t = 1; t <= cfg.permutations; ++t) {
        auto rng = make_rng(cfg.seed, t);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::shuffle(order.begin(), order.end(), rng);
        const double value = stat(order);
        out.null_values.push_back(value);
        const double perturbed = value + noise(rng);
        const bool at_least_as_extreme =
            orientation == Orientation::LargerIsDrift ? observed <= perturbed : observed >= perturbed;
        if (at_least_as_extreme) ++extreme;
    }
    out.p_value = static_cast<double>(extreme) / static_cast<double>(cfg.permutations);
    return out;
}

TestReport permutation_test_generic(const PooledSample& pool, const StatisticFactory& factory,
                                    Orientation orientation, const PermutationConfig& cfg,
                                    const std::string& method) {
    const auto start = Clock::now();
    const auto outcome = run_permutation(pool, factory, orientation, cfg);
    TestReport report;
    report.method = method;
    report.statistic = outcome.observed;
    report.p_value = outcome.p_value;
    report.decision = outcome.p_value < cfg.alpha ? Decision::Drift : Decision::NoDrift;
    report.elapsed_s = seconds_since(start);
    report.config = {{"permutations", cfg.permutations}, {"sigma_noise", cfg.sigma_noise},
                     {"alpha", cfg.alpha},               {"seed", cfg.seed},
                     {"n1", pool.n1()},                  {"n2", pool.n2()},
                     {"orientation", orientation == Orientation::LargerIsDrift ? "larger" : "smaller"}};
    return report;
}

TestReport permutation_test(const SampleSet& source, const SampleSet& target, std::size_t k,
                            const PermutationConfig& cfg) {
    const auto start = Clock::now();
    if (k == 0) throw Error(ErrorCode::InvalidInput, "k must be at least 1");
    const PooledSample pool(source, target);
    const StatisticFactory factory = [k](const PooledSample& p) -> SplitStatistic {
        return [&p, k](std::span<const std::size_t> order) {
            return half_kfn(p.rearranged(order, p.n1()), k).t;
        };
    };
    TestReport report = permutation_test_generic(pool, factory, Orientation::LargerIsDrift, cfg,
                                                 "half_kfn_permutation");
    report.config["k"] = k;
    report.elapsed_s = seconds_since(start);
    return report;
}

PairProbabilities estimate_p1_p2_from_projections(std::span<const ClassProjection> classes,
                                                  std::size_t n1) {
    if (n1 == 0) throw Error(ErrorCode::InvalidInput, "n1 must be positive");
    PairProbabilities out;
    for (std::size_t c = 0; c < classes.size(); ++c) {
        const auto& values = classes[c].values;
        const std::size_t m = values.size();
        if (m < 2)
            throw Error(ErrorCode::DegenerateClass,
                        "class " + std::to_string(c) + " has " + std::to_string(m) +
                            " member(s); at least 2 are needed");
        const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
        const double mid = (*lo + *hi) / 2.0;
        const auto left = static_cast<std::size_t>(
            std::count_if(values.begin(), values.end(), [mid](double v) { return v <= mid; }));
        const std::size_t right = m - left;
        const double share = static_cast<double>(classes[c].source_count) / static_cast<double>(n1);
        const double w = share * share;
        const double pairs = choose2(m);
        out.p1 += w / pairs;
        out.p2 += w * (choose2(left) + choose2(right)) / pairs;
    }
    return out;
}

PairProbabilities estimate_p1_p2_k1(const PooledSample& pool, SingletonClassPolicy policy) {
    std::vector<ClassProjection> classes;
    for (std::size_t c = 0; c < pool.dim(); ++c) {
        const auto& members = pool.members(c);
        if (members.empty()) continue;
        if (members.size() == 1) {
            if (policy == SingletonClassPolicy::Error)
                throw Error(ErrorCode::DegenerateClass,
                            "class " + std::to_string(c) + " has a single member");
            warn("class " + std::to_string(c) + " has a single member; excluded from p1/p2 estimation");
            continue;
        }
        ClassProjection proj;
        proj.values.reserve(members.size());
        for (std::size_t i : members) {
            proj.values.push_back(pool.row(i)[c]);
            if (pool.is_source(i)) ++proj.source_count;
        }
        classes.push_back(std::move(proj));
    }
    return estimate_p1_p2_from_projections(classes, pool.n1());
}

MomentEstimate asymptotic_moments(std::size_t n1, std::size_t n2, double p1, double p2) {
    if (n1 == 0 || n2 == 0) throw Error(ErrorCode::InvalidInput, "n1 and n2 must be positive");
    const double n = static_cast<double>(n1 + n2);
    const double lambda1 = static_cast<double>(n1) / n;
    const double lambda2 = static_cast<double>(n2) / n;
    return {p1, p2, lambda2, lambda2 * lambda2 * p1 + lambda1 * lambda2 * p2};
}

double finite_sample_residual(std::size_t n1_, std::size_t n2_, std::size_t k_) {
    if (n1_ + n2_ < 4) throw Error(ErrorCode::UnsupportedSize, "finite-sample moments need n >= 4");
    if (n1_ == 0 || k_ == 0) throw Error(ErrorCode::InvalidInput, "n1 and k must be positive");
    const double n1 = static_cast<double>(n1_), n2 = static_cast<double>(n2_), k = static_cast<double>(k_);
    const double n = n1 + n2;
    const double mean = n2 / (n - 1);
    return n2 / (k * n1 * (n - 1)) + (k - 1) * n2 * (n2 - 1) / (k * n1 * (n - 1) * (n - 2)) +
           (n1 - 1) * n2 * (n2 - 1) / (n1 * (n - 1) * (n - 2)) - mean * mean;
}

FiniteMoments finite_sample_moments(std::size_t n1_, std::size_t n2_, std::size_t k_,
                                    const Eigen::MatrixXd& p1_rs, const Eigen::MatrixXd& p2_rs) {
    const double residual = finite_sample_residual(n1_, n2_, k_);
    const auto kk = static_cast<Eigen::Index>(k_);
    if (p1_rs.rows() != kk || p1_rs.cols() != kk || p2_rs.rows() != kk || p2_rs.cols() != kk)
        throw Error(ErrorCode::InvalidInput, "p1/p2 matrices must be k x k");
    const double n1 = static_cast<double>(n1_), n2 = static_cast<double>(n2_);
    const double n = n1 + n2;
    // Pairs of distinct source queries: a shared neighbour must be one target
    // row, otherwise two distinct target rows are drawn from the n-2 others.
    const double a = (n1 - 1) * n2 * (n2 - 1) / (n1 * (n - 2) * (n - 3));
    const double b = (n1 - 1) * (n1 - 2) * n2 / (n1 * (n - 2) * (n - 3));
    return {n2 / (n - 1), a * p1_rs.mean() + b * p2_rs.mean() + residual};
}

PairEventMatrices pair_event_probabilities(const PooledSample& pool, std::size_t k) {
    const auto table = intra_class_farthest_neighbors(pool, k, QueryRange::All);
    const std::size_t n = pool.n();
    if (n < 2) throw Error(ErrorCode::UnsupportedSize, "need at least two pooled rows");
    for (std::size_t i = 0; i < n; ++i)
        if (table.neighbors(i).size() != k)
            throw Error(ErrorCode::DegenerateClass,
                        "class " + std::to_string(pool.class_of(i)) + " has at most k members");

    const auto kk = static_cast<Eigen::Index>(k);
    PairEventMatrices out{Eigen::MatrixXd::Zero(kk, kk), Eigen::MatrixXd::Zero(kk, kk)};
    std::vector<std::vector<double>> hits(k, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t r = 0; r < k; ++r) {
            const std::size_t j = table.neighbors(i)[r].index;
            hits[r][j] += 1.0;
            for (std::size_t s = 0; s < k; ++s)
                if (table.neighbors(j)[s].index == i) out.p1(r, s) += 1.0;
        }
    }
    for (std::size_t r = 0; r < k; ++r)
        for (std::size_t s = 0; s < k; ++s) {
            double shared = 0.0;
            for (std::size_t m = 0; m < n; ++m) shared += hits[r][m] * hits[s][m];
            if (r == s) shared -= static_cast<double>(n);  // i == j
            out.p2(r, s) = shared;
        }
    const double pairs = static_cast<double>(n) * static_cast<double>(n - 1);
    out.p1 /= pairs;
    out.p2 /= pairs;
    return out;
}

double normal_upper_tail(double z) noexcept {
    return 0.5 * std::erfc(z / std::sqrt(2.0));
}

TestReport bootstrap_test(const SampleSet& source, const SampleSet& target, const BootstrapConfig& cfg) {
    const auto start = Clock::now();
    cfg.validate();
    const PooledSample pool(source, target);
    const auto probs = estimate_p1_p2_k1(pool, SingletonClassPolicy::Drop);
    const auto moments = asymptotic_moments(pool.n1(), pool.n2(), probs.p1, probs.p2);
    if (!(moments.sigma2 > 0.0))
        throw Error(ErrorCode::DegenerateVariance, "estimated variance is zero; cannot standardize");

    std::vector<std::size_t> src_rows(source.size());
    std::vector<std::size_t> tgt_rows(target.size());
    double total = 0.0;
    for (std::size_t m = 1; m <= cfg.resamples; ++m) {
        auto rng = make_rng(cfg.seed, m);
        std::uniform_int_distribution<std::size_t> pick_src(0, source.size() - 1);
        std::uniform_int_distribution<std::size_t> pick_tgt(0, target.size() - 1);
        for (auto& r : src_rows) r = pick_src(rng);
        for (auto& r : tgt_rows) r = pick_tgt(rng);
        total += half_kfn(PooledSample::gather(source, src_rows, target, tgt_rows), cfg.k).t;
    }
    const double mean_t = total / static_cast<double>(cfg.resamples);
    const double z = (mean_t - moments.mu) / std::sqrt(moments.sigma2 / static_cast<double>(cfg.resamples));

    TestReport report;
    report.method = "half_kfn_bootstrap";
    report.statistic = mean_t;
    report.z_score = z;
    if (cfg.sidedness == Sidedness::TwoSided) {
        const double tail = normal_upper_tail(std::abs(z));
        report.p_value = std::min(1.0, 2.0 * tail);
        report.decision = tail < cfg.alpha / 2.0 ? Decision::Drift : Decision::NoDrift;
    } else {
        report.p_value = normal_upper_tail(z);
        report.decision = report.p_value < cfg.alpha ? Decision::Drift : Decision::NoDrift;
    }
    report.config = {{"k", cfg.k},
                     {"resamples", cfg.resamples},
                     {"alpha", cfg.alpha},
                     {"seed", cfg.seed},
                     {"sidedness", cfg.sidedness == Sidedness::TwoSided ? "two-sided" : "one-sided"},
                     {"n1", pool.n1()},
                     {"n2", pool.n2()},
                     {"p1", moments.p1},
                     {"p2", moments.p2},
                     {"mu", moments.mu},
                     {"sigma2", moments.sigma2}};
    report.elapsed_s = seconds_since(start);
    return report;
}

}  // namespace halfkfn
