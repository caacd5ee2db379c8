#include "halfkfn/baselines.hpp"

#include "halfkfn/error.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <tuple>

namespace halfkfn {

namespace {

// Membership of pooled rows under a re-split given as an order of indices.
std::vector<char> source_flags(std::span<const std::size_t> order, std::size_t n1) {
    std::vector<char> flags(order.size(), 0);
    for (std::size_t i = 0; i < n1; ++i) flags[order[i]] = 1;
    return flags;
}

std::vector<std::size_t> identity_order(std::size_t n) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    return order;
}

// Row-major symmetric n x n matrix.
struct SquareMatrix {
    std::size_t n = 0;
    std::vector<double> v;

    double operator()(std::size_t i, std::size_t j) const { return v[i * n + j]; }
};

SquareMatrix distance_matrix(const PooledSample& pool) {
    SquareMatrix d{pool.n(), std::vector<double>(pool.n() * pool.n(), 0.0)};
    for (std::size_t i = 0; i < pool.n(); ++i)
        for (std::size_t j = i + 1; j < pool.n(); ++j) d.v[i * d.n + j] = d.v[j * d.n + i] = pool.distance(i, j);
    return d;
}

struct BlockSums {
    double ss = 0.0;  // sum over ordered source pairs, diagonal included
    double tt = 0.0;
    double st = 0.0;  // sum over source x target
};

BlockSums block_sums(const SquareMatrix& m, const std::vector<char>& is_source) {
    BlockSums s;
    for (std::size_t i = 0; i < m.n; ++i) {
        const double* row = m.v.data() + i * m.n;
        double to_src = 0.0, to_tgt = 0.0;
        for (std::size_t j = 0; j < m.n; ++j) (is_source[j] ? to_src : to_tgt) += row[j];
        if (is_source[i]) {
            s.ss += to_src;
            s.st += to_tgt;
        } else {
            s.tt += to_tgt;
        }
    }
    return s;
}

void require_sizes(const PooledSample& pool, std::size_t min_each, const char* what) {
    if (pool.n1() < min_each || pool.n2() < min_each)
        throw Error(ErrorCode::InvalidInput, std::string(what) + " needs at least " + std::to_string(min_each) +
                                                 " rows in each sample");
}

StatisticFactory knn_factory(std::size_t k) {
    return [k](const PooledSample& pool) -> SplitStatistic {
        const std::size_t n = pool.n();
        if (k == 0 || n <= k)
            throw Error(ErrorCode::InvalidInput, "knn statistic needs n > k >= 1");
        auto neighbors = std::make_shared<std::vector<std::size_t>>(n * k);
        std::vector<std::pair<double, std::size_t>> cand;
        for (std::size_t i = 0; i < n; ++i) {
            cand.clear();
            for (std::size_t j = 0; j < n; ++j)
                if (j != i) cand.emplace_back(pool.squared_distance(i, j), j);
            std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k), cand.end());
            for (std::size_t r = 0; r < k; ++r) (*neighbors)[i * k + r] = cand[r].second;
        }
        const std::size_t n1 = pool.n1();
        return [neighbors, n, n1, k](std::span<const std::size_t> order) {
            const auto flags = source_flags(order, n1);
            std::size_t same = 0;
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t r = 0; r < k; ++r)
                    if (flags[i] == flags[(*neighbors)[i * k + r]]) ++same;
            return static_cast<double>(same) / static_cast<double>(n * k);
        };
    };
}

StatisticFactory mmd_factory(Bandwidth bandwidth) {
    return [bandwidth](const PooledSample& pool) -> SplitStatistic {
        require_sizes(pool, 2, "mmd statistic");
        double h = 0.0;
        if (bandwidth.fixed) {
            h = *bandwidth.fixed;
            if (!(h > 0.0) || !std::isfinite(h)) throw Error(ErrorCode::InvalidInput, "bandwidth must be positive");
        } else {
            h = median_pairwise_distance(pool);
            if (!(h > 0.0))
                throw Error(ErrorCode::DegenerateBandwidth,
                            "median pairwise distance is zero; supply a fixed bandwidth");
        }
        const double scale = 1.0 / (2.0 * h * h);
        auto kernel = std::make_shared<SquareMatrix>();
        kernel->n = pool.n();
        kernel->v.assign(pool.n() * pool.n(), 0.0);
        for (std::size_t i = 0; i < pool.n(); ++i)
            for (std::size_t j = i + 1; j < pool.n(); ++j)
                kernel->v[i * pool.n() + j] = kernel->v[j * pool.n() + i] =
                    std::exp(-pool.squared_distance(i, j) * scale);
        // Diagonal stays zero: the unbiased estimator excludes i == j.
        const double n1 = static_cast<double>(pool.n1());
        const double n2 = static_cast<double>(pool.n2());
        const std::size_t split = pool.n1();
        return [kernel, n1, n2, split](std::span<const std::size_t> order) {
            const auto s = block_sums(*kernel, source_flags(order, split));
            return s.ss / (n1 * (n1 - 1)) + s.tt / (n2 * (n2 - 1)) - 2.0 * s.st / (n1 * n2);
        };
    };
}

StatisticFactory energy_factory() {
    return [](const PooledSample& pool) -> SplitStatistic {
        require_sizes(pool, 1, "energy statistic");
        auto dist = std::make_shared<SquareMatrix>(distance_matrix(pool));
        const double n1 = static_cast<double>(pool.n1());
        const double n2 = static_cast<double>(pool.n2());
        const std::size_t split = pool.n1();
        return [dist, n1, n2, split](std::span<const std::size_t> order) {
            const auto s = block_sums(*dist, source_flags(order, split));
            const double e = 2.0 * s.st / (n1 * n2) - s.ss / (n1 * n1) - s.tt / (n2 * n2);
            return n1 * n2 / (n1 + n2) * e;
        };
    };
}

StatisticFactory fr_factory() {
    return [](const PooledSample& pool) -> SplitStatistic {
        if (pool.n() < 2) throw Error(ErrorCode::InvalidInput, "fr statistic needs at least 2 rows");
        auto edges = std::make_shared<std::vector<std::pair<std::size_t, std::size_t>>>(euclidean_mst(pool));
        const std::size_t split = pool.n1();
        return [edges, split](std::span<const std::size_t> order) {
            const auto flags = source_flags(order, split);
            std::size_t cross = 0;
            for (const auto& [a, b] : *edges)
                if (flags[a] != flags[b]) ++cross;
            return static_cast<double>(cross);
        };
    };
}

BaselineStatistic evaluate_once(BaselineName name, const StatisticFactory& factory, const PooledSample& pool) {
    const auto order = identity_order(pool.n());
    return {name, factory(pool)(order), orientation_of(name)};
}

}  // namespace

const char* to_string(BaselineName name) noexcept {
    switch (name) {
        case BaselineName::Knn: return "knn";
        case BaselineName::Mmd: return "mmd";
        case BaselineName::Energy: return "energy";
        case BaselineName::Fr: return "fr";
    }
    return "unknown";
}

Orientation orientation_of(BaselineName name) noexcept {
    return name == BaselineName::Fr ? Orientation::SmallerIsDrift : Orientation::LargerIsDrift;
}

BaselineStatistic knn_statistic(const PooledSample& pool, std::size_t k) {
    return evaluate_once(BaselineName::Knn, knn_factory(k), pool);
}

BaselineStatistic mmd_statistic(const PooledSample& pool, Bandwidth bandwidth) {
    return evaluate_once(BaselineName::Mmd, mmd_factory(bandwidth), pool);
}

BaselineStatistic energy_statistic(const PooledSample& pool) {
    return evaluate_once(BaselineName::Energy, energy_factory(), pool);
}

BaselineStatistic fr_statistic(const PooledSample& pool) {
    return evaluate_once(BaselineName::Fr, fr_factory(), pool);
}

double median_pairwise_distance(const PooledSample& pool) {
    const std::size_t n = pool.n();
    if (n < 2) throw Error(ErrorCode::InvalidInput, "median distance needs at least 2 rows");
    std::vector<double> d;
    d.reserve(n * (n - 1) / 2);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) d.push_back(pool.distance(i, j));
    const std::size_t mid = d.size() / 2;
    std::nth_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(mid), d.end());
    const double upper = d[mid];
    if (d.size() % 2 == 1) return upper;
    const double lower = *std::max_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lower + upper);
}

std::vector<std::pair<std::size_t, std::size_t>> euclidean_mst(const PooledSample& pool) {
    const std::size_t n = pool.n();
    using Key = std::tuple<double, std::size_t, std::size_t>;
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<Key> best(n, Key{inf, 0, 0});
    std::vector<char> in_tree(n, 0);
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    edges.reserve(n ? n - 1 : 0);

    // Prim's algorithm over the complete graph. Comparing (d^2, i, j) keys
    // gives every edge a distinct weight, so the tree is the same as
    // Kruskal's under lexicographic tie-breaking.
    std::size_t current = 0;
    for (std::size_t added = 1; added < n; ++added) {
        in_tree[current] = 1;
        for (std::size_t v = 0; v < n; ++v) {
            if (in_tree[v]) continue;
            const Key candidate{pool.squared_distance(current, v), std::min(current, v), std::max(current, v)};
            if (candidate < best[v]) best[v] = candidate;
        }
        std::size_t next = n;
        for (std::size_t v = 0; v < n; ++v)
            if (!in_tree[v] && (next == n || best[v] < best[next])) next = v;
        edges.emplace_back(std::get<1>(best[next]), std::get<2>(best[next]));
        current = next;
    }
    return edges;
}

StatisticFactory baseline_factory(BaselineName name, const BaselineOptions& options) {
    switch (name) {
        case BaselineName::Knn: return knn_factory(options.knn_k);
        case BaselineName::Mmd: return mmd_factory(options.bandwidth);
        case BaselineName::Energy: return energy_factory();
        case BaselineName::Fr: return fr_factory();
    }
    throw Error(ErrorCode::InvalidInput, "unknown baseline");
}

TestReport baseline_permutation_test(const SampleSet& source, const SampleSet& target, BaselineName name,
                                     const BaselineOptions& options, const PermutationConfig& cfg) {
    const auto start = std::chrono::steady_clock::now();
    const PooledSample pool(source, target);
    TestReport report =
        permutation_test_generic(pool, baseline_factory(name, options), orientation_of(name), cfg, to_string(name));
    if (name == BaselineName::Knn) report.config["k"] = options.knn_k;
    if (name == BaselineName::Mmd)
        report.config["bandwidth"] = options.bandwidth.fixed ? nlohmann::json(*options.bandwidth.fixed)
                                                             : nlohmann::json("median");
    report.elapsed_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
}

}  // namespace halfkfn
