#pragma once

#include "halfkfn/half_kfn.hpp"
#include "halfkfn/inference.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace halfkfn {

enum class BaselineName { Knn, Mmd, Energy, Fr };

const char* to_string(BaselineName name) noexcept;

/// knn, mmd, energy: larger values indicate drift. fr: smaller values do.
Orientation orientation_of(BaselineName name) noexcept;

struct BaselineStatistic {
    BaselineName name;
    double value;
    Orientation orientation;
};

/// Gaussian-kernel bandwidth: the median pooled pairwise distance, or a
/// fixed positive value.
struct Bandwidth {
    std::optional<double> fixed;

    static Bandwidth median_heuristic() { return {}; }
    static Bandwidth fixed_value(double h) { return {h}; }
};

/// Fraction over all pooled rows and ranks r = 1..k of r-th nearest
/// neighbours (whole pool, L2, ties toward the smaller index) drawn from the
/// row's own sample.
BaselineStatistic knn_statistic(const PooledSample& pool, std::size_t k);

/// Unbiased squared MMD with kernel exp(-d^2 / (2 h^2)).
BaselineStatistic mmd_statistic(const PooledSample& pool, Bandwidth bandwidth = Bandwidth::median_heuristic());

/// n1 n2 / (n1 + n2) * (2 E|X-Y| - E|X-X'| - E|Y-Y'|), with V-statistic
/// (diagonal-inclusive) within-sample means.
BaselineStatistic energy_statistic(const PooledSample& pool);

/// Number of Euclidean minimum spanning tree edges joining a source row to a
/// target row.
BaselineStatistic fr_statistic(const PooledSample& pool);

/// Median of the n(n-1)/2 pooled pairwise distances.
double median_pairwise_distance(const PooledSample& pool);

/// Euclidean MST edges (i < j). Edges are totally ordered by
/// (distance, i, j), which makes the tree unique.
std::vector<std::pair<std::size_t, std::size_t>> euclidean_mst(const PooledSample& pool);

struct BaselineOptions {
    std::size_t knn_k = 1;
    Bandwidth bandwidth = Bandwidth::median_heuristic();
};

/// Split evaluator for a baseline; label-independent structure (neighbour
/// lists, kernel and distance matrices, the MST) is built once per pool.
StatisticFactory baseline_factory(BaselineName name, const BaselineOptions& options = {});

/// Permutation test on a baseline statistic, rejecting in its orientation.
TestReport baseline_permutation_test(const SampleSet& source, const SampleSet& target, BaselineName name,
                                     const BaselineOptions& options, const PermutationConfig& cfg);

}  // namespace halfkfn
