#pragma once

#include "halfkfn/feature_space.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace halfkfn {

/// Source rows followed by target rows, with each row's argmax class.
/// Neighbour searches run over this pooled universe.
class PooledSample {
public:
    PooledSample(const SampleSet& source, const SampleSet& target);

    /// Pool whose first `n1` rows are the source. Rows are trusted to be
    /// valid softmax vectors (they come from an existing pool or sample set).
    PooledSample(std::size_t dim, std::vector<double> row_major, std::size_t n1);

    /// New pool whose i-th row is this pool's row `order[i]`, split at `n1`.
    PooledSample rearranged(std::span<const std::size_t> order, std::size_t n1) const;

    /// Pool made of the given source rows then target rows (indices may repeat).
    static PooledSample gather(const SampleSet& source, std::span<const std::size_t> source_rows,
                               const SampleSet& target, std::span<const std::size_t> target_rows);

    std::size_t n() const noexcept { return class_of_.size(); }
    std::size_t n1() const noexcept { return n1_; }
    std::size_t n2() const noexcept { return n() - n1_; }
    std::size_t dim() const noexcept { return dim_; }
    bool is_source(std::size_t i) const noexcept { return i < n1_; }

    std::span<const double> row(std::size_t i) const noexcept {
        return {data_.data() + i * dim_, dim_};
    }
    const std::vector<double>& data() const noexcept { return data_; }

    std::uint32_t class_of(std::size_t i) const noexcept { return class_of_[i]; }
    /// Pooled indices of class `c` in increasing order.
    const std::vector<std::size_t>& members(std::size_t c) const { return members_[c]; }

    double squared_distance(std::size_t i, std::size_t j) const noexcept;
    double distance(std::size_t i, std::size_t j) const noexcept;

private:
    void index_classes();

    std::size_t dim_ = 0;
    std::size_t n1_ = 0;
    std::vector<double> data_;
    std::vector<std::uint32_t> class_of_;
    std::vector<std::vector<std::size_t>> members_;
};

struct Neighbor {
    std::size_t index;
    double distance;

    bool operator==(const Neighbor&) const = default;
};

enum class QueryRange { SourceOnly, All };

/// Per-query list of intra-class farthest neighbours, farthest first.
/// Equal distances are ordered by increasing pooled index.
struct FarthestNeighborTable {
    std::size_t k = 0;
    std::vector<std::vector<Neighbor>> lists;  // indexed by query (pooled index)

    const std::vector<Neighbor>& neighbors(std::size_t query) const { return lists[query]; }
    std::size_t num_queries() const noexcept { return lists.size(); }
};

FarthestNeighborTable intra_class_farthest_neighbors(const PooledSample& pool, std::size_t k,
                                                     QueryRange range = QueryRange::SourceOnly);

/// Value of the statistic. `cross_count` is the integer numerator, so
/// t == cross_count / (n1 * k) exactly.
struct HalfKfnValue {
    double t = 0.0;
    std::size_t cross_count = 0;
    std::size_t k = 0;
    std::size_t n1 = 0;
    std::size_t n2 = 0;
};

/// Indicator-matrix evaluation: marks A(i,j) for every source row i and
/// pooled row j among i's k farthest same-class rows, then sums the
/// source-by-target block.
HalfKfnValue half_kfn_matrix_form(const PooledSample& pool, std::size_t k);

/// Ranked-neighbour evaluation: counts, over source queries and ranks
/// r = 1..k, farthest neighbours that come from the target rows.
HalfKfnValue half_kfn_fn_form(const PooledSample& pool, std::size_t k);

/// The statistic used by the tests; same value as half_kfn_fn_form with a
/// single-pass path for k = 1.
HalfKfnValue half_kfn(const PooledSample& pool, std::size_t k);

}  // namespace halfkfn
