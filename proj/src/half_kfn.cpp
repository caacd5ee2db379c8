#include "halfkfn/half_kfn.hpp"

#include "halfkfn/error.hpp"

#include <algorithm>
#include <cmath>

namespace halfkfn {

namespace {

struct Candidate {
    double d2;
    std::size_t index;
};

// Farther first; equal distances resolved toward the smaller pooled index.
constexpr bool ranks_before(const Candidate& a, const Candidate& b) noexcept {
    return a.d2 > b.d2 || (a.d2 == b.d2 && a.index < b.index);
}

void same_class_candidates(const PooledSample& pool, std::size_t query, std::vector<Candidate>& out) {
    out.clear();
    for (std::size_t j : pool.members(pool.class_of(query)))
        if (j != query) out.push_back({pool.squared_distance(query, j), j});
}

HalfKfnValue make_value(std::size_t count, std::size_t k, const PooledSample& pool) {
    return {static_cast<double>(count) / static_cast<double>(pool.n1() * k), count, k, pool.n1(),
            pool.n2()};
}

void require_split(const PooledSample& pool, std::size_t k) {
    if (k == 0) throw Error(ErrorCode::InvalidInput, "k must be at least 1");
    if (pool.n1() == 0 || pool.n2() == 0)
        throw Error(ErrorCode::InvalidInput, "both source and target must be non-empty");
}

}  // namespace

PooledSample::PooledSample(const SampleSet& source, const SampleSet& target)
    : dim_(source.dim()), n1_(source.size()) {
    if (source.dim() != target.dim())
        throw Error(ErrorCode::InvalidInput, "source has L=" + std::to_string(source.dim()) +
                                                 " but target has L=" + std::to_string(target.dim()));
    data_.reserve(source.data().size() + target.data().size());
    data_.insert(data_.end(), source.data().begin(), source.data().end());
    data_.insert(data_.end(), target.data().begin(), target.data().end());
    index_classes();
}

PooledSample::PooledSample(std::size_t dim, std::vector<double> row_major, std::size_t n1)
    : dim_(dim), n1_(n1), data_(std::move(row_major)) {
    if (dim_ < 2 || data_.size() % dim_ != 0)
        throw Error(ErrorCode::InvalidInput, "pooled data is not a whole number of rows of dimension >= 2");
    if (n1_ > data_.size() / dim_) throw Error(ErrorCode::InvalidInput, "n1 exceeds the pool size");
    index_classes();
}

PooledSample PooledSample::rearranged(std::span<const std::size_t> order, std::size_t n1) const {
    std::vector<double> out;
    out.reserve(order.size() * dim_);
    for (std::size_t i : order) {
        auto r = row(i);
        out.insert(out.end(), r.begin(), r.end());
    }
    return PooledSample(dim_, std::move(out), n1);
}

PooledSample PooledSample::gather(const SampleSet& source, std::span<const std::size_t> source_rows,
                                  const SampleSet& target, std::span<const std::size_t> target_rows) {
    if (source.dim() != target.dim())
        throw Error(ErrorCode::InvalidInput, "source and target dimensions differ");
    std::vector<double> out;
    out.reserve((source_rows.size() + target_rows.size()) * source.dim());
    for (std::size_t i : source_rows) {
        auto r = source.row(i);
        out.insert(out.end(), r.begin(), r.end());
    }
    for (std::size_t i : target_rows) {
        auto r = target.row(i);
        out.insert(out.end(), r.begin(), r.end());
    }
    return PooledSample(source.dim(), std::move(out), source_rows.size());
}

void PooledSample::index_classes() {
    const std::size_t count = data_.size() / dim_;
    class_of_.resize(count);
    members_.assign(dim_, {});
    for (std::size_t i = 0; i < count; ++i) {
        class_of_[i] = static_cast<std::uint32_t>(argmax_class(row(i)));
        members_[class_of_[i]].push_back(i);
    }
}

double PooledSample::squared_distance(std::size_t i, std::size_t j) const noexcept {
    const double* a = data_.data() + i * dim_;
    const double* b = data_.data() + j * dim_;
    double s = 0.0;
    for (std::size_t c = 0; c < dim_; ++c) {
        const double d = a[c] - b[c];
        s += d * d;
    }
    return s;
}

double PooledSample::distance(std::size_t i, std::size_t j) const noexcept {
    return std::sqrt(squared_distance(i, j));
}

FarthestNeighborTable intra_class_farthest_neighbors(const PooledSample& pool, std::size_t k,
                                                     QueryRange range) {
    if (k == 0) throw Error(ErrorCode::InvalidInput, "k must be at least 1");
    const std::size_t queries = range == QueryRange::SourceOnly ? pool.n1() : pool.n();
    FarthestNeighborTable table;
    table.k = k;
    table.lists.resize(queries);
    std::vector<Candidate> cand;
    for (std::size_t i = 0; i < queries; ++i) {
        same_class_candidates(pool, i, cand);
        const std::size_t take = std::min(k, cand.size());
        std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(take), cand.end(),
                          ranks_before);
        auto& list = table.lists[i];
        list.reserve(take);
        for (std::size_t r = 0; r < take; ++r) list.push_back({cand[r].index, std::sqrt(cand[r].d2)});
    }
    return table;
}

HalfKfnValue half_kfn_matrix_form(const PooledSample& pool, std::size_t k) {
    require_split(pool, k);
    std::size_t count = 0;
    std::vector<Candidate> cand;
    std::vector<Candidate> scratch;
    for (std::size_t i = 0; i < pool.n1(); ++i) {
        same_class_candidates(pool, i, cand);
        if (cand.empty()) continue;
        // Row i of A: every candidate ranked at or above the k-th farthest.
        Candidate kth = cand.front();
        if (cand.size() > k) {
            scratch = cand;
            std::nth_element(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(k - 1),
                             scratch.end(), ranks_before);
            kth = scratch[k - 1];
        } else {
            kth = *std::min_element(cand.begin(), cand.end(),
                                    [](const Candidate& a, const Candidate& b) { return ranks_before(b, a); });
        }
        for (const auto& c : cand) {
            const bool in_row = !ranks_before(kth, c);
            if (in_row && c.index >= pool.n1()) ++count;
        }
    }
    return make_value(count, k, pool);
}

HalfKfnValue half_kfn_fn_form(const PooledSample& pool, std::size_t k) {
    require_split(pool, k);
    const auto table = intra_class_farthest_neighbors(pool, k, QueryRange::SourceOnly);
    std::size_t count = 0;
    for (const auto& list : table.lists)
        for (const auto& nb : list)
            if (!pool.is_source(nb.index)) ++count;
    return make_value(count, k, pool);
}

HalfKfnValue half_kfn(const PooledSample& pool, std::size_t k) {
    if (k != 1) return half_kfn_fn_form(pool, k);
    require_split(pool, k);
    std::size_t count = 0;
    for (std::size_t i = 0; i < pool.n1(); ++i) {
        double best = -1.0;
        std::size_t best_index = i;
        // Members are in increasing index order, so a strict comparison keeps
        // the smallest index among equally distant rows.
        for (std::size_t j : pool.members(pool.class_of(i))) {
            if (j == i) continue;
            const double d2 = pool.squared_distance(i, j);
            if (d2 > best) {
                best = d2;
                best_index = j;
            }
        }
        if (best_index != i && best_index >= pool.n1()) ++count;
    }
    return make_value(count, 1, pool);
}

}  // namespace halfkfn
