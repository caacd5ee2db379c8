#include "doctest.h"
#include "oracles.hpp"

#include "halfkfn/error.hpp"
#include "halfkfn/half_kfn.hpp"

#include <cmath>
#include <random>

using namespace halfkfn;

namespace {

PooledSample two_d(std::initializer_list<double> first_coords, std::size_t n1) {
    std::vector<double> rows;
    for (double a : first_coords) rows.insert(rows.end(), {a, 1.0 - a});
    return PooledSample(2, rows, n1);
}

double t_of(const PooledSample& p, std::size_t k) {
    const auto a = half_kfn_matrix_form(p, k).t;
    const auto b = half_kfn_fn_form(p, k).t;
    const auto c = half_kfn(p, k).t;
    CHECK(a == b);
    CHECK(a == c);
    return a;
}

}  // namespace

TEST_SUITE("half_kfn") {

TEST_CASE("pooled sample bookkeeping") {
    const SampleSet s(2, {0.9, 0.1, 0.3, 0.7});
    const SampleSet t(2, {0.6, 0.4}, Origin::Target);
    const PooledSample p(s, t);
    CHECK(p.n() == 3);
    CHECK(p.n1() == 2);
    CHECK(p.n2() == 1);
    CHECK(p.is_source(1));
    CHECK_FALSE(p.is_source(2));
    CHECK(p.class_of(0) == 0);
    CHECK(p.class_of(1) == 1);
    CHECK(p.members(0) == std::vector<std::size_t>{0, 2});
    CHECK_THROWS_AS(PooledSample(s, SampleSet(3, {0.2, 0.3, 0.5})), Error);
}

TEST_CASE("neighbour table examples") {
    SUBCASE("two points") {
        const auto p = two_d({0.9, 0.7}, 1);
        const auto table = intra_class_farthest_neighbors(p, 1);
        REQUIRE(table.num_queries() == 1);
        REQUIRE(table.neighbors(0).size() == 1);
        CHECK(table.neighbors(0)[0].index == 1);
    }
    SUBCASE("four one-class points") {
        const auto p = two_d({0.9, 0.8, 0.6, 0.55}, 4);
        const auto table = intra_class_farthest_neighbors(p, 1);
        CHECK(table.neighbors(0)[0].index == 3);
        CHECK(table.neighbors(1)[0].index == 3);
        CHECK(table.neighbors(3)[0].index == 0);
    }
    SUBCASE("classes never mix") {
        const auto p = two_d({0.9, 0.8, 0.2, 0.1, 0.7, 0.3}, 3);
        const auto table = intra_class_farthest_neighbors(p, 3, QueryRange::All);
        for (std::size_t i = 0; i < p.n(); ++i) {
            CHECK(table.neighbors(i).size() == 2);
            for (const auto& nb : table.neighbors(i)) CHECK(p.class_of(nb.index) == p.class_of(i));
        }
    }
    SUBCASE("ties go to the smaller index") {
        // Points 1 and 2 are equidistant from 0.
        const auto p = two_d({0.8, 0.6, 1.0, 0.7}, 4);
        const auto table = intra_class_farthest_neighbors(p, 2);
        CHECK(table.neighbors(0)[0].index == 1);
        CHECK(table.neighbors(0)[1].index == 2);
    }
}

TEST_CASE("statistic examples") {
    // (0.4, 0.6) is class 1 while the source point is class 0.
    CHECK(t_of(two_d({0.9, 0.4}, 1), 1) == 0.0);
    CHECK(t_of(two_d({0.9, 0.8, 0.6, 0.55}, 2), 1) == 1.0);
    CHECK(t_of(two_d({0.9, 0.7}, 1), 1) == 1.0);

    // k at least the class population: every same-class row is a neighbour.
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        const auto p = oracle::random_pool(rng, 4, 3, 3);
        std::size_t cross = 0;
        for (std::size_t i = 0; i < p.n1(); ++i)
            for (std::size_t j = p.n1(); j < p.n(); ++j) cross += p.class_of(i) == p.class_of(j);
        const std::size_t k = 7;
        const auto v = half_kfn_matrix_form(p, k);
        CHECK(v.cross_count == cross);
        CHECK(v.t == doctest::Approx(double(cross) / double(p.n1() * k)));
        CHECK(half_kfn_fn_form(p, k).t == v.t);
    }
}

TEST_CASE("table invariants on random pools") {
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t k = 1 + trial % 4;
        const auto p = oracle::random_pool(rng, 1 + trial % 9, 1 + trial % 7, 2 + trial % 4);
        const auto table = intra_class_farthest_neighbors(p, k, QueryRange::All);
        const auto sizes = oracle::class_sizes(p);
        for (std::size_t i = 0; i < p.n(); ++i) {
            const auto& list = table.neighbors(i);
            CHECK(list.size() == std::min(k, sizes[p.class_of(i)] - 1));
            std::vector<std::size_t> got;
            for (std::size_t r = 0; r < list.size(); ++r) {
                CHECK(list[r].index != i);
                CHECK(p.class_of(list[r].index) == p.class_of(i));
                if (r) CHECK(list[r].distance <= list[r - 1].distance);
                got.push_back(list[r].index);
            }
            CHECK(got == oracle::farthest(p, i, k));
        }
        const auto v = half_kfn(p, k);
        CHECK(v.t >= 0.0);
        CHECK(v.t <= 1.0);
        const double count = v.t * double(p.n1() * k);
        CHECK(std::abs(count - std::round(count)) < 1e-9);
        CHECK(v.t == oracle::half_kfn(p, k));
    }
}

TEST_CASE("matrix and farthest-neighbour forms agree") {
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t k = 1 + trial % 3;
        const auto p = oracle::random_pool(rng, 10, 10, 3);
        const auto a = half_kfn_matrix_form(p, k);
        const auto b = half_kfn_fn_form(p, k);
        CHECK(a.t == b.t);
        CHECK(a.cross_count == b.cross_count);
        CHECK(half_kfn(p, k).t == a.t);
    }
}

TEST_CASE("duplicates are legal") {
    const auto p = two_d({0.9, 0.9, 0.9, 0.6}, 2);
    const auto table = intra_class_farthest_neighbors(p, 2);
    CHECK(table.neighbors(0)[0].index == 3);
    CHECK(table.neighbors(0)[1].index == 1);
    CHECK(table.neighbors(0)[1].distance == 0.0);
    // Each source query takes row 3 and then its zero-distance source twin.
    CHECK(t_of(p, 2) == 0.5);
}

TEST_CASE("exhaustive relabelling mean equals n2/(n-1)") {
    std::mt19937_64 rng(14);
    int checked = 0;
    while (checked < 20) {
        const std::size_t n = 6 + checked % 5, n1 = 2 + checked % 3, k = 1 + checked % 2;
        const auto p = oracle::random_pool(rng, n1, n - n1, 2);
        const auto sizes = oracle::class_sizes(p);
        if (!oracle::distances_distinct(p)) continue;
        bool ok = true;
        for (auto s : sizes) ok = ok && (s == 0 || s > k);
        if (!ok) continue;
        double sum = 0.0;
        std::size_t count = 0;
        oracle::for_each_split(n, n1, [&](const std::vector<std::size_t>& order) {
            sum += half_kfn(p.rearranged(order, n1), k).t;
            ++count;
        });
        CHECK(sum / double(count) == doctest::Approx(double(n - n1) / double(n - 1)).epsilon(1e-9));
        ++checked;
    }
}

TEST_CASE("within-set reordering leaves the statistic unchanged") {
    std::mt19937_64 rng(15);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n1 = 3 + trial % 6, n2 = 2 + trial % 5, k = 1 + trial % 3;
        const auto p = oracle::random_pool(rng, n1, n2, 3);
        std::vector<std::size_t> order(p.n());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::shuffle(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n1), rng);
        std::shuffle(order.begin() + static_cast<std::ptrdiff_t>(n1), order.end(), rng);
        CHECK(half_kfn(p.rearranged(order, n1), k).t == half_kfn(p, k).t);
    }
}

TEST_CASE("pushing target rows away from the class centre does not lower t") {
    // Class 0 rows on the 2-simplex edge; the target rows move toward the boundary.
    const std::vector<double> src{0.95, 0.9, 0.85, 0.8, 0.75};
    for (double shift : {0.0, 0.05, 0.1, 0.15}) {
        std::vector<double> rows;
        for (double a : src) rows.insert(rows.end(), {a, 1.0 - a});
        for (double a : {0.9, 0.8, 0.7}) rows.insert(rows.end(), {a - shift, 1.0 - a + shift});
        const PooledSample p(2, rows, src.size());
        static double previous = -1.0;
        if (shift == 0.0) previous = -1.0;
        const double t = half_kfn(p, 1).t;
        CHECK(t >= previous);
        previous = t;
    }
}

}
