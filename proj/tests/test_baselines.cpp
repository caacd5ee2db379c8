#include "doctest.h"
#include "oracles.hpp"

#include "halfkfn/baselines.hpp"
#include "halfkfn/error.hpp"

#include <cmath>
#include <random>

using namespace halfkfn;

namespace {

// Pool of 2-D rows (a, 1-a) from first coordinates.
PooledSample line(const std::vector<double>& coords, std::size_t n1) {
    std::vector<double> rows;
    for (double a : coords) rows.insert(rows.end(), {a, 1.0 - a});
    return PooledSample(2, rows, n1);
}

bool close(double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(b)); }

}  // namespace

TEST_SUITE("baselines") {

TEST_CASE("orientation per statistic") {
    CHECK(orientation_of(BaselineName::Knn) == Orientation::LargerIsDrift);
    CHECK(orientation_of(BaselineName::Mmd) == Orientation::LargerIsDrift);
    CHECK(orientation_of(BaselineName::Energy) == Orientation::LargerIsDrift);
    CHECK(orientation_of(BaselineName::Fr) == Orientation::SmallerIsDrift);
    CHECK(std::string(to_string(BaselineName::Fr)) == "fr");
}

TEST_CASE("brute-force oracles on random pools") {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 4 + trial % 9;  // 4..12
        const std::size_t n1 = 2 + trial % (n - 3);
        const auto p = oracle::random_pool(rng, n1, n - n1, 2 + trial % 3);
        const std::size_t k = 1 + trial % 3;

        CHECK(knn_statistic(p, k).value == oracle::knn(p, k));
        CHECK(fr_statistic(p).value == oracle::fr(p));
        CHECK(close(energy_statistic(p).value, oracle::energy(p)));
        const double h = oracle::median_distance(p);
        CHECK(median_pairwise_distance(p) == h);
        CHECK(close(mmd_statistic(p).value, oracle::mmd2(p, h)));
        CHECK(close(mmd_statistic(p, Bandwidth::fixed_value(0.3)).value, oracle::mmd2(p, 0.3)));

        const auto tree = euclidean_mst(p);
        const auto ref = oracle::kruskal(p);
        REQUIRE(tree.size() == ref.size());
        std::vector<std::pair<std::size_t, std::size_t>> a(tree), b;
        for (const auto& e : ref) b.emplace_back(e.a, e.b);
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());
        CHECK(a == b);
        const double cross = fr_statistic(p).value;
        CHECK(cross >= 0.0);
        CHECK(cross <= double(n - 1));
    }
}

TEST_CASE("MST has minimum length among all spanning trees") {
    std::mt19937_64 rng(32);
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t n = 3 + trial % 4;  // up to 6 points, 15 edges
        const auto p = oracle::random_pool(rng, n / 2, n - n / 2, 3);
        double len = 0.0;
        for (const auto& [a, b] : euclidean_mst(p)) len += std::sqrt(oracle::sq_dist(p, a, b));
        CHECK(len == doctest::Approx(oracle::min_spanning_length_exhaustive(p)).epsilon(1e-12));
    }
}

TEST_CASE("knn examples") {
    CHECK(knn_statistic(line({0.99, 0.98, 0.97, 0.02, 0.01, 0.03}, 3), 1).value == 1.0);
    // Sorted order alternates S,T,S,T,S,T with growing gaps, so every
    // nearest neighbour sits in the other set.
    CHECK(knn_statistic(line({0.1, 0.13, 0.20, 0.11, 0.16, 0.25}, 3), 1).value == 0.0);
    CHECK_THROWS_AS(knn_statistic(line({0.1, 0.9}, 1), 2), Error);
}

TEST_CASE("mmd examples") {
    const auto same = line({0.1, 0.4, 0.8, 0.1, 0.4, 0.8}, 3);
    CHECK(mmd_statistic(same).value <= 1e-9);

    // Two point masses: source twice at a, target twice at b.
    const double a = 0.9, b = 0.6;
    const auto masses = line({a, a, b, b}, 2);
    const double d2 = 2 * (a - b) * (a - b);
    const double kab = std::exp(-d2 / 2.0);
    CHECK(mmd_statistic(masses, Bandwidth::fixed_value(1.0)).value == doctest::Approx(2.0 - 2.0 * kab));

    CHECK_THROWS_AS(mmd_statistic(line({0.7, 0.2, 0.4}, 1)), Error);
    try {
        mmd_statistic(line({0.7, 0.7, 0.7, 0.7, 0.7}, 2));
        FAIL("expected degenerate bandwidth");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::DegenerateBandwidth);
    }
    CHECK_NOTHROW(mmd_statistic(line({0.7, 0.7, 0.7, 0.7}, 2), Bandwidth::fixed_value(0.5)));
}

TEST_CASE("energy examples") {
    CHECK(std::abs(energy_statistic(line({0.1, 0.4, 0.8, 0.1, 0.4, 0.8}, 3)).value) < 1e-9);
    // One source and one target row exactly 1 apart, the 1-D {0} vs {1} case.
    const PooledSample unit(2, {0.5 - 0.5 / std::sqrt(2.0), 0.5 + 0.5 / std::sqrt(2.0),
                                0.5 + 0.5 / std::sqrt(2.0), 0.5 - 0.5 / std::sqrt(2.0)},
                            1);
    CHECK(energy_statistic(unit).value == doctest::Approx(1.0));
}

TEST_CASE("fr examples") {
    CHECK(fr_statistic(line({0.9, 0.2}, 1)).value == 1.0);
    CHECK(fr_statistic(line({0.99, 0.98, 0.97, 0.02, 0.01, 0.03}, 3)).value == 1.0);
    // Alternating sorted chain: every edge crosses.
    CHECK(fr_statistic(line({0.1, 0.3, 0.5, 0.2, 0.4, 0.6}, 3)).value == 5.0);
}

TEST_CASE("within-set reordering leaves baselines unchanged") {
    std::mt19937_64 rng(33);
    for (int trial = 0; trial < 50; ++trial) {
        const auto p = oracle::random_pool(rng, 6, 5, 3);
        std::vector<std::size_t> order(p.n());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::shuffle(order.begin(), order.begin() + 6, rng);
        std::shuffle(order.begin() + 6, order.end(), rng);
        const auto q = p.rearranged(order, 6);
        CHECK(knn_statistic(q, 1).value == knn_statistic(p, 1).value);
        CHECK(fr_statistic(q).value == fr_statistic(p).value);
        CHECK(energy_statistic(q).value == doctest::Approx(energy_statistic(p).value).epsilon(1e-12));
        CHECK(mmd_statistic(q).value == doctest::Approx(mmd_statistic(p).value).epsilon(1e-12));
    }
}

TEST_CASE("baseline permutation tests") {
    std::mt19937_64 rng(34);
    const auto p = oracle::random_pool(rng, 15, 15, 3);
    const SampleSet s(3, std::vector<double>(p.data().begin(), p.data().begin() + 45));
    const SampleSet t(3, std::vector<double>(p.data().begin() + 45, p.data().end()), Origin::Target);
    for (auto name : {BaselineName::Knn, BaselineName::Mmd, BaselineName::Energy, BaselineName::Fr}) {
        PermutationConfig cfg;
        cfg.seed = 3;
        const auto r = baseline_permutation_test(s, t, name, {}, cfg);
        CHECK(r.method == to_string(name));
        CHECK(r.p_value * 100.0 == std::round(r.p_value * 100.0));
        CHECK(r.p_value == baseline_permutation_test(s, t, name, {}, cfg).p_value);
    }
    // Separated samples: FR is small and rejects in its own direction.
    std::vector<double> a, b;
    std::uniform_real_distribution<double> u(0.0, 0.05);
    for (int i = 0; i < 20; ++i) {
        const double x = 0.95 + u(rng), y = 0.3 + u(rng);
        a.insert(a.end(), {x, 1 - x});
        b.insert(b.end(), {y, 1 - y});
    }
    PermutationConfig cfg;
    const auto fr = baseline_permutation_test(SampleSet(2, a), SampleSet(2, b, Origin::Target), BaselineName::Fr, {}, cfg);
    CHECK(fr.statistic == 1.0);
    CHECK(fr.drift());
}

}
