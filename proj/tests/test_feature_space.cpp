#include "doctest.h"
#include "test_support.hpp"

#include "halfkfn/error.hpp"
#include "halfkfn/feature_space.hpp"
#include "halfkfn/harness.hpp"
#include "halfkfn/rng.hpp"

#include <cmath>
#include <fstream>
#include <random>

using namespace halfkfn;

TEST_SUITE("feature_space") {

TEST_CASE("argmax breaks ties toward the smallest index") {
    CHECK(argmax_class(std::vector<double>{0.2, 0.5, 0.3}) == 1);
    CHECK(argmax_class(std::vector<double>{0.5, 0.5}) == 0);
    CHECK(argmax_class(std::vector<double>{1.0 / 3, 1.0 / 3, 1.0 / 3}) == 0);
    CHECK(SoftmaxVector({0.1, 0.45, 0.45}).argmax() == 1);
}

TEST_CASE("softmax vector invariants") {
    CHECK_NOTHROW(SoftmaxVector({0.25, 0.75}));
    CHECK_NOTHROW(SoftmaxVector({0.5, 0.5 + 5e-7}));
    CHECK_THROWS_AS(SoftmaxVector({1.0}), Error);
    CHECK_THROWS_AS(SoftmaxVector({0.5, 0.6}), Error);
    CHECK_THROWS_AS(SoftmaxVector({-0.1, 1.1}), Error);
    CHECK_THROWS_AS(SoftmaxVector({NAN, 1.0}), Error);
    CHECK(softmax_violation(std::vector<double>{0.3, 0.7}) == std::nullopt);
}

TEST_CASE("sample sets reject mixed dimensions and empty input") {
    CHECK_THROWS_AS(SampleSet(2, {}), Error);
    CHECK_THROWS_AS(SampleSet(2, {0.5, 0.5, 0.1}), Error);
    CHECK_THROWS_AS(SampleSet::from_vectors({SoftmaxVector({0.5, 0.5}), SoftmaxVector({0.2, 0.3, 0.5})}), Error);
    SampleSet s(2, {0.9, 0.1, 0.2, 0.8}, Origin::Target);
    CHECK(s.size() == 2);
    CHECK(s.origin() == Origin::Target);
    CHECK(s.vector(1).argmax() == 1);
}

TEST_CASE("csv parsing") {
    test_support::TempDir dir;

    SUBCASE("two rows") {
        const auto p = dir.write("a.csv", "y1,y2\n0.9,0.1\n0.2,0.8\n");
        const auto s = load_softmax_vectors(p);
        REQUIRE(s.size() == 2);
        CHECK(s.dim() == 2);
        CHECK(s.row(0)[0] == 0.9);
        CHECK(s.row(1)[1] == 0.8);
    }
    SUBCASE("label column is ignored") {
        const auto p = dir.write("b.csv", "y1,y2,y3,label\n0.2,0.5,0.3,0\n0.6,0.2,0.2,2\n");
        const auto s = load_softmax_vectors(p);
        CHECK(s.dim() == 3);
        CHECK(s.vector(0).argmax() == 1);
    }
    SUBCASE("sum violation names the row") {
        const auto p = dir.write("c.csv", "y1,y2\n0.9,0.1\n0.5,0.6\n");
        try {
            load_softmax_vectors(p);
            FAIL("expected a parse error");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::Parse);
            CHECK(std::string(e.what()).find("row 2") != std::string::npos);
        }
    }
    SUBCASE("malformed rows") {
        CHECK_THROWS_AS(load_softmax_vectors(dir.write("d.csv", "y1,y2\n0.9,abc\n")), Error);
        CHECK_THROWS_AS(load_softmax_vectors(dir.write("e.csv", "y1,y2\n0.9\n")), Error);
        CHECK_THROWS_AS(load_softmax_vectors(dir.write("f.csv", "a,b\n0.9,0.1\n")), Error);
        CHECK_THROWS_AS(load_softmax_vectors(dir.write("g.csv", "y1,y2\n")), Error);
    }
    SUBCASE("missing file") {
        try {
            load_softmax_vectors(dir.path / "absent.csv");
            FAIL("expected an error");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::Io);
        }
    }
    SUBCASE("round trip is bit-identical") {
        std::mt19937_64 rng(5);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        std::vector<double> data;
        for (int i = 0; i < 3000; ++i) {
            double a = u(rng), b = u(rng), c = u(rng);
            const double s = a + b + c;
            data.insert(data.end(), {a / s, b / s, c / s});
        }
        const SampleSet original(3, data);
        save_softmax_vectors(original, dir.path / "rt.csv");
        const auto loaded = load_softmax_vectors(dir.path / "rt.csv");
        CHECK(loaded == original);
        save_softmax_vectors(loaded, dir.path / "rt2.csv");
        CHECK(test_support::slurp(dir.path / "rt.csv") == test_support::slurp(dir.path / "rt2.csv"));
    }
}

TEST_CASE("zero model gives the uniform vector") {
    ReducerModel m;
    m.weights = Eigen::MatrixXd::Zero(4, 3);
    m.bias = Eigen::RowVectorXd::Zero(3);
    std::mt19937_64 rng(1);
    std::normal_distribution<double> g(0.0, 10.0);
    FeatureMatrix x(20, 4);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = g(rng);
    const auto s = reduce(m, x);
    REQUIRE(s.size() == 20);
    for (std::size_t i = 0; i < s.size(); ++i)
        for (double v : s.row(i)) CHECK(v == doctest::Approx(1.0 / 3).epsilon(1e-15));
}

TEST_CASE("dominant logit decides the class and outputs stay valid") {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> g(0.0, 3.0);
    for (int trial = 0; trial < 50; ++trial) {
        ReducerModel m;
        m.weights = Eigen::MatrixXd::Identity(4, 4) * 50.0;
        m.bias = Eigen::RowVectorXd::Zero(4);
        FeatureMatrix x = FeatureMatrix::Zero(1, 4);
        const int hot = trial % 4;
        x(0, hot) = 1.0;
        CHECK(reduce(m, x).vector(0).argmax() == static_cast<std::size_t>(hot));

        // Random models with extreme logits still produce valid vectors.
        ReducerModel r;
        r.weights = Eigen::MatrixXd(3, 5);
        for (Eigen::Index i = 0; i < r.weights.size(); ++i) r.weights.data()[i] = g(rng) * 100.0;
        r.bias = Eigen::RowVectorXd::Zero(5);
        FeatureMatrix y(7, 3);
        for (Eigen::Index i = 0; i < y.size(); ++i) y.data()[i] = g(rng);
        const auto s = reduce(r, y);
        CHECK(s.size() == 7);
        for (std::size_t i = 0; i < s.size(); ++i) CHECK(softmax_violation(s.row(i)) == std::nullopt);
    }
}

TEST_CASE("dimension mismatch is rejected") {
    ReducerModel m;
    m.weights = Eigen::MatrixXd::Zero(4, 3);
    m.bias = Eigen::RowVectorXd::Zero(3);
    CHECK_THROWS_AS(reduce(m, FeatureMatrix::Zero(2, 5)), Error);
}

TEST_CASE("training error paths") {
    FeatureMatrix x = FeatureMatrix::Ones(4, 2);
    std::vector<int> one_class{0, 0, 0, 0};
    try {
        train_reducer(x, one_class, {});
        FAIL("expected degenerate labels");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::DegenerateLabels);
    }
    std::vector<int> labels{0, 1, 0, 1};
    x(1, 1) = INFINITY;
    try {
        train_reducer(x, labels, {});
        FAIL("expected invalid input");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::InvalidInput);
    }
}

TEST_CASE("four-point separable toy set") {
    FeatureMatrix x(4, 2);
    x << 0.0, 0.0, 1.0, 0.5, 3.0, 3.0, 4.0, 2.5;
    const std::vector<int> y{0, 0, 1, 1};
    const auto m = train_reducer(x, y, {0.1, 5000, 3});
    CHECK(accuracy(m, x, y) == 1.0);

    // Grid-search oracle: some line separates the classes, and the learned
    // boundary w.x + b = 0 is one of them.
    const Eigen::VectorXd w = m.weights.col(1) - m.weights.col(0);
    const double b = m.bias(1) - m.bias(0);
    for (Eigen::Index i = 0; i < 4; ++i) CHECK(((x.row(i).dot(w) + b) > 0) == (y[i] == 1));
    bool separable = false;
    for (int a = 0; a < 360 && !separable; ++a) {
        const double th = a * M_PI / 180.0;
        const double c0 = std::cos(th), c1 = std::sin(th);
        double lo0 = INFINITY, hi0 = -INFINITY, lo1 = INFINITY, hi1 = -INFINITY;
        for (Eigen::Index i = 0; i < 4; ++i) {
            const double v = c0 * x(i, 0) + c1 * x(i, 1);
            (y[i] ? lo1 : lo0) = std::min(y[i] ? lo1 : lo0, v);
            (y[i] ? hi1 : hi0) = std::max(y[i] ? hi1 : hi0, v);
        }
        separable = hi0 < lo1;
    }
    CHECK(separable);
}

TEST_CASE("indistinguishable classes plateau near ln 2") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    FeatureMatrix x(200, 3);
    std::vector<int> y(200);
    for (Eigen::Index i = 0; i < 100; ++i) {
        for (Eigen::Index c = 0; c < 3; ++c) x(i, c) = x(i + 100, c) = u(rng);
        y[i] = 0;
        y[i + 100] = 1;
    }
    const auto m = train_reducer(x, y, {0.1, 4000, 1});
    REQUIRE(!m.loss_trace.empty());
    CHECK(m.loss_trace.back().second == doctest::Approx(std::log(2.0)).epsilon(1e-3));
}

TEST_CASE("simulated reducer: accuracy, trace cadence, monotone loss, determinism") {
    const auto& model = test_support::simulated_model();
    const auto train = test_support::simulated_training();
    CHECK(accuracy(model, train.features, train.labels) == 1.0);

    REQUIRE(model.loss_trace.size() == 80);
    CHECK(model.loss_trace.front().first == 250);
    CHECK(model.loss_trace.back().first == 20000);
    for (const auto& [it, loss] : model.loss_trace) CHECK(std::isfinite(loss));
    const std::size_t quarter = model.loss_trace.size() / 4;
    for (std::size_t i = quarter + 1; i < model.loss_trace.size(); ++i)
        CHECK(model.loss_trace[i].second <= model.loss_trace[i - 1].second);

    // Held-out draws from the first block are classified as class 0.
    const auto fresh = generate_simulated_training(99);
    const FeatureMatrix block0 = fresh.features.topRows(2000);
    const auto reduced = reduce(model, block0);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < reduced.size(); ++i) hits += reduced.vector(i).argmax() == 0;
    CHECK(hits >= 1980);

    const auto again = train_simulated_reducer(test_support::kModelSeed, 20000, TrainOptions{}.learning_rate);
    CHECK(again.weights == model.weights);
    CHECK(again.bias == model.bias);
}

}
