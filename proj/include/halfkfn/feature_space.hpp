#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace halfkfn {

/// Allowed deviation of a softmax vector's sum from one.
inline constexpr double kSoftmaxSumTolerance = 1e-6;

/// Returns a description of why `v` is not a probability vector, or nothing
/// if it is one (L >= 2, entries in [0,1], sum within tolerance of 1).
std::optional<std::string> softmax_violation(std::span<const double> v);

/// Index of the largest entry; ties go to the smallest index.
std::size_t argmax_class(std::span<const double> v) noexcept;

/// One reduced sample: an L-dimensional probability vector.
class SoftmaxVector {
public:
    explicit SoftmaxVector(std::vector<double> values);

    std::span<const double> values() const noexcept { return values_; }
    std::size_t size() const noexcept { return values_.size(); }
    double operator[](std::size_t i) const { return values_[i]; }
    std::size_t argmax() const noexcept { return argmax_class(values_); }

    bool operator==(const SoftmaxVector&) const = default;

private:
    std::vector<double> values_;
};

inline std::size_t argmax_class(const SoftmaxVector& v) noexcept {
    return argmax_class(v.values());
}

enum class Origin { Source, Target };

const char* to_string(Origin origin) noexcept;

/// Ordered, non-empty collection of softmax vectors of one dimension, stored
/// row-major. Every row satisfies the SoftmaxVector invariants.
class SampleSet {
public:
    SampleSet(std::size_t dim, std::vector<double> row_major,
              Origin origin = Origin::Source);

    static SampleSet from_vectors(const std::vector<SoftmaxVector>& vectors,
                                  Origin origin = Origin::Source);

    std::size_t size() const noexcept { return data_.size() / dim_; }
    std::size_t dim() const noexcept { return dim_; }
    Origin origin() const noexcept { return origin_; }

    std::span<const double> row(std::size_t i) const noexcept {
        return {data_.data() + i * dim_, dim_};
    }
    SoftmaxVector vector(std::size_t i) const;
    const std::vector<double>& data() const noexcept { return data_; }

    SampleSet with_origin(Origin origin) const;

    bool operator==(const SampleSet&) const = default;

private:
    std::size_t dim_;
    std::vector<double> data_;
    Origin origin_;
};

/// Reads a softmax CSV: header `y1,...,yL` with an optional trailing `label`
/// column (ignored). Rows within tolerance of summing to one but not exactly
/// normalized are rescaled; anything else is rejected with its row number.
SampleSet load_softmax_vectors(const std::filesystem::path& path,
                               Origin origin = Origin::Source);

/// Writes `set` in the format read by load_softmax_vectors, using
/// shortest round-trip formatting so a reload is bit-identical.
void save_softmax_vectors(const SampleSet& set,
                          const std::filesystem::path& path);

/// Dense feature matrix, one sample per row.
using FeatureMatrix = Eigen::MatrixXd;

/// Multinomial softmax regression: probabilities = softmax(x * weights + bias).
struct ReducerModel {
    Eigen::MatrixXd weights;  // C x L
    Eigen::RowVectorXd bias;  // L
    std::vector<std::pair<int, double>> loss_trace;

    std::size_t input_dim() const noexcept { return static_cast<std::size_t>(weights.rows()); }
    std::size_t num_classes() const noexcept { return static_cast<std::size_t>(weights.cols()); }
};

struct TrainOptions {
    double learning_rate = 0.001;
    int iterations = 20000;
    std::uint64_t seed = 0;
};

/// Full-batch gradient descent on mean cross-entropy. Labels are class
/// indices in [0, L) with L = max label + 1. The loss is recorded every
/// max(1, iterations / 80) steps.
ReducerModel train_reducer(const FeatureMatrix& features,
                           std::span<const int> labels,
                           const TrainOptions& options);

/// Class probabilities for each row (N x L).
Eigen::MatrixXd predict_proba(const ReducerModel& model,
                              const FeatureMatrix& features);

/// Applies the model to every row of `features`.
SampleSet reduce(const ReducerModel& model, const FeatureMatrix& features,
                 Origin origin = Origin::Source);

/// Fraction of rows whose argmax matches the label.
double accuracy(const ReducerModel& model, const FeatureMatrix& features,
                std::span<const int> labels);

}  // namespace halfkfn
