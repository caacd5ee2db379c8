#include "halfkfn/feature_space.hpp"

#include "halfkfn/error.hpp"
#include "halfkfn/rng.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace halfkfn {

namespace {

// Rows further than this from an exact sum of one are rescaled on load.
// Rescaling lands within a few ulp of one, so a second load is a no-op.
constexpr double kRenormalizeThreshold = 1e-12;

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        auto pos = line.find(',', start);
        out.push_back(trim(line.substr(start, pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

std::optional<double> parse_double(std::string_view s) {
    double v = 0.0;
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& logits) {
    const Eigen::VectorXd row_max = logits.rowwise().maxCoeff();
    Eigen::MatrixXd out = (logits.colwise() - row_max).array().exp().matrix();
    const Eigen::ArrayXd totals = out.rowwise().sum().array();
    out.array().colwise() /= totals;
    return out;
}

}  // namespace

std::optional<std::string> softmax_violation(std::span<const double> v) {
    if (v.size() < 2) return "fewer than 2 entries";
    double sum = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!std::isfinite(v[i])) return "entry " + std::to_string(i) + " is not finite";
        if (v[i] < 0.0 || v[i] > 1.0) return "entry " + std::to_string(i) + " outside [0,1]";
        sum += v[i];
    }
    if (std::abs(sum - 1.0) > kSoftmaxSumTolerance) {
        std::ostringstream os;
        os.precision(17);
        os << "entries sum to " << sum << ", not 1";
        return os.str();
    }
    return std::nullopt;
}

std::size_t argmax_class(std::span<const double> v) noexcept {
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i] > v[best]) best = i;
    return best;
}

SoftmaxVector::SoftmaxVector(std::vector<double> values) : values_(std::move(values)) {
    if (auto why = softmax_violation(values_))
        throw Error(ErrorCode::InvalidInput, "invalid softmax vector: " + *why);
}

const char* to_string(Origin origin) noexcept {
    return origin == Origin::Source ? "source" : "target";
}

SampleSet::SampleSet(std::size_t dim, std::vector<double> row_major, Origin origin)
    : dim_(dim), data_(std::move(row_major)), origin_(origin) {
    if (dim_ < 2) throw Error(ErrorCode::InvalidInput, "sample set dimension must be at least 2");
    if (data_.empty()) throw Error(ErrorCode::InvalidInput, "sample set must be non-empty");
    if (data_.size() % dim_ != 0)
        throw Error(ErrorCode::InvalidInput, "sample set data is not a whole number of rows");
    for (std::size_t i = 0; i < size(); ++i) {
        if (auto why = softmax_violation(row(i)))
            throw Error(ErrorCode::InvalidInput,
                        "row " + std::to_string(i) + " is not a softmax vector: " + *why);
    }
}

SampleSet SampleSet::from_vectors(const std::vector<SoftmaxVector>& vectors, Origin origin) {
    if (vectors.empty()) throw Error(ErrorCode::InvalidInput, "sample set must be non-empty");
    const std::size_t dim = vectors.front().size();
    std::vector<double> data;
    data.reserve(dim * vectors.size());
    for (const auto& v : vectors) {
        if (v.size() != dim)
            throw Error(ErrorCode::InvalidInput, "softmax vectors have differing dimensions");
        data.insert(data.end(), v.values().begin(), v.values().end());
    }
    return SampleSet(dim, std::move(data), origin);
}

SoftmaxVector SampleSet::vector(std::size_t i) const {
    auto r = row(i);
    return SoftmaxVector(std::vector<double>(r.begin(), r.end()));
}

SampleSet SampleSet::with_origin(Origin origin) const {
    SampleSet copy = *this;
    copy.origin_ = origin;
    return copy;
}

SampleSet load_softmax_vectors(const std::filesystem::path& path, Origin origin) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());

    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorCode::Parse, path.string() + ": empty file");
    const auto header = split_commas(line);
    std::size_t dim = 0;
    bool has_label = false;
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (header[c] == "y" + std::to_string(c + 1)) {
            if (has_label) throw Error(ErrorCode::Parse, path.string() + ": label column must be last");
            ++dim;
        } else if (header[c] == "label" && c + 1 == header.size()) {
            has_label = true;
        } else {
            throw Error(ErrorCode::Parse, path.string() + ": unexpected header column '" +
                                              std::string(header[c]) + "'");
        }
    }
    if (dim < 2) throw Error(ErrorCode::Parse, path.string() + ": header needs columns y1..yL with L >= 2");

    const std::size_t width = dim + (has_label ? 1 : 0);
    std::vector<double> data;
    std::size_t row_index = 0;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        ++row_index;
        const auto fail = [&](const std::string& why) {
            return Error(ErrorCode::Parse, path.string() + ": row " + std::to_string(row_index) + ": " + why);
        };
        const auto fields = split_commas(line);
        if (fields.size() != width)
            throw fail("expected " + std::to_string(width) + " fields, got " + std::to_string(fields.size()));
        std::vector<double> values(dim);
        for (std::size_t c = 0; c < dim; ++c) {
            auto v = parse_double(fields[c]);
            if (!v) throw fail("malformed number '" + std::string(fields[c]) + "'");
            values[c] = *v;
        }
        if (has_label) {
            long long label = 0;
            auto f = fields[dim];
            auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), label);
            if (ec != std::errc() || ptr != f.data() + f.size())
                throw fail("malformed label '" + std::string(f) + "'");
        }
        if (auto why = softmax_violation(values)) throw fail(*why);
        const double sum = std::accumulate(values.begin(), values.end(), 0.0);
        if (std::abs(sum - 1.0) > kRenormalizeThreshold)
            for (auto& v : values) v /= sum;
        data.insert(data.end(), values.begin(), values.end());
    }
    if (data.empty()) throw Error(ErrorCode::Parse, path.string() + ": no data rows");
    return SampleSet(dim, std::move(data), origin);
}

void save_softmax_vectors(const SampleSet& set, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    for (std::size_t c = 0; c < set.dim(); ++c) out << (c ? ",y" : "y") << c + 1;
    out << '\n';
    char buf[64];
    for (std::size_t i = 0; i < set.size(); ++i) {
        auto r = set.row(i);
        for (std::size_t c = 0; c < r.size(); ++c) {
            auto res = std::to_chars(buf, buf + sizeof buf, r[c]);
            if (c) out << ',';
            out.write(buf, res.ptr - buf);
        }
        out << '\n';
    }
    if (!out) throw Error(ErrorCode::Io, "failed writing " + path.string());
}

ReducerModel train_reducer(const FeatureMatrix& features, std::span<const int> labels,
                           const TrainOptions& options) {
    const Eigen::Index n = features.rows();
    const Eigen::Index c = features.cols();
    if (n == 0 || c == 0) throw Error(ErrorCode::InvalidInput, "empty feature matrix");
    if (static_cast<std::size_t>(n) != labels.size())
        throw Error(ErrorCode::InvalidInput, "features and labels differ in length");
    if (!features.allFinite()) throw Error(ErrorCode::InvalidInput, "non-finite feature values");
    if (!(options.learning_rate > 0.0) || options.iterations < 1)
        throw Error(ErrorCode::InvalidInput, "learning rate and iteration count must be positive");
    if (std::any_of(labels.begin(), labels.end(), [](int l) { return l < 0; }))
        throw Error(ErrorCode::InvalidInput, "negative class label");

    const int num_classes = *std::max_element(labels.begin(), labels.end()) + 1;
    std::vector<bool> seen(num_classes, false);
    for (int l : labels) seen[l] = true;
    if (std::count(seen.begin(), seen.end(), true) < 2)
        throw Error(ErrorCode::DegenerateLabels, "training labels contain fewer than 2 classes");

    Eigen::MatrixXd onehot = Eigen::MatrixXd::Zero(n, num_classes);
    for (Eigen::Index i = 0; i < n; ++i) onehot(i, labels[i]) = 1.0;

    ReducerModel model;
    auto rng = make_rng(options.seed, 0);
    std::normal_distribution<double> init(0.0, 0.01);
    model.weights.resize(c, num_classes);
    for (Eigen::Index j = 0; j < num_classes; ++j)
        for (Eigen::Index i = 0; i < c; ++i) model.weights(i, j) = init(rng);
    model.bias = Eigen::RowVectorXd::Zero(num_classes);

    const int every = std::max(1, options.iterations / 80);
    const double inv_n = 1.0 / static_cast<double>(n);
    model.loss_trace.reserve(options.iterations / every + 1);

    for (int it = 1; it <= options.iterations; ++it) {
        Eigen::MatrixXd probs = softmax_rows((features * model.weights).rowwise() + model.bias);
        Eigen::MatrixXd residual = (probs - onehot) * inv_n;
        model.weights.noalias() -= options.learning_rate * (features.transpose() * residual);
        model.bias -= options.learning_rate * residual.colwise().sum();

        if (it % every == 0) {
            Eigen::MatrixXd p = softmax_rows((features * model.weights).rowwise() + model.bias);
            double loss = 0.0;
            for (Eigen::Index i = 0; i < n; ++i)
                loss -= std::log(std::max(p(i, labels[i]), 1e-300));
            model.loss_trace.emplace_back(it, loss * inv_n);
        }
    }
    return model;
}

Eigen::MatrixXd predict_proba(const ReducerModel& model, const FeatureMatrix& features) {
    if (features.cols() != model.weights.rows())
        throw Error(ErrorCode::InvalidInput,
                    "feature dimension " + std::to_string(features.cols()) +
                        " does not match model input dimension " + std::to_string(model.weights.rows()));
    if (!features.allFinite()) throw Error(ErrorCode::InvalidInput, "non-finite feature values");
    return softmax_rows((features * model.weights).rowwise() + model.bias);
}

SampleSet reduce(const ReducerModel& model, const FeatureMatrix& features, Origin origin) {
    Eigen::MatrixXd p = predict_proba(model, features);
    std::vector<double> data(static_cast<std::size_t>(p.size()));
    for (Eigen::Index i = 0; i < p.rows(); ++i)
        for (Eigen::Index j = 0; j < p.cols(); ++j) data[i * p.cols() + j] = p(i, j);
    return SampleSet(static_cast<std::size_t>(p.cols()), std::move(data), origin);
}

double accuracy(const ReducerModel& model, const FeatureMatrix& features, std::span<const int> labels) {
    Eigen::MatrixXd p = predict_proba(model, features);
    std::size_t hits = 0;
    for (Eigen::Index i = 0; i < p.rows(); ++i) {
        Eigen::RowVectorXd r = p.row(i);
        if (argmax_class(std::span<const double>(r.data(), static_cast<std::size_t>(r.size()))) ==
            static_cast<std::size_t>(labels[i]))
            ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(p.rows());
}

}  // namespace halfkfn
