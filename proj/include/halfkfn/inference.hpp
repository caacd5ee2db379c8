#pragma once

#include "halfkfn/half_kfn.hpp"
#include "halfkfn/report.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace halfkfn {

struct PermutationConfig {
    std::size_t permutations = 100;
    double sigma_noise = 1e-8;
    double alpha = 0.05;
    std::uint64_t seed = 0;

    void validate() const;
};

enum class Sidedness { TwoSided, OneSided };

struct BootstrapConfig {
    std::size_t resamples = 10;
    std::size_t k = 1;
    double alpha = 0.05;
    std::uint64_t seed = 0;
    Sidedness sidedness = Sidedness::TwoSided;

    void validate() const;
};

struct MomentEstimate {
    double p1 = 0.0;
    double p2 = 0.0;
    double mu = 0.0;
    double sigma2 = 0.0;
};

// ---------------------------------------------------------------------------
// Permutation engine
// ---------------------------------------------------------------------------

enum class Orientation { LargerIsDrift, SmallerIsDrift };

/// A statistic evaluated on a re-split of a fixed pool. `order` lists pooled
/// indices; its first n1 entries form the source.
using SplitStatistic = std::function<double(std::span<const std::size_t> order)>;

/// Builds the split evaluator for a pool. Label-invariant work (distance
/// matrices, spanning trees) may be done here once.
using StatisticFactory = std::function<SplitStatistic(const PooledSample&)>;

struct PermutationOutcome {
    double observed = 0.0;       // statistic on the real split, without noise
    double p_value = 1.0;        // multiple of 1/P
    std::vector<double> null_values;  // permuted statistics, without noise
};

/// Observed statistic plus N(0, sigma_noise^2) is compared against P random
/// re-splits, each also perturbed. The p-value counts re-splits at least as
/// extreme in the orientation's rejection direction. Stream 0 of the seed
/// drives the observed noise; stream t drives re-split t.
PermutationOutcome run_permutation(const PooledSample& pool, const StatisticFactory& factory,
                                   Orientation orientation, const PermutationConfig& cfg);

/// Generic permutation test. Drift iff p < alpha.
TestReport permutation_test_generic(const PooledSample& pool, const StatisticFactory& factory,
                                    Orientation orientation, const PermutationConfig& cfg,
                                    const std::string& method);

/// Half-KFN permutation test. Every re-split recomputes the intra-class
/// distances from scratch.
TestReport permutation_test(const SampleSet& source, const SampleSet& target, std::size_t k,
                            const PermutationConfig& cfg);

// ---------------------------------------------------------------------------
// Moments and k = 1 probability estimates
// ---------------------------------------------------------------------------

/// Max-coordinate projections of one class together with how many of them
/// came from the source.
struct ClassProjection {
    std::vector<double> values;
    std::size_t source_count = 0;
};

struct PairProbabilities {
    double p1 = 0.0;  // mutually farthest
    double p2 = 0.0;  // sharing a farthest neighbour
};

/// Per class: values <= (min+max)/2 are "left" (alpha), the rest "right"
/// (beta); p1 = sum 1/C(m,2) w, p2 = sum (C(alpha,2)+C(beta,2))/C(m,2) w with
/// w = (source_count / n1)^2. Throws DegenerateClass for a class with fewer
/// than two members.
PairProbabilities estimate_p1_p2_from_projections(std::span<const ClassProjection> classes,
                                                  std::size_t n1);

enum class SingletonClassPolicy { Error, Drop };

/// Projects each pooled class to its max coordinate and applies
/// estimate_p1_p2_from_projections. Empty classes are ignored. Classes with a
/// single member either raise DegenerateClass or are dropped with a warning.
PairProbabilities estimate_p1_p2_k1(const PooledSample& pool,
                                    SingletonClassPolicy policy = SingletonClassPolicy::Error);

/// Large-sample moments: mu = lambda2, sigma2 = lambda2^2 p1 + lambda1 lambda2 p2.
MomentEstimate asymptotic_moments(std::size_t n1, std::size_t n2, double p1, double p2);

struct FiniteMoments {
    double mean = 0.0;
    double variance = 0.0;
};

/// Exact mean and variance of the statistic over uniformly random
/// source/target labellings of a fixed pool of n = n1 + n2 rows, given the
/// pair probabilities p1(r,s) and p2(r,s) taken over ordered pairs of
/// distinct rows. Requires n >= 4.
FiniteMoments finite_sample_moments(std::size_t n1, std::size_t n2, std::size_t k,
                                    const Eigen::MatrixXd& p1_rs, const Eigen::MatrixXd& p2_rs);

/// Variance left when every p1(r,s) and p2(r,s) is zero.
double finite_sample_residual(std::size_t n1, std::size_t n2, std::size_t k);

struct PairEventMatrices {
    Eigen::MatrixXd p1;  // P(FN_i(r) = j and FN_j(s) = i)
    Eigen::MatrixXd p2;  // P(FN_i(r) = FN_j(s))
};

/// Empirical p1(r,s), p2(r,s) over all ordered pairs of distinct pooled rows,
/// from the intra-class farthest-neighbour table of every row. Requires every
/// class to have more than k members.
PairEventMatrices pair_event_probabilities(const PooledSample& pool, std::size_t k);

// ---------------------------------------------------------------------------
// Bootstrap test
// ---------------------------------------------------------------------------

/// Standard-normal upper tail P(U > z).
double normal_upper_tail(double z) noexcept;

/// M resamples drawn with replacement from source and target separately;
/// their mean statistic is standardized with mu = lambda2 and sigma2 from
/// p1/p2 estimated once on the original pool. Two-sided: drift iff
/// P(U > |z|) < alpha/2. One-sided: drift iff P(U > z) < alpha.
TestReport bootstrap_test(const SampleSet& source, const SampleSet& target, const BootstrapConfig& cfg);

}  // namespace halfkfn
