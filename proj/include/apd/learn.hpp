#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "apd/kernels.hpp"

namespace apd {

enum class ScoreKind { Similarity, Distance };

/// Majority vote over the k best-scoring training items (largest similarity or
/// smallest distance; score ties go to the smaller index). Label ties go to the
/// tied label whose best neighbour ranks highest.
std::string knn_classify(std::span<const double> scores, const std::vector<std::string>& labels, std::size_t k, ScoreKind kind);

struct SmoOptions {
    double C = 1.0;
    double tol = 1e-3;
    /// Cap on pair updates is max_passes × n.
    std::size_t max_passes = 10000;
};

struct SmoTrace {
    std::vector<double> dual_objective;  // before the first update, then after each
    std::size_t iterations = 0;
    bool converged = false;
};

/// Binary kernel SVM: decision(x) = sum_s coef_s · k(x, x_s) + bias, coef_s = alpha_s·y_s.
struct BinarySvmModel {
    std::vector<std::size_t> support;  // indices into the training set
    std::vector<double> coef;
    double bias = 0;
    double C = 1;
    std::string positive;
    std::string negative;

    double decision(std::span<const double> kernel_row) const;
};

/// Solves the SVM dual on a precomputed Gram matrix by SMO with maximal-violating
/// pair selection. y holds ±1. Support indices refer to rows of `g`.
BinarySvmModel smo_train(const GramMatrix& g, std::span<const int> y, const SmoOptions& opts, SmoTrace* trace = nullptr);

struct OvoSvmModel {
    std::vector<std::string> labels;  // sorted
    std::vector<BinarySvmModel> models;
    std::size_t train_size = 0;
};

/// One binary model per unordered label pair (a < b lexicographically, a positive).
OvoSvmModel svm_train_ovo(const GramMatrix& g, const std::vector<std::string>& labels, const SmoOptions& opts, unsigned threads = 1);

struct OvoVote {
    std::string label;
    std::vector<int> votes;            // parallel to model.labels
    std::vector<double> margin_sums;   // sum of |decision| over won duels
};

OvoVote svm_vote(const OvoSvmModel& model, std::span<const double> kernel_row);

/// Majority vote; ties by larger margin sum, then lexicographically smaller label.
std::string svm_predict(const OvoSvmModel& model, std::span<const double> kernel_row);

struct CvOptions {
    std::size_t repeats = 20;
    /// Size of the random test subset per repeat; the rest trains.
    std::size_t test_count = 0;
    std::uint64_t seed = 1;
};

struct CvResult {
    std::vector<double> accuracies;
    double mean = 0;
    double stddev = 0;  // sample standard deviation (0 for a single repeat)
};

/// Returns predicted labels for `test` given a model fitted on `train` (indices
/// into the label vector).
using CvEvaluator = std::function<std::vector<std::string>(const std::vector<std::size_t>& train,
                                                           const std::vector<std::size_t>& test)>;

/// Repeated seeded random splits: each repeat tests on `test_count` random items
/// and trains on the remainder.
CvResult cross_validate(const std::vector<std::string>& labels, const CvOptions& opts, const CvEvaluator& evaluate);

}  // namespace apd
