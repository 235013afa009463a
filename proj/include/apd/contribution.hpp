#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "apd/codebook.hpp"

namespace apd {

/// Visual word contribution function variants.
///   Hard:         indicator of the nearest word.
///   Kernel:       Gaussian of the word distance, for every word.
///   Uncertainty:  Kernel weights normalized over the whole vocabulary.
///   Plausibility: Gaussian of the distance, granted to the nearest word only.
enum class Variant { Hard, Kernel, Uncertainty, Plausibility };

const char* to_string(Variant v);
/// Accepts the long names plus the short forms "ker", "unc", "pla".
Variant parse_variant(const std::string& name);

struct ContributionMode {
    Variant variant = Variant::Hard;
    double sigma = 1.0;     // Gaussian bandwidth, ignored by Hard
    std::size_t top_t = 5;  // max retained words per feature
    double epsilon = 1e-8;  // weights below this are dropped after truncation

    void validate() const;
};

struct WordWeight {
    std::uint32_t word;
    double weight;

    friend bool operator==(const WordWeight&, const WordWeight&) = default;
};

/// Per-feature sparse weights, each list sorted by word index.
struct SoftAssignment {
    std::vector<std::vector<WordWeight>> features;

    std::size_t size() const { return features.size(); }
};

/// K_sigma(x) = exp(-x^2 / (2 sigma^2)) / (sqrt(2 pi) sigma).
double gaussian(double sigma, double x);

/// Sparse contribution weights of one descriptor, sorted by word index.
/// Never empty: if flooring removes everything, the largest pre-floor weight is kept.
std::vector<WordWeight> contribute(const Codebook& cb, std::span<const double> x, const ContributionMode& mode);

SoftAssignment assign_all(const Codebook& cb, const FeatureSet& fs, const ContributionMode& mode);

}  // namespace apd
