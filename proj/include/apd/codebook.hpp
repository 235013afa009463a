#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "apd/features.hpp"

namespace apd {

/// Visual vocabulary learned by k-means. Word indices are 0-based.
struct Codebook {
    std::vector<Descriptor> centroids;
    std::uint64_t trained_on = 0;
    /// Mean distance from the training samples to their nearest centroid;
    /// the default Gaussian bandwidth for soft assignment.
    double mean_nn_dist = 0;

    std::size_t size() const { return centroids.size(); }
    std::size_t dim() const { return centroids.empty() ? 0 : centroids.front().size(); }
};

/// Euclidean distance. Throws on length mismatch.
double distance(std::span<const double> v, std::span<const double> x);

/// Index of the nearest centroid, smallest index on ties.
std::size_t assign_hard(const Codebook& cb, std::span<const double> x);

struct KMeansOptions {
    std::size_t k = 200;
    int max_iter = 100;
    std::uint64_t seed = 1;
};

struct KMeansTrace {
    std::vector<double> inertia;  // after each Lloyd iteration
    int iterations = 0;
};

/// Lloyd's algorithm with k-means++ seeding. Empty clusters are re-seeded with
/// the sample currently farthest from its assigned centroid.
Codebook kmeans(const std::vector<Descriptor>& samples, const KMeansOptions& opts, KMeansTrace* trace = nullptr);

}  // namespace apd
