#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "apd/imageio.hpp"

namespace apd {

using Descriptor = std::vector<double>;

struct Position {
    double row = 0;
    double col = 0;
};

struct LocalFeature {
    Descriptor descriptor;
    Position position;
};

struct FeatureSet {
    std::vector<LocalFeature> features;
    std::string source;

    std::size_t size() const { return features.size(); }
    std::size_t dim() const { return features.empty() ? 0 : features.front().descriptor.size(); }
};

struct RawPatch {
    Descriptor values;  // row-major, per-patch mean removed
    Position center;
};

/// Dense grid of `patch`×`patch` windows, fully inside the image, with the
/// top-left corners stepping by `stride`. Each descriptor has its own mean
/// subtracted.
std::vector<RawPatch> extract_patches(const GrayImage& img, int patch, int stride);

/// PCA projection. `basis` is d_raw × d, stored column-major: column k occupies
/// [k*d_raw, (k+1)*d_raw).
struct PcaModel {
    std::size_t raw_dim = 0;
    std::size_t dim = 0;
    std::vector<double> mean;
    std::vector<double> basis;
    std::vector<double> explained_variance;

    std::span<const double> component(std::size_t k) const { return {basis.data() + k * raw_dim, raw_dim}; }
};

/// Raised when the sample covariance has fewer than `d` nonzero eigenvalues.
class DegenerateCovariance : public std::runtime_error {
public:
    DegenerateCovariance(std::size_t rank, std::size_t requested);
    std::size_t rank;
};

/// Fits PCA on the rows of `samples`. Components are the top-`d` eigenvectors of
/// the (1/n) sample covariance, sign-fixed so that each column's largest-magnitude
/// entry is nonnegative.
PcaModel fit_pca(const std::vector<Descriptor>& samples, std::size_t d);

Descriptor transform(const PcaModel& model, std::span<const double> raw);

/// mean + basis·reduced; the left inverse of transform on the principal subspace.
Descriptor inverse_transform(const PcaModel& model, std::span<const double> reduced);

FeatureSet extract_features(const GrayImage& img, int patch, int stride, const PcaModel& model, std::string source = {});

/// Uniform subsample without replacement of at most `max_count` items, returned in
/// ascending index order.
std::vector<std::size_t> subsample_indices(std::size_t n, std::size_t max_count, std::uint64_t seed);

}  // namespace apd
