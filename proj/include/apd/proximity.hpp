#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "apd/contribution.hpp"
#include "apd/features.hpp"

namespace apd {

/// For every feature, the indices of its spatially nearest other features,
/// nearest first (ties by smaller index). Entry ρ (0-based) has rank ρ+1.
struct RankNeighbors {
    std::size_t R = 0;
    std::vector<std::vector<std::uint32_t>> neighbors;
};

RankNeighbors rank_neighbors(const FeatureSet& fs, std::size_t R);

struct VwHistogram {
    std::vector<double> bins;
    bool normalized = false;
};

/// Bin i = sum over features of the weight on word i; optionally L1-normalized.
VwHistogram vw_histogram(const SoftAssignment& sa, std::size_t K, bool normalize = false);

/// Sparse K×K×R cumulative co-occurrence tensor. Keys (i,j) are stored sorted;
/// each key owns a length-R vector whose element r-1 is H(i,j,r). Absent keys are
/// identically zero.
class ProximityDistribution {
public:
    ProximityDistribution() = default;
    ProximityDistribution(std::size_t K, std::size_t R);

    /// Builds from unsorted keys and their cumulative vectors. Keys must be unique.
    static ProximityDistribution from_entries(std::size_t K, std::size_t R, std::vector<std::uint64_t> keys,
                                              std::vector<double> values);

    std::size_t K() const { return K_; }
    std::size_t R() const { return R_; }
    std::size_t key_count() const { return keys_.size(); }

    std::uint64_t key_of(std::uint32_t i, std::uint32_t j) const { return static_cast<std::uint64_t>(i) * K_ + j; }
    std::uint32_t key_i(std::size_t slot) const { return static_cast<std::uint32_t>(keys_[slot] / K_); }
    std::uint32_t key_j(std::size_t slot) const { return static_cast<std::uint32_t>(keys_[slot] % K_); }

    std::span<const std::uint64_t> keys() const { return keys_; }
    std::span<const double> values() const { return values_; }
    std::span<const double> cumulative(std::size_t slot) const { return {values_.data() + slot * R_, R_}; }

    /// H(i,j,r) with 0-based word indices and r in 1..R.
    double at(std::uint32_t i, std::uint32_t j, std::size_t r) const;
    /// Sum over (i,j) of H(i,j,r).
    double mass_at(std::size_t r) const;
    /// Sum over (i,j) of H(i,j,R).
    double total_mass() const { return R_ == 0 ? 0.0 : mass_at(R_); }

    /// Copy with every cell divided by total_mass (unchanged when the mass is zero).
    ProximityDistribution normalized() const;

    friend bool operator==(const ProximityDistribution&, const ProximityDistribution&) = default;

private:
    std::size_t K_ = 0;
    std::size_t R_ = 0;
    std::vector<std::uint64_t> keys_;
    std::vector<double> values_;
};

struct BuildOptions {
    /// Count each feature as its own co-occurrence at every rank.
    bool include_self_pairs = false;
};

/// H(i,j,r) = sum over ordered pairs (l,m), m among the r nearest neighbours of l,
/// of F(i, x_l)·F(j, x_m). Both factors come from the same contribution mode.
ProximityDistribution build_distribution(const SoftAssignment& sa, const RankNeighbors& rn, std::size_t K,
                                         std::size_t R, const BuildOptions& opts = {});

}  // namespace apd
