#include "apd/proximity.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

namespace apd {

RankNeighbors rank_neighbors(const FeatureSet& fs, std::size_t R) {
    const std::size_t L = fs.size();
    if (L < 2) throw std::invalid_argument("rank_neighbors: need at least 2 features, got " + std::to_string(L));
    if (R < 1) throw std::invalid_argument("rank_neighbors: R must be >= 1");

    const std::size_t take = std::min(R, L - 1);
    RankNeighbors rn;
    rn.R = R;
    rn.neighbors.resize(L);

    struct Cand {
        double sq;
        std::uint32_t index;
    };
    std::vector<Cand> cand;
    cand.reserve(L - 1);
    for (std::size_t l = 0; l < L; ++l) {
        cand.clear();
        const auto& p = fs.features[l].position;
        for (std::size_t m = 0; m < L; ++m) {
            if (m == l) continue;
            const auto& q = fs.features[m].position;
            const double dr = p.row - q.row, dc = p.col - q.col;
            cand.push_back({dr * dr + dc * dc, static_cast<std::uint32_t>(m)});
        }
        std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(take), cand.end(),
                          [](const Cand& a, const Cand& b) { return a.sq < b.sq || (a.sq == b.sq && a.index < b.index); });
        auto& out = rn.neighbors[l];
        out.resize(take);
        for (std::size_t r = 0; r < take; ++r) out[r] = cand[r].index;
    }
    return rn;
}

VwHistogram vw_histogram(const SoftAssignment& sa, std::size_t K, bool normalize) {
    VwHistogram h;
    h.bins.assign(K, 0.0);
    for (const auto& f : sa.features)
        for (const auto& ww : f) {
            if (ww.word >= K) throw std::out_of_range("vw_histogram: word index " + std::to_string(ww.word) + " >= K");
            h.bins[ww.word] += ww.weight;
        }
    if (normalize) {
        const double total = std::accumulate(h.bins.begin(), h.bins.end(), 0.0);
        if (total > 0)
            for (auto& b : h.bins) b /= total;
        h.normalized = true;
    }
    return h;
}

ProximityDistribution::ProximityDistribution(std::size_t K, std::size_t R) : K_(K), R_(R) {}

ProximityDistribution ProximityDistribution::from_entries(std::size_t K, std::size_t R, std::vector<std::uint64_t> keys,
                                                          std::vector<double> values) {
    if (values.size() != keys.size() * R) throw std::invalid_argument("ProximityDistribution: value count mismatch");
    std::vector<std::size_t> order(keys.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return keys[a] < keys[b]; });

    ProximityDistribution pd(K, R);
    pd.keys_.reserve(keys.size());
    pd.values_.reserve(values.size());
    for (std::size_t s : order) {
        if (keys[s] >= static_cast<std::uint64_t>(K) * K) throw std::out_of_range("ProximityDistribution: key out of range");
        if (!pd.keys_.empty() && pd.keys_.back() == keys[s]) throw std::invalid_argument("ProximityDistribution: duplicate key");
        pd.keys_.push_back(keys[s]);
        pd.values_.insert(pd.values_.end(), values.begin() + static_cast<std::ptrdiff_t>(s * R),
                          values.begin() + static_cast<std::ptrdiff_t>((s + 1) * R));
    }
    return pd;
}

double ProximityDistribution::at(std::uint32_t i, std::uint32_t j, std::size_t r) const {
    if (i >= K_ || j >= K_ || r < 1 || r > R_) throw std::out_of_range("ProximityDistribution::at: index out of range");
    const auto it = std::lower_bound(keys_.begin(), keys_.end(), key_of(i, j));
    if (it == keys_.end() || *it != key_of(i, j)) return 0.0;
    return values_[static_cast<std::size_t>(it - keys_.begin()) * R_ + (r - 1)];
}

double ProximityDistribution::mass_at(std::size_t r) const {
    if (r < 1 || r > R_) throw std::out_of_range("ProximityDistribution::mass_at: rank out of range");
    long double acc = 0;
    for (std::size_t s = 0; s < keys_.size(); ++s) acc += values_[s * R_ + (r - 1)];
    return static_cast<double>(acc);
}

ProximityDistribution ProximityDistribution::normalized() const {
    ProximityDistribution out = *this;
    const double mass = total_mass();
    if (mass > 0)
        for (auto& v : out.values_) v /= mass;
    return out;
}

ProximityDistribution build_distribution(const SoftAssignment& sa, const RankNeighbors& rn, std::size_t K, std::size_t R,
                                         const BuildOptions& opts) {
    if (sa.size() != rn.neighbors.size())
        throw std::invalid_argument("build_distribution: assignment has " + std::to_string(sa.size()) +
                                    " features but neighbour table has " + std::to_string(rn.neighbors.size()));
    if (rn.R != R) throw std::invalid_argument("build_distribution: R does not match the neighbour table");
    if (R < 1 || K < 1) throw std::invalid_argument("build_distribution: K and R must be >= 1");

    std::unordered_map<std::uint64_t, std::size_t> slot_of;
    std::vector<std::uint64_t> keys;
    std::vector<double> cells;  // per-rank (non-cumulative) until the prefix sum

    auto add = [&](const std::vector<WordWeight>& a, const std::vector<WordWeight>& b, std::size_t rank_index) {
        for (const auto& wi : a) {
            if (wi.word >= K) throw std::out_of_range("build_distribution: word index >= K");
            for (const auto& wj : b) {
                if (wj.word >= K) throw std::out_of_range("build_distribution: word index >= K");
                const std::uint64_t key = static_cast<std::uint64_t>(wi.word) * K + wj.word;
                auto [it, inserted] = slot_of.try_emplace(key, keys.size());
                if (inserted) {
                    keys.push_back(key);
                    cells.resize(cells.size() + R, 0.0);
                }
                cells[it->second * R + rank_index] += wi.weight * wj.weight;
            }
        }
    };

    for (std::size_t l = 0; l < sa.size(); ++l) {
        const auto& nb = rn.neighbors[l];
        if (nb.size() > R) throw std::invalid_argument("build_distribution: neighbour list longer than R");
        if (opts.include_self_pairs) add(sa.features[l], sa.features[l], 0);
        for (std::size_t rho = 0; rho < nb.size(); ++rho) {
            if (nb[rho] >= sa.size()) throw std::out_of_range("build_distribution: neighbour index out of range");
            add(sa.features[l], sa.features[nb[rho]], rho);
        }
    }

    for (std::size_t s = 0; s < keys.size(); ++s)
        for (std::size_t r = 1; r < R; ++r) cells[s * R + r] += cells[s * R + r - 1];

    return ProximityDistribution::from_entries(K, R, std::move(keys), std::move(cells));
}

}  // namespace apd
