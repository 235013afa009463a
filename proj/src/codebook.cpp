#include "apd/codebook.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "apd/random.hpp"

namespace apd {

namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) {
    double acc = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return acc;
}

struct Nearest {
    std::size_t index;
    double sq;
};

Nearest nearest(const std::vector<Descriptor>& centroids, std::span<const double> x) {
    Nearest best{0, std::numeric_limits<double>::infinity()};
    for (std::size_t i = 0; i < centroids.size(); ++i) {
        const double d = squared_distance(centroids[i], x);
        if (d < best.sq) best = {i, d};
    }
    return best;
}

std::vector<Descriptor> seed_plus_plus(const std::vector<Descriptor>& samples, std::size_t k, Rng& rng) {
    std::vector<Descriptor> centers;
    centers.reserve(k);
    centers.push_back(samples[rng.below(samples.size())]);
    std::vector<double> d2(samples.size());
    for (std::size_t s = 0; s < samples.size(); ++s) d2[s] = squared_distance(samples[s], centers[0]);

    while (centers.size() < k) {
        double total = 0;
        for (double v : d2) total += v;
        std::size_t pick = 0;
        if (total <= 0) {
            // all remaining mass is on existing centers; caller detects duplicates
            pick = rng.below(samples.size());
        } else {
            const double target = rng.uniform() * total;
            double run = 0;
            pick = samples.size() - 1;
            for (std::size_t s = 0; s < samples.size(); ++s) {
                run += d2[s];
                if (run > target && d2[s] > 0) {
                    pick = s;
                    break;
                }
            }
            while (d2[pick] <= 0 && pick > 0) --pick;
        }
        centers.push_back(samples[pick]);
        for (std::size_t s = 0; s < samples.size(); ++s) d2[s] = std::min(d2[s], squared_distance(samples[s], centers.back()));
    }
    return centers;
}

}  // namespace

double distance(std::span<const double> v, std::span<const double> x) {
    if (v.size() != x.size())
        throw std::invalid_argument("distance: length mismatch (" + std::to_string(v.size()) + " vs " + std::to_string(x.size()) + ")");
    return std::sqrt(squared_distance(v, x));
}

std::size_t assign_hard(const Codebook& cb, std::span<const double> x) {
    if (cb.centroids.empty()) throw std::invalid_argument("assign_hard: empty codebook");
    if (x.size() != cb.dim()) throw std::invalid_argument("assign_hard: descriptor length mismatch");
    return nearest(cb.centroids, x).index;
}

Codebook kmeans(const std::vector<Descriptor>& samples, const KMeansOptions& opts, KMeansTrace* trace) {
    const std::size_t k = opts.k;
    if (k < 2) throw std::invalid_argument("kmeans: K must be >= 2");
    if (samples.size() < k)
        throw std::invalid_argument("kmeans: " + std::to_string(samples.size()) + " samples < K=" + std::to_string(k));
    const std::size_t dim = samples.front().size();
    for (const auto& s : samples)
        if (s.size() != dim) throw std::invalid_argument("kmeans: samples have differing lengths");

    Rng rng(opts.seed);
    std::vector<Descriptor> centers = seed_plus_plus(samples, k, rng);
    std::vector<std::size_t> assign(samples.size(), k);  // k = unassigned
    std::vector<double> sq(samples.size(), 0.0);

    int iter = 0;
    for (; iter < opts.max_iter; ++iter) {
        bool changed = false;
        for (std::size_t s = 0; s < samples.size(); ++s) {
            const auto n = nearest(centers, samples[s]);
            sq[s] = n.sq;
            if (assign[s] != n.index) {
                assign[s] = n.index;
                changed = true;
            }
        }
        if (!changed) break;

        // centroid update, fixed sample order
        std::vector<Descriptor> sums(k, Descriptor(dim, 0.0));
        std::vector<std::size_t> counts(k, 0);
        for (std::size_t s = 0; s < samples.size(); ++s) {
            auto& acc = sums[assign[s]];
            for (std::size_t t = 0; t < dim; ++t) acc[t] += samples[s][t];
            ++counts[assign[s]];
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] == 0) continue;
            for (std::size_t t = 0; t < dim; ++t) centers[c][t] = sums[c][t] / static_cast<double>(counts[c]);
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] != 0) continue;
            std::size_t far = 0;
            double far_sq = -1;
            for (std::size_t s = 0; s < samples.size(); ++s) {
                const double d = squared_distance(samples[s], centers[assign[s]]);
                if (d > far_sq) {
                    far_sq = d;
                    far = s;
                }
            }
            centers[c] = samples[far];
            --counts[assign[far]];
            assign[far] = c;
            counts[c] = 1;
        }

        if (trace) {
            double inertia = 0;
            for (std::size_t s = 0; s < samples.size(); ++s) inertia += squared_distance(samples[s], centers[assign[s]]);
            trace->inertia.push_back(inertia);
        }
    }
    if (trace) trace->iterations = iter;

    Codebook cb;
    cb.centroids = std::move(centers);
    cb.trained_on = samples.size();
    double total = 0;
    for (const auto& s : samples) total += std::sqrt(nearest(cb.centroids, s).sq);
    cb.mean_nn_dist = total / static_cast<double>(samples.size());

    for (std::size_t a = 0; a < k; ++a)
        for (std::size_t b = a + 1; b < k; ++b)
            if (squared_distance(cb.centroids[a], cb.centroids[b]) == 0)
                throw std::invalid_argument("kmeans: fewer than K=" + std::to_string(k) + " distinct samples");
    return cb;
}

}  // namespace apd
