#pragma once

// Independent brute-force reference implementations used only by tests. They
// follow the defining formulas directly (dense tensors, full sorts, exhaustive
// loops) and share no code paths with the library beyond plain data types.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "apd/codebook.hpp"
#include "apd/contribution.hpp"
#include "apd/features.hpp"
#include "apd/kernels.hpp"
#include "apd/learn.hpp"
#include "apd/proximity.hpp"

namespace oracle {

using Dense = std::vector<double>;  // K*K*R, index (i*K + j)*R + (r-1)

inline double l2(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0;
    for (std::size_t t = 0; t < a.size(); ++t) s += (a[t] - b[t]) * (a[t] - b[t]);
    return std::sqrt(s);
}

inline double gauss(double sigma, double x) {
    return 1.0 / (std::sqrt(2.0 * std::numbers::pi) * sigma) * std::exp(-0.5 * x * x / (sigma * sigma));
}

/// Linear-scan argmin, first index wins ties.
inline std::size_t nearest_word(const std::vector<std::vector<double>>& centroids, const std::vector<double>& x) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < centroids.size(); ++i)
        if (l2(centroids[i], x) < l2(centroids[best], x)) best = i;
    return best;
}

/// Dense contribution F(v_i, x) for all i, written straight from the definitions.
inline std::vector<double> dense_contribution(const std::vector<std::vector<double>>& centroids, const std::vector<double>& x,
                                              apd::Variant variant, double sigma) {
    const std::size_t K = centroids.size();
    std::vector<double> f(K, 0.0);
    const std::size_t a = nearest_word(centroids, x);
    switch (variant) {
    case apd::Variant::Hard: f[a] = 1.0; break;
    case apd::Variant::Kernel:
        for (std::size_t i = 0; i < K; ++i) f[i] = gauss(sigma, l2(centroids[i], x));
        break;
    case apd::Variant::Uncertainty: {
        double den = 0;
        for (std::size_t j = 0; j < K; ++j) den += gauss(sigma, l2(centroids[j], x));
        for (std::size_t i = 0; i < K; ++i) f[i] = gauss(sigma, l2(centroids[i], x)) / den;
        break;
    }
    case apd::Variant::Plausibility: f[a] = gauss(sigma, l2(centroids[a], x)); break;
    }
    return f;
}

/// Spatial rank of m around l: 1 + number of other features strictly nearer to
/// l, or equally near with a smaller index.
inline std::size_t spatial_rank(const apd::FeatureSet& fs, std::size_t l, std::size_t m) {
    auto d2 = [&](std::size_t a) {
        const double dr = fs.features[l].position.row - fs.features[a].position.row;
        const double dc = fs.features[l].position.col - fs.features[a].position.col;
        return dr * dr + dc * dc;
    };
    std::size_t rank = 1;
    for (std::size_t t = 0; t < fs.size(); ++t) {
        if (t == l || t == m) continue;
        if (d2(t) < d2(m) || (d2(t) == d2(m) && t < m)) ++rank;
    }
    return rank;
}

/// Full neighbour ordering per feature by sorting all other features.
inline std::vector<std::vector<std::uint32_t>> sorted_neighbours(const apd::FeatureSet& fs, std::size_t R) {
    std::vector<std::vector<std::uint32_t>> out(fs.size());
    for (std::size_t l = 0; l < fs.size(); ++l) {
        std::vector<std::uint32_t> all;
        for (std::size_t m = 0; m < fs.size(); ++m)
            if (m != l) all.push_back(static_cast<std::uint32_t>(m));
        std::sort(all.begin(), all.end(), [&](std::uint32_t a, std::uint32_t b) { return spatial_rank(fs, l, a) < spatial_rank(fs, l, b); });
        all.resize(std::min(R, all.size()));
        out[l] = all;
    }
    return out;
}

/// H(i,j,r) = sum_l sum_{m != l} F(v_i,x_l) F(v_j,x_m) I(rank(l,m) <= r), dense.
inline Dense unified(const apd::FeatureSet& fs, const std::vector<std::vector<double>>& centroids, apd::Variant variant, double sigma,
                     std::size_t R) {
    const std::size_t K = centroids.size(), L = fs.size();
    std::vector<std::vector<double>> F(L);
    for (std::size_t l = 0; l < L; ++l) F[l] = dense_contribution(centroids, fs.features[l].descriptor, variant, sigma);
    Dense H(K * K * R, 0.0);
    for (std::size_t i = 0; i < K; ++i)
        for (std::size_t j = 0; j < K; ++j)
            for (std::size_t r = 1; r <= R; ++r)
                for (std::size_t l = 0; l < L; ++l)
                    for (std::size_t m = 0; m < L; ++m) {
                        if (m == l) continue;
                        if (spatial_rank(fs, l, m) <= r) H[(i * K + j) * R + (r - 1)] += F[l][i] * F[m][j];
                    }
    return H;
}

/// Integer co-occurrence counts #{(l,m): alpha_l=i, alpha_m=j, m within r nearest of l}.
inline std::vector<long long> hard_counts(const apd::FeatureSet& fs, const std::vector<std::vector<double>>& centroids, std::size_t R) {
    const std::size_t K = centroids.size(), L = fs.size();
    std::vector<std::size_t> alpha(L);
    for (std::size_t l = 0; l < L; ++l) alpha[l] = nearest_word(centroids, fs.features[l].descriptor);
    std::vector<long long> H(K * K * R, 0);
    for (std::size_t l = 0; l < L; ++l)
        for (std::size_t m = 0; m < L; ++m) {
            if (m == l) continue;
            const std::size_t rank = spatial_rank(fs, l, m);
            for (std::size_t r = rank; r <= R; ++r) ++H[(alpha[l] * K + alpha[m]) * R + (r - 1)];
        }
    return H;
}

inline Dense densify(const apd::ProximityDistribution& pd) {
    const std::size_t K = pd.K(), R = pd.R();
    Dense H(K * K * R, 0.0);
    for (std::size_t i = 0; i < K; ++i)
        for (std::size_t j = 0; j < K; ++j)
            for (std::size_t r = 1; r <= R; ++r)
                H[(i * K + j) * R + (r - 1)] = pd.at(static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j), r);
    return H;
}

/// sum over every (i,j,r) cell of min(HY, HZ).
inline double dense_pdk(const Dense& y, const Dense& z) {
    double s = 0;
    for (std::size_t c = 0; c < y.size(); ++c) s += std::min(y[c], z[c]);
    return s;
}

struct KktReport {
    double max_violation = 0;  // largest KKT residual over training points
    double equality = 0;       // |sum alpha_i y_i|
    bool box_ok = true;        // 0 <= alpha <= C
};

/// Checks a trained binary model against the dual optimality conditions using
/// only the Gram matrix: alpha=0 needs y f >= 1, 0<alpha<C needs y f = 1,
/// alpha=C needs y f <= 1.
inline KktReport kkt(const apd::GramMatrix& g, const std::vector<int>& y, const apd::BinarySvmModel& m, double C) {
    const std::size_t n = g.n;
    std::vector<double> alpha(n, 0.0);
    for (std::size_t s = 0; s < m.support.size(); ++s) alpha[m.support[s]] = m.coef[s] * y[m.support[s]];
    KktReport rep;
    double eq = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (alpha[i] < -1e-12 || alpha[i] > C + 1e-12) rep.box_ok = false;
        eq += alpha[i] * y[i];
        double f = m.bias;
        for (std::size_t j = 0; j < n; ++j) f += alpha[j] * y[j] * g(i, j);
        const double yf = y[i] * f;
        double v = 0;
        const double bound_eps = 1e-12 * std::max(1.0, C);
        if (alpha[i] <= bound_eps)
            v = std::max(0.0, 1.0 - yf);
        else if (alpha[i] >= C - bound_eps)
            v = std::max(0.0, yf - 1.0);
        else
            v = std::fabs(yf - 1.0);
        rep.max_violation = std::max(rep.max_violation, v);
    }
    rep.equality = std::fabs(eq);
    return rep;
}

// Random instance helpers

inline apd::FeatureSet random_features(std::mt19937_64& rng, std::size_t L, std::size_t d, bool grid_positions = false) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::uniform_int_distribution<int> cell(0, 3);
    apd::FeatureSet fs;
    for (std::size_t l = 0; l < L; ++l) {
        apd::LocalFeature f;
        for (std::size_t t = 0; t < d; ++t) f.descriptor.push_back(u(rng));
        if (grid_positions)
            f.position = {static_cast<double>(cell(rng)), static_cast<double>(cell(rng))};  // many ties
        else
            f.position = {10 * u(rng), 10 * u(rng)};
        fs.features.push_back(f);
    }
    return fs;
}

inline apd::Codebook random_codebook(std::mt19937_64& rng, std::size_t K, std::size_t d) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    apd::Codebook cb;
    for (std::size_t i = 0; i < K; ++i) {
        std::vector<double> c;
        for (std::size_t t = 0; t < d; ++t) c.push_back(u(rng));
        cb.centroids.push_back(c);
    }
    cb.mean_nn_dist = 0.5;
    return cb;
}

}  // namespace oracle
