#include "apd/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "apd/parallel.hpp"

namespace apd {

GramMatrix GramMatrix::subset(const std::vector<std::size_t>& rows) const {
    GramMatrix g;
    g.n = rows.size();
    g.values.resize(g.n * g.n);
    for (std::size_t a = 0; a < g.n; ++a)
        for (std::size_t b = 0; b < g.n; ++b) g(a, b) = (*this)(rows[a], rows[b]);
    if (!ids.empty())
        for (auto r : rows) g.ids.push_back(ids[r]);
    return g;
}

double pdk(const ProximityDistribution& y, const ProximityDistribution& z) {
    if (y.K() != z.K() || y.R() != z.R())
        throw std::invalid_argument("pdk: shape mismatch (K " + std::to_string(y.K()) + "/" + std::to_string(z.K()) + ", R " +
                                    std::to_string(y.R()) + "/" + std::to_string(z.R()) + ")");
    const auto& small = y.key_count() <= z.key_count() ? y : z;
    const auto& large = y.key_count() <= z.key_count() ? z : y;
    const auto skeys = small.keys();
    const auto lkeys = large.keys();
    const std::size_t R = y.R();

    long double acc = 0;
    auto from = lkeys.begin();
    for (std::size_t s = 0; s < skeys.size() && from != lkeys.end(); ++s) {
        from = std::lower_bound(from, lkeys.end(), skeys[s]);
        if (from == lkeys.end() || *from != skeys[s]) continue;
        const auto a = small.cumulative(s);
        const auto b = large.cumulative(static_cast<std::size_t>(from - lkeys.begin()));
        for (std::size_t r = 0; r < R; ++r) acc += std::min(a[r], b[r]);
    }
    return static_cast<double>(acc);
}

double pdk_normalized(const ProximityDistribution& y, const ProximityDistribution& z) {
    const double yy = pdk(y, y), zz = pdk(z, z);
    if (yy <= 0 || zz <= 0) return 0.0;
    return pdk(y, z) / std::sqrt(yy * zz);
}

double l1_distance(const VwHistogram& hx, const VwHistogram& hy) {
    if (hx.bins.size() != hy.bins.size()) throw std::invalid_argument("l1_distance: histogram size mismatch");
    if (hx.normalized != hy.normalized) throw std::invalid_argument("l1_distance: normalization flags differ");
    long double acc = 0;
    for (std::size_t k = 0; k < hx.bins.size(); ++k) acc += std::fabs(hx.bins[k] - hy.bins[k]);
    return static_cast<double>(acc);
}

namespace {

void check_shapes(const std::vector<ProximityDistribution>& dists, const char* who) {
    for (const auto& d : dists)
        if (d.K() != dists.front().K() || d.R() != dists.front().R())
            throw std::invalid_argument(std::string(who) + ": distributions have mismatched K or R");
}

}  // namespace

GramMatrix gram(const std::vector<ProximityDistribution>& dists, const std::vector<std::string>& ids, const KernelOptions& opts) {
    check_shapes(dists, "gram");
    if (!ids.empty() && ids.size() != dists.size()) throw std::invalid_argument("gram: id count mismatch");
    GramMatrix g;
    g.n = dists.size();
    g.ids = ids;
    g.values.assign(g.n * g.n, 0.0);
    parallel_for(g.n, opts.threads, [&](std::size_t a) {
        for (std::size_t b = 0; b <= a; ++b) g(a, b) = pdk(dists[a], dists[b]);
    });
    if (opts.normalize) {
        std::vector<double> diag(g.n);
        for (std::size_t a = 0; a < g.n; ++a) diag[a] = g(a, a);
        for (std::size_t a = 0; a < g.n; ++a)
            for (std::size_t b = 0; b <= a; ++b) {
                const double den = std::sqrt(diag[a] * diag[b]);
                g(a, b) = den > 0 ? g(a, b) / den : 0.0;
            }
    }
    for (std::size_t a = 0; a < g.n; ++a)
        for (std::size_t b = a + 1; b < g.n; ++b) g(a, b) = g(b, a);
    return g;
}

std::vector<double> kernel_row(const ProximityDistribution& query, const std::vector<ProximityDistribution>& dists,
                               const KernelOptions& opts) {
    check_shapes(dists, "kernel_row");
    std::vector<double> row(dists.size());
    parallel_for(dists.size(), opts.threads, [&](std::size_t b) {
        row[b] = opts.normalize ? pdk_normalized(query, dists[b]) : pdk(query, dists[b]);
    });
    return row;
}

}  // namespace apd
