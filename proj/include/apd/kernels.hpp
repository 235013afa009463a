#pragma once

#include <string>
#include <vector>

#include "apd/proximity.hpp"

namespace apd {

/// Symmetric n×n kernel matrix, row-major, with row identifiers.
struct GramMatrix {
    std::size_t n = 0;
    std::vector<double> values;
    std::vector<std::string> ids;

    double operator()(std::size_t a, std::size_t b) const { return values[a * n + b]; }
    double& operator()(std::size_t a, std::size_t b) { return values[a * n + b]; }

    /// Principal submatrix on `rows` (in the given order).
    GramMatrix subset(const std::vector<std::size_t>& rows) const;
};

/// Min-intersection kernel: sum over (i,j,r) of min(HY, HZ). Only keys present in
/// both distributions contribute. Accumulated in extended precision in key order.
double pdk(const ProximityDistribution& y, const ProximityDistribution& z);

/// pdk(y,z) / sqrt(pdk(y,y)·pdk(z,z)); 0 when either self-kernel is 0.
double pdk_normalized(const ProximityDistribution& y, const ProximityDistribution& z);

/// Sum of |hx_k − hy_k|.
double l1_distance(const VwHistogram& hx, const VwHistogram& hy);

struct KernelOptions {
    bool normalize = false;
    unsigned threads = 1;
};

GramMatrix gram(const std::vector<ProximityDistribution>& dists, const std::vector<std::string>& ids = {},
                const KernelOptions& opts = {});

std::vector<double> kernel_row(const ProximityDistribution& query, const std::vector<ProximityDistribution>& dists,
                               const KernelOptions& opts = {});

}  // namespace apd
