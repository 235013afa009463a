#include "apd/contribution.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace apd {

const char* to_string(Variant v) {
    switch (v) {
    case Variant::Hard: return "hard";
    case Variant::Kernel: return "kernel";
    case Variant::Uncertainty: return "uncertainty";
    case Variant::Plausibility: return "plausibility";
    }
    return "?";
}

Variant parse_variant(const std::string& name) {
    if (name == "hard") return Variant::Hard;
    if (name == "kernel" || name == "ker") return Variant::Kernel;
    if (name == "uncertainty" || name == "unc") return Variant::Uncertainty;
    if (name == "plausibility" || name == "pla") return Variant::Plausibility;
    throw std::invalid_argument("unknown contribution mode '" + name + "'");
}

void ContributionMode::validate() const {
    if (variant != Variant::Hard && !(sigma > 0 && std::isfinite(sigma)))
        throw std::invalid_argument("contribution: sigma must be > 0");
    if (top_t < 1) throw std::invalid_argument("contribution: top_t must be >= 1");
    if (!(epsilon >= 0)) throw std::invalid_argument("contribution: epsilon must be >= 0");
}

double gaussian(double sigma, double x) {
    if (!(sigma > 0)) throw std::invalid_argument("gaussian: sigma must be > 0");
    return std::exp(-0.5 * (x * x) / (sigma * sigma)) / (std::sqrt(2.0 * std::numbers::pi) * sigma);
}

std::vector<WordWeight> contribute(const Codebook& cb, std::span<const double> x, const ContributionMode& mode) {
    mode.validate();
    const std::size_t k = cb.size();
    if (k == 0) throw std::invalid_argument("contribute: empty codebook");

    std::vector<double> dist(k);
    for (std::size_t i = 0; i < k; ++i) dist[i] = distance(cb.centroids[i], x);

    // Rank words by distance ascending, ties by index. This is the weight order
    // for every variant and stays well defined when the Gaussian underflows.
    std::vector<std::uint32_t> order(k);
    std::iota(order.begin(), order.end(), 0u);
    std::stable_sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) { return dist[a] < dist[b]; });
    const std::uint32_t nearest = order.front();

    switch (mode.variant) {
    case Variant::Hard: return {{nearest, 1.0}};
    case Variant::Plausibility: return {{nearest, gaussian(mode.sigma, dist[nearest])}};
    default: break;
    }

    std::vector<double> weight(k);
    if (mode.variant == Variant::Kernel) {
        for (std::size_t i = 0; i < k; ++i) weight[i] = gaussian(mode.sigma, dist[i]);
    } else {
        // Full-vocabulary normalization. The Gaussian's constant factor cancels, and
        // shifting exponents by the nearest distance avoids 0/0 for small sigma.
        const double d0 = dist[nearest];
        const double inv = 1.0 / (2.0 * mode.sigma * mode.sigma);
        double denom = 0;
        for (std::size_t i = 0; i < k; ++i) {
            weight[i] = std::exp(-(dist[i] * dist[i] - d0 * d0) * inv);
            denom += weight[i];
        }
        for (auto& w : weight) w /= denom;
    }

    const std::size_t keep = std::min(mode.top_t, k);
    std::vector<WordWeight> out;
    out.reserve(keep);
    for (std::size_t r = 0; r < keep; ++r) {
        const auto i = order[r];
        if (weight[i] >= mode.epsilon) out.push_back({i, weight[i]});
    }
    if (out.empty()) out.push_back({nearest, weight[nearest]});
    std::sort(out.begin(), out.end(), [](const WordWeight& a, const WordWeight& b) { return a.word < b.word; });
    return out;
}

SoftAssignment assign_all(const Codebook& cb, const FeatureSet& fs, const ContributionMode& mode) {
    mode.validate();
    if (!fs.features.empty() && fs.dim() != cb.dim())
        throw std::invalid_argument("assign_all: descriptor length " + std::to_string(fs.dim()) + " != codebook dimension " +
                                    std::to_string(cb.dim()));
    SoftAssignment sa;
    sa.features.reserve(fs.size());
    for (const auto& f : fs.features) sa.features.push_back(contribute(cb, f.descriptor, mode));
    return sa;
}

}  // namespace apd
