#include "apd/features.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "apd/random.hpp"

namespace apd {

std::vector<RawPatch> extract_patches(const GrayImage& img, int patch, int stride) {
    if (patch < 1 || patch % 2 == 0) throw std::invalid_argument("extract_patches: patch side must be odd and >= 1");
    if (stride < 1) throw std::invalid_argument("extract_patches: stride must be >= 1");
    if (img.width < patch || img.height < patch)
        throw std::invalid_argument("extract_patches: image smaller than patch (" + std::to_string(img.width) + "x" +
                                    std::to_string(img.height) + " < " + std::to_string(patch) + ")");

    const int half = patch / 2;
    const std::size_t n = static_cast<std::size_t>(patch) * patch;
    std::vector<RawPatch> out;
    out.reserve(static_cast<std::size_t>((img.height - patch) / stride + 1) * ((img.width - patch) / stride + 1));
    for (int top = 0; top + patch <= img.height; top += stride) {
        for (int left = 0; left + patch <= img.width; left += stride) {
            RawPatch p;
            p.values.resize(n);
            double sum = 0;
            for (int r = 0; r < patch; ++r)
                for (int c = 0; c < patch; ++c) {
                    const double v = img.at(top + r, left + c);
                    p.values[static_cast<std::size_t>(r) * patch + c] = v;
                    sum += v;
                }
            const double mean = sum / static_cast<double>(n);
            for (auto& v : p.values) v -= mean;
            p.center = {static_cast<double>(top + half), static_cast<double>(left + half)};
            out.push_back(std::move(p));
        }
    }
    return out;
}

DegenerateCovariance::DegenerateCovariance(std::size_t r, std::size_t requested)
    : std::runtime_error("fit_pca: degenerate covariance, rank " + std::to_string(r) + " < requested dimension " +
                         std::to_string(requested)),
      rank(r) {}

PcaModel fit_pca(const std::vector<Descriptor>& samples, std::size_t d) {
    if (d == 0) throw std::invalid_argument("fit_pca: target dimension must be >= 1");
    if (samples.size() < d + 1) throw std::invalid_argument("fit_pca: need at least d+1 samples");
    const std::size_t raw = samples.front().size();
    if (raw < d) throw std::invalid_argument("fit_pca: target dimension exceeds descriptor length");
    for (const auto& s : samples)
        if (s.size() != raw) throw std::invalid_argument("fit_pca: samples have differing lengths");

    const auto n = static_cast<double>(samples.size());
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(raw));
    for (const auto& s : samples) mean += Eigen::Map<const Eigen::VectorXd>(s.data(), static_cast<Eigen::Index>(raw));
    mean /= n;

    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(raw), static_cast<Eigen::Index>(raw));
    Eigen::VectorXd centered(static_cast<Eigen::Index>(raw));
    for (const auto& s : samples) {
        centered = Eigen::Map<const Eigen::VectorXd>(s.data(), static_cast<Eigen::Index>(raw)) - mean;
        cov.selfadjointView<Eigen::Lower>().rankUpdate(centered);
    }
    cov = cov.selfadjointView<Eigen::Lower>();
    cov /= n;

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    if (solver.info() != Eigen::Success) throw std::runtime_error("fit_pca: eigendecomposition failed");
    // ascending order from Eigen
    const Eigen::VectorXd& evals = solver.eigenvalues();
    const Eigen::MatrixXd& evecs = solver.eigenvectors();

    const double scale = std::max(1.0, evals.cwiseAbs().maxCoeff());
    std::size_t rank = 0;
    for (Eigen::Index k = 0; k < evals.size(); ++k)
        if (evals[k] > 1e-12 * scale) ++rank;
    if (rank < d) throw DegenerateCovariance(rank, d);

    PcaModel m;
    m.raw_dim = raw;
    m.dim = d;
    m.mean.assign(mean.data(), mean.data() + raw);
    m.basis.resize(raw * d);
    m.explained_variance.resize(d);
    for (std::size_t k = 0; k < d; ++k) {
        const Eigen::Index src = static_cast<Eigen::Index>(raw - 1 - k);
        Eigen::VectorXd v = evecs.col(src);
        Eigen::Index arg = 0;
        v.cwiseAbs().maxCoeff(&arg);
        if (v[arg] < 0) v = -v;
        std::copy(v.data(), v.data() + raw, m.basis.begin() + static_cast<std::ptrdiff_t>(k * raw));
        m.explained_variance[k] = std::max(0.0, evals[src]);
    }
    return m;
}

Descriptor transform(const PcaModel& model, std::span<const double> raw) {
    if (raw.size() != model.raw_dim)
        throw std::invalid_argument("transform: descriptor length " + std::to_string(raw.size()) + " != " +
                                    std::to_string(model.raw_dim));
    Descriptor out(model.dim, 0.0);
    for (std::size_t k = 0; k < model.dim; ++k) {
        const auto col = model.component(k);
        double acc = 0;
        for (std::size_t i = 0; i < model.raw_dim; ++i) acc += col[i] * (raw[i] - model.mean[i]);
        out[k] = acc;
    }
    return out;
}

Descriptor inverse_transform(const PcaModel& model, std::span<const double> reduced) {
    if (reduced.size() != model.dim) throw std::invalid_argument("inverse_transform: length mismatch");
    Descriptor out(model.mean);
    for (std::size_t k = 0; k < model.dim; ++k) {
        const auto col = model.component(k);
        for (std::size_t i = 0; i < model.raw_dim; ++i) out[i] += col[i] * reduced[k];
    }
    return out;
}

FeatureSet extract_features(const GrayImage& img, int patch, int stride, const PcaModel& model, std::string source) {
    auto patches = extract_patches(img, patch, stride);
    FeatureSet fs;
    fs.source = std::move(source);
    fs.features.reserve(patches.size());
    for (auto& p : patches) fs.features.push_back({transform(model, p.values), p.center});
    return fs;
}

std::vector<std::size_t> subsample_indices(std::size_t n, std::size_t max_count, std::uint64_t seed) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    if (n <= max_count) return idx;
    // partial Fisher-Yates
    Rng rng(seed);
    for (std::size_t i = 0; i < max_count; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(max_count);
    std::sort(idx.begin(), idx.end());
    return idx;
}

}  // namespace apd
