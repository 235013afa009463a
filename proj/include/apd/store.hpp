#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "apd/codebook.hpp"
#include "apd/features.hpp"
#include "apd/kernels.hpp"
#include "apd/learn.hpp"
#include "apd/proximity.hpp"

namespace apd {

/// Missing, corrupt, or incompatible artifact file.
class ArtifactError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Every binary artifact starts with this 5-byte magic (format version 1),
/// followed by a u32 type tag. All integers and floats are little-endian.
inline constexpr std::string_view kArtifactMagic = "APDX1";

enum class ArtifactType : std::uint32_t {
    Pca = 1,
    Codebook = 2,
    Distribution = 3,
    Gram = 4,
    Model = 5,
    Histogram = 6,
};

/// Writes to `<path>.tmp` and renames over `path`.
void atomic_write_bytes(const std::filesystem::path& path, std::string_view bytes);
void atomic_write_text(const std::filesystem::path& path, std::string_view text);

/// Classifier state persisted next to the Gram matrix.
struct TrainedModel {
    std::vector<std::string> train_ids;
    std::vector<std::string> train_labels;
    OvoSvmModel svm;
};

std::string encode(const PcaModel& m);
std::string encode(const Codebook& cb);
std::string encode(const ProximityDistribution& pd);
std::string encode(const VwHistogram& h);
std::string encode(const GramMatrix& g);
std::string encode(const TrainedModel& m);

PcaModel decode_pca(std::string_view bytes);
Codebook decode_codebook(std::string_view bytes);
ProximityDistribution decode_distribution(std::string_view bytes);
VwHistogram decode_histogram(std::string_view bytes);
GramMatrix decode_gram(std::string_view bytes);
TrainedModel decode_model(std::string_view bytes);

/// Directory layout of a trained run:
///   config.json  pca.bin  codebook.bin  gram.bin  model.bin  report.json
///   dists/<image-id>.bin  hists/<image-id>.bin
class ArtifactStore {
public:
    explicit ArtifactStore(std::filesystem::path root) : root_(std::move(root)) {}

    const std::filesystem::path& root() const { return root_; }
    std::filesystem::path config_path() const { return root_ / "config.json"; }
    std::filesystem::path pca_path() const { return root_ / "pca.bin"; }
    std::filesystem::path codebook_path() const { return root_ / "codebook.bin"; }
    std::filesystem::path gram_path() const { return root_ / "gram.bin"; }
    std::filesystem::path model_path() const { return root_ / "model.bin"; }
    std::filesystem::path report_path() const { return root_ / "report.json"; }
    std::filesystem::path dist_path(const std::string& id) const;
    std::filesystem::path hist_path(const std::string& id) const;

    void prepare() const;

    void save(const PcaModel& m) const { atomic_write_bytes(pca_path(), encode(m)); }
    void save(const Codebook& cb) const { atomic_write_bytes(codebook_path(), encode(cb)); }
    void save(const GramMatrix& g) const { atomic_write_bytes(gram_path(), encode(g)); }
    void save(const TrainedModel& m) const { atomic_write_bytes(model_path(), encode(m)); }
    void save_distribution(const std::string& id, const ProximityDistribution& pd) const;
    void save_histogram(const std::string& id, const VwHistogram& h) const;

    PcaModel load_pca() const;
    Codebook load_codebook() const;
    GramMatrix load_gram() const;
    TrainedModel load_model() const;
    ProximityDistribution load_distribution(const std::string& id) const;
    VwHistogram load_histogram(const std::string& id) const;

private:
    std::filesystem::path root_;
};

/// Filesystem-safe identifier derived from a manifest-relative image path.
std::string image_id(const std::string& relative_path);

}  // namespace apd
