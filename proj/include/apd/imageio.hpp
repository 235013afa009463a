#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace apd {

/// Raised for malformed or unreadable input data (images, manifests).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Row-major grayscale image with intensities in [0,1].
struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<double> pixels;

    GrayImage() = default;
    GrayImage(int w, int h);

    double at(int row, int col) const { return pixels[static_cast<std::size_t>(row) * width + col]; }
    double& at(int row, int col) { return pixels[static_cast<std::size_t>(row) * width + col]; }
};

enum class Split { Train, Test };

const char* to_string(Split s);

struct ManifestEntry {
    std::string path;  // relative to the manifest root
    std::string label;
    Split split = Split::Train;
};

struct DatasetManifest {
    std::filesystem::path root;
    std::vector<ManifestEntry> entries;
    std::vector<std::string> warnings;

    std::vector<std::size_t> indices(Split s) const;
    std::filesystem::path resolve(const ManifestEntry& e) const { return root / e.path; }
};

/// Loads an 8-bit P5 PGM or an 8-bit gray/RGB(A) PNG. RGB is converted to luma.
GrayImage load_image(const std::filesystem::path& path);

/// Writes an 8-bit P5 PGM; intensities are clamped to [0,1] and rounded.
void write_pgm(const std::filesystem::path& path, const GrayImage& img);

/// Parses the tab-separated manifest format. Image files are not checked here.
DatasetManifest load_manifest(const std::filesystem::path& path);

void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);

struct SyntheticSpec {
    int classes = 4;
    int per_class = 30;
    int side = 64;
    std::uint64_t seed = 7;
    double noise_sigma = 0.05;
};

/// Procedural texture dataset: one texture family per class, 80/20 train/test
/// split per class. Writes `manifest.tsv` plus one PGM per image into `out_dir`.
/// The output is a pure function of `spec`.
DatasetManifest generate_synthetic(const SyntheticSpec& spec, const std::filesystem::path& out_dir);

/// Renders a single synthetic image without touching the filesystem.
GrayImage render_synthetic(int class_id, int side, std::uint64_t image_seed, double noise_sigma);

}  // namespace apd
