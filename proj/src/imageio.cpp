#include "apd/imageio.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include "apd/random.hpp"

namespace apd {

namespace fs = std::filesystem;

GrayImage::GrayImage(int w, int h) : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, 0.0) {}

const char* to_string(Split s) { return s == Split::Train ? "train" : "test"; }

std::vector<std::size_t> DatasetManifest::indices(Split s) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < entries.size(); ++i)
        if (entries[i].split == s) out.push_back(i);
    return out;
}

namespace {

std::vector<unsigned char> read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("unreadable file: " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Reads one whitespace-delimited PGM header token, skipping '#' comments.
bool pgm_token(const std::vector<unsigned char>& buf, std::size_t& pos, std::string& tok) {
    tok.clear();
    while (pos < buf.size()) {
        const unsigned char c = buf[pos];
        if (c == '#') {
            while (pos < buf.size() && buf[pos] != '\n') ++pos;
        } else if (std::isspace(c)) {
            ++pos;
        } else {
            break;
        }
    }
    while (pos < buf.size() && !std::isspace(buf[pos]) && buf[pos] != '#') tok.push_back(static_cast<char>(buf[pos++]));
    return !tok.empty();
}

int parse_dim(const std::string& tok, const fs::path& path) {
    if (tok.empty() || !std::all_of(tok.begin(), tok.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }))
        throw DataError("unreadable file: bad PGM header in " + path.string());
    const long v = std::stol(tok);
    if (v > (1L << 20)) throw DataError("unreadable file: PGM dimension too large in " + path.string());
    return static_cast<int>(v);
}

GrayImage load_pgm(const std::vector<unsigned char>& buf, const fs::path& path) {
    std::size_t pos = 2;
    std::string tw, th, tm;
    if (!pgm_token(buf, pos, tw) || !pgm_token(buf, pos, th) || !pgm_token(buf, pos, tm))
        throw DataError("unreadable file: truncated PGM header in " + path.string());
    const int w = parse_dim(tw, path);
    const int h = parse_dim(th, path);
    const int maxval = parse_dim(tm, path);
    if (w == 0 || h == 0) throw DataError("dimension 0 in " + path.string());
    if (maxval != 255) throw DataError("unsupported bit depth (maxval " + tm + ") in " + path.string());
    if (pos >= buf.size() || !std::isspace(buf[pos])) throw DataError("unreadable file: truncated PGM header in " + path.string());
    ++pos;
    const std::size_t n = static_cast<std::size_t>(w) * h;
    if (buf.size() - pos < n) throw DataError("unreadable file: truncated PGM data in " + path.string());
    GrayImage img(w, h);
    for (std::size_t i = 0; i < n; ++i) img.pixels[i] = buf[pos + i] / 255.0;
    return img;
}

GrayImage load_png(const std::vector<unsigned char>& buf, const fs::path& path) {
    // IHDR sits at a fixed offset: 8-byte signature, 8-byte chunk header, then
    // width(4) height(4) bit_depth(1) color_type(1).
    if (buf.size() < 33) throw DataError("unreadable file: truncated PNG in " + path.string());
    if (buf[24] != 8) throw DataError("unsupported bit depth (" + std::to_string(buf[24]) + ") in " + path.string());

    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_memory(&image, buf.data(), buf.size()))
        throw DataError(std::string("unreadable file: ") + image.message + " in " + path.string());
    if (image.width == 0 || image.height == 0) {
        png_image_free(&image);
        throw DataError("dimension 0 in " + path.string());
    }
    const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
    image.format = color ? PNG_FORMAT_RGBA : PNG_FORMAT_GA;
    const int channels = color ? 4 : 2;
    std::vector<unsigned char> raw(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, raw.data(), 0, nullptr)) {
        std::string msg = image.message;
        png_image_free(&image);
        throw DataError("unreadable file: " + msg + " in " + path.string());
    }
    GrayImage img(static_cast<int>(image.width), static_cast<int>(image.height));
    for (std::size_t i = 0; i < img.pixels.size(); ++i) {
        const unsigned char* px = &raw[i * channels];
        if (color) {
            const double luma = 0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2];
            img.pixels[i] = std::clamp(luma / 255.0, 0.0, 1.0);
        } else {
            img.pixels[i] = px[0] / 255.0;
        }
    }
    return img;
}

}  // namespace

GrayImage load_image(const fs::path& path) {
    const auto buf = read_file(path);
    static constexpr std::array<unsigned char, 8> png_sig{0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
    if (buf.size() >= 8 && std::equal(png_sig.begin(), png_sig.end(), buf.begin())) return load_png(buf, path);
    if (buf.size() >= 2 && buf[0] == 'P' && buf[1] == '5') return load_pgm(buf, path);
    throw DataError("unreadable file: not a P5 PGM or PNG: " + path.string());
}

void write_pgm(const fs::path& path, const GrayImage& img) {
    if (img.width <= 0 || img.height <= 0) throw DataError("dimension 0 writing " + path.string());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("unwritable output: " + path.string());
    out << "P5\n" << img.width << ' ' << img.height << "\n255\n";
    std::vector<unsigned char> bytes(img.pixels.size());
    for (std::size_t i = 0; i < bytes.size(); ++i)
        bytes[i] = static_cast<unsigned char>(std::lround(std::clamp(img.pixels[i], 0.0, 1.0) * 255.0));
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("unwritable output: " + path.string());
}

DatasetManifest load_manifest(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("unreadable file: " + path.string());

    DatasetManifest m;
    m.root = path.parent_path();
    std::set<std::string> seen;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;

        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string f;
        while (std::getline(ss, f, '\t')) fields.push_back(f);
        if (fields.size() != 3 || fields[0].empty() || fields[1].empty())
            throw DataError("malformed manifest line " + std::to_string(lineno) + " in " + path.string());

        ManifestEntry e{fields[0], fields[1], Split::Train};
        if (fields[2] == "train")
            e.split = Split::Train;
        else if (fields[2] == "test")
            e.split = Split::Test;
        else
            throw DataError("bad split token '" + fields[2] + "' on manifest line " + std::to_string(lineno));
        if (!seen.insert(e.path).second) throw DataError("duplicate path '" + e.path + "' in manifest");
        m.entries.push_back(std::move(e));
    }

    if (m.entries.empty()) m.warnings.push_back("manifest " + path.string() + " has no entries");

    std::set<std::string> train_labels;
    for (const auto& e : m.entries)
        if (e.split == Split::Train) train_labels.insert(e.label);
    for (const auto& e : m.entries)
        if (e.split == Split::Test && !train_labels.count(e.label))
            throw DataError("label '" + e.label + "' has test entries but no train entries");
    return m;
}

void write_manifest(const fs::path& path, const DatasetManifest& manifest) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("unwritable output: " + path.string());
    out << "# path\tlabel\tsplit\n";
    for (const auto& e : manifest.entries) out << e.path << '\t' << e.label << '\t' << to_string(e.split) << '\n';
    if (!out) throw DataError("unwritable output: " + path.string());
}

// Texture families. Class identity lives in local patch statistics: orientation
// for gratings, cell scale for checkerboards, blob density, gradient slope.
GrayImage render_synthetic(int class_id, int side, std::uint64_t image_seed, double noise_sigma) {
    Rng rng(image_seed);
    GrayImage img(side, side);
    const int family = class_id % 4;
    const int variant = class_id / 4;
    constexpr double pi = std::numbers::pi;

    switch (family) {
    case 0: {  // oriented sinusoidal grating
        const double angle = pi / 6.0 + variant * (pi / 7.0) + rng.uniform(-0.05, 0.05);
        const double period = 7.0 + rng.uniform(-0.5, 0.5);
        const double phase = rng.uniform(0.0, 2.0 * pi);
        const double c = std::cos(angle), s = std::sin(angle);
        for (int r = 0; r < side; ++r)
            for (int col = 0; col < side; ++col)
                img.at(r, col) = 0.5 + 0.35 * std::sin(2.0 * pi * (col * c + r * s) / period + phase);
        break;
    }
    case 1: {  // checkerboard
        const int cell = 3 + 2 * variant;
        const int off_r = static_cast<int>(rng.below(static_cast<std::uint64_t>(2 * cell)));
        const int off_c = static_cast<int>(rng.below(static_cast<std::uint64_t>(2 * cell)));
        const double lo = 0.25 + rng.uniform(-0.03, 0.03);
        const double hi = 0.75 + rng.uniform(-0.03, 0.03);
        for (int r = 0; r < side; ++r)
            for (int col = 0; col < side; ++col)
                img.at(r, col) = (((r + off_r) / cell + (col + off_c) / cell) % 2) ? hi : lo;
        break;
    }
    case 2: {  // blob field
        const int count = side * side / (90 + 40 * variant);
        const double radius = 2.2;
        for (auto& p : img.pixels) p = 0.2;
        for (int b = 0; b < count; ++b) {
            const double br = rng.uniform(0.0, side), bc = rng.uniform(0.0, side);
            const int r0 = std::max(0, static_cast<int>(br - 4 * radius)), r1 = std::min(side - 1, static_cast<int>(br + 4 * radius));
            const int c0 = std::max(0, static_cast<int>(bc - 4 * radius)), c1 = std::min(side - 1, static_cast<int>(bc + 4 * radius));
            for (int r = r0; r <= r1; ++r)
                for (int col = c0; col <= c1; ++col) {
                    const double d2 = (r - br) * (r - br) + (col - bc) * (col - bc);
                    img.at(r, col) += 0.6 * std::exp(-d2 / (2.0 * radius * radius));
                }
        }
        break;
    }
    default: {  // radial gradient
        const double cr = rng.uniform(0.0, side), cc = rng.uniform(0.0, side);
        const double slope = (1.0 + 0.5 * variant) / side;
        const double base = rng.uniform(0.05, 0.15);
        for (int r = 0; r < side; ++r)
            for (int col = 0; col < side; ++col)
                img.at(r, col) = base + slope * std::hypot(r - cr, col - cc);
        break;
    }
    }

    for (auto& p : img.pixels) p = std::clamp(p + noise_sigma * rng.normal(), 0.0, 1.0);
    return img;
}

DatasetManifest generate_synthetic(const SyntheticSpec& spec, const fs::path& out_dir) {
    if (spec.classes < 2) throw std::invalid_argument("generate_synthetic: classes must be >= 2");
    if (spec.per_class < 2) throw std::invalid_argument("generate_synthetic: per_class must be >= 2");
    if (spec.side < 32) throw std::invalid_argument("generate_synthetic: side must be >= 32");

    std::error_code ec;
    fs::create_directories(out_dir / "images", ec);
    if (ec) throw DataError("unwritable output directory: " + out_dir.string() + ": " + ec.message());

    DatasetManifest m;
    m.root = out_dir;
    // 80/20 per class, at least one image on each side
    const int n_train = std::clamp(static_cast<int>(std::lround(spec.per_class * 0.8)), 1, spec.per_class - 1);
    for (int c = 0; c < spec.classes; ++c) {
        char label[32];
        std::snprintf(label, sizeof label, "class%02d", c);
        for (int k = 0; k < spec.per_class; ++k) {
            char name[64];
            std::snprintf(name, sizeof name, "images/%s_%03d.pgm", label, k);
            const auto seed = mix_seed(mix_seed(spec.seed, static_cast<std::uint64_t>(c)), static_cast<std::uint64_t>(k));
            write_pgm(out_dir / name, render_synthetic(c, spec.side, seed, spec.noise_sigma));
            m.entries.push_back({name, label, k < n_train ? Split::Train : Split::Test});
        }
    }
    write_manifest(out_dir / "manifest.tsv", m);
    return m;
}

}  // namespace apd
