#include "apd/store.hpp"

#include <bit>
#include <cctype>
#include <cstring>
#include <fstream>
#include <sstream>

namespace apd {

namespace fs = std::filesystem;

static_assert(std::endian::native == std::endian::little, "artifact encoding assumes a little-endian host");

namespace {

class Writer {
public:
    explicit Writer(ArtifactType type) {
        buf_.append(kArtifactMagic);
        u32(static_cast<std::uint32_t>(type));
    }
    void u32(std::uint32_t v) { raw(&v, sizeof v); }
    void u64(std::uint64_t v) { raw(&v, sizeof v); }
    void f64(double v) { raw(&v, sizeof v); }
    void f64s(std::span<const double> v) { raw(v.data(), v.size_bytes()); }
    void str(const std::string& s) {
        u32(static_cast<std::uint32_t>(s.size()));
        buf_.append(s);
    }
    std::string take() { return std::move(buf_); }

private:
    void raw(const void* p, std::size_t n) { buf_.append(static_cast<const char*>(p), n); }
    std::string buf_;
};

class Reader {
public:
    Reader(std::string_view bytes, ArtifactType expected) : bytes_(bytes) {
        if (bytes_.size() < kArtifactMagic.size() || bytes_.substr(0, kArtifactMagic.size()) != kArtifactMagic)
            throw ArtifactError("bad magic: not an APDX1 artifact");
        pos_ = kArtifactMagic.size();
        const auto tag = u32();
        if (tag != static_cast<std::uint32_t>(expected))
            throw ArtifactError("artifact type mismatch: expected tag " + std::to_string(static_cast<std::uint32_t>(expected)) +
                                ", found " + std::to_string(tag));
    }
    std::uint32_t u32() { return pod<std::uint32_t>(); }
    std::uint64_t u64() { return pod<std::uint64_t>(); }
    double f64() { return pod<double>(); }
    std::vector<double> f64s(std::size_t n) {
        need(n * sizeof(double));
        std::vector<double> v(n);
        std::memcpy(v.data(), bytes_.data() + pos_, n * sizeof(double));
        pos_ += n * sizeof(double);
        return v;
    }
    std::string str() {
        const auto n = u32();
        need(n);
        std::string s(bytes_.substr(pos_, n));
        pos_ += n;
        return s;
    }
    void finish() const {
        if (pos_ != bytes_.size()) throw ArtifactError("artifact has trailing bytes");
    }

private:
    template <class T>
    T pod() {
        need(sizeof(T));
        T v;
        std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }
    void need(std::size_t n) const {
        if (bytes_.size() - pos_ < n) throw ArtifactError("artifact truncated");
    }
    std::string_view bytes_;
    std::size_t pos_ = 0;
};

std::string read_all(const fs::path& path, const char* what) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ArtifactError(std::string("missing artifact ") + what + ": " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

template <class F>
auto load_with_context(const fs::path& path, const char* what, F decode) {
    const auto bytes = read_all(path, what);
    try {
        return decode(bytes);
    } catch (const ArtifactError& e) {
        throw ArtifactError(std::string(what) + " (" + path.string() + "): " + e.what());
    }
}

}  // namespace

void atomic_write_bytes(const fs::path& path, std::string_view bytes) {
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ArtifactError("cannot write " + tmp.string());
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw ArtifactError("cannot write " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) throw ArtifactError("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

void atomic_write_text(const fs::path& path, std::string_view text) { atomic_write_bytes(path, text); }

std::string encode(const PcaModel& m) {
    Writer w(ArtifactType::Pca);
    w.u32(static_cast<std::uint32_t>(m.raw_dim));
    w.u32(static_cast<std::uint32_t>(m.dim));
    w.f64s(m.mean);
    w.f64s(m.basis);
    w.f64s(m.explained_variance);
    return w.take();
}

PcaModel decode_pca(std::string_view bytes) {
    Reader r(bytes, ArtifactType::Pca);
    PcaModel m;
    m.raw_dim = r.u32();
    m.dim = r.u32();
    if (m.dim == 0 || m.dim > m.raw_dim) throw ArtifactError("pca: bad dimensions");
    m.mean = r.f64s(m.raw_dim);
    m.basis = r.f64s(m.raw_dim * m.dim);
    m.explained_variance = r.f64s(m.dim);
    r.finish();
    return m;
}

std::string encode(const Codebook& cb) {
    Writer w(ArtifactType::Codebook);
    w.u32(static_cast<std::uint32_t>(cb.size()));
    w.u32(static_cast<std::uint32_t>(cb.dim()));
    w.u64(cb.trained_on);
    w.f64(cb.mean_nn_dist);
    for (const auto& c : cb.centroids) w.f64s(c);
    return w.take();
}

Codebook decode_codebook(std::string_view bytes) {
    Reader r(bytes, ArtifactType::Codebook);
    const auto k = r.u32();
    const auto d = r.u32();
    Codebook cb;
    cb.trained_on = r.u64();
    cb.mean_nn_dist = r.f64();
    for (std::uint32_t i = 0; i < k; ++i) cb.centroids.push_back(r.f64s(d));
    r.finish();
    return cb;
}

std::string encode(const ProximityDistribution& pd) {
    Writer w(ArtifactType::Distribution);
    w.u32(static_cast<std::uint32_t>(pd.K()));
    w.u32(static_cast<std::uint32_t>(pd.R()));
    w.u64(pd.key_count());
    for (std::size_t s = 0; s < pd.key_count(); ++s) {
        w.u32(pd.key_i(s));
        w.u32(pd.key_j(s));
        w.f64s(pd.cumulative(s));
    }
    return w.take();
}

ProximityDistribution decode_distribution(std::string_view bytes) {
    Reader r(bytes, ArtifactType::Distribution);
    const std::size_t K = r.u32();
    const std::size_t R = r.u32();
    const auto n = r.u64();
    if (n > static_cast<std::uint64_t>(K) * K) throw ArtifactError("distribution: key count exceeds K*K");
    std::vector<std::uint64_t> keys;
    std::vector<double> values;
    keys.reserve(n);
    values.reserve(n * R);
    for (std::uint64_t s = 0; s < n; ++s) {
        const std::uint64_t i = r.u32(), j = r.u32();
        if (i >= K || j >= K) throw ArtifactError("distribution: word index out of range");
        keys.push_back(i * K + j);
        const auto v = r.f64s(R);
        values.insert(values.end(), v.begin(), v.end());
    }
    r.finish();
    try {
        return ProximityDistribution::from_entries(K, R, std::move(keys), std::move(values));
    } catch (const std::exception& e) {
        throw ArtifactError(std::string("distribution: ") + e.what());
    }
}

std::string encode(const VwHistogram& h) {
    Writer w(ArtifactType::Histogram);
    w.u32(static_cast<std::uint32_t>(h.bins.size()));
    w.u32(h.normalized ? 1u : 0u);
    w.f64s(h.bins);
    return w.take();
}

VwHistogram decode_histogram(std::string_view bytes) {
    Reader r(bytes, ArtifactType::Histogram);
    const auto k = r.u32();
    VwHistogram h;
    h.normalized = r.u32() != 0;
    h.bins = r.f64s(k);
    r.finish();
    return h;
}

std::string encode(const GramMatrix& g) {
    Writer w(ArtifactType::Gram);
    w.u32(static_cast<std::uint32_t>(g.n));
    w.u32(g.ids.empty() ? 0u : 1u);
    for (const auto& id : g.ids) w.str(id);
    w.f64s(g.values);
    return w.take();
}

GramMatrix decode_gram(std::string_view bytes) {
    Reader r(bytes, ArtifactType::Gram);
    GramMatrix g;
    g.n = r.u32();
    if (r.u32() != 0)
        for (std::size_t a = 0; a < g.n; ++a) g.ids.push_back(r.str());
    g.values = r.f64s(g.n * g.n);
    r.finish();
    return g;
}

std::string encode(const TrainedModel& m) {
    Writer w(ArtifactType::Model);
    w.u32(static_cast<std::uint32_t>(m.train_ids.size()));
    for (std::size_t t = 0; t < m.train_ids.size(); ++t) {
        w.str(m.train_ids[t]);
        w.str(m.train_labels[t]);
    }
    w.u32(static_cast<std::uint32_t>(m.svm.labels.size()));
    for (const auto& l : m.svm.labels) w.str(l);
    w.u32(static_cast<std::uint32_t>(m.svm.models.size()));
    for (const auto& bm : m.svm.models) {
        w.str(bm.positive);
        w.str(bm.negative);
        w.f64(bm.C);
        w.f64(bm.bias);
        w.u32(static_cast<std::uint32_t>(bm.support.size()));
        for (std::size_t s = 0; s < bm.support.size(); ++s) {
            w.u64(bm.support[s]);
            w.f64(bm.coef[s]);
        }
    }
    return w.take();
}

TrainedModel decode_model(std::string_view bytes) {
    Reader r(bytes, ArtifactType::Model);
    TrainedModel m;
    const auto n = r.u32();
    for (std::uint32_t t = 0; t < n; ++t) {
        m.train_ids.push_back(r.str());
        m.train_labels.push_back(r.str());
    }
    m.svm.train_size = n;
    const auto nl = r.u32();
    for (std::uint32_t t = 0; t < nl; ++t) m.svm.labels.push_back(r.str());
    const auto nm = r.u32();
    for (std::uint32_t t = 0; t < nm; ++t) {
        BinarySvmModel bm;
        bm.positive = r.str();
        bm.negative = r.str();
        bm.C = r.f64();
        bm.bias = r.f64();
        const auto ns = r.u32();
        for (std::uint32_t s = 0; s < ns; ++s) {
            const auto idx = r.u64();
            if (idx >= n) throw ArtifactError("model: support index out of range");
            bm.support.push_back(static_cast<std::size_t>(idx));
            bm.coef.push_back(r.f64());
        }
        m.svm.models.push_back(std::move(bm));
    }
    r.finish();
    return m;
}

std::string image_id(const std::string& relative_path) {
    fs::path p(relative_path);
    p.replace_extension();
    std::string id = p.generic_string();
    for (auto& c : id)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '.')) c = '_';
    return id;
}

fs::path ArtifactStore::dist_path(const std::string& id) const { return root_ / "dists" / (id + ".bin"); }
fs::path ArtifactStore::hist_path(const std::string& id) const { return root_ / "hists" / (id + ".bin"); }

void ArtifactStore::prepare() const {
    std::error_code ec;
    fs::create_directories(root_ / "dists", ec);
    if (!ec) fs::create_directories(root_ / "hists", ec);
    if (ec) throw ArtifactError("cannot create artifact directory " + root_.string() + ": " + ec.message());
}

void ArtifactStore::save_distribution(const std::string& id, const ProximityDistribution& pd) const {
    atomic_write_bytes(dist_path(id), encode(pd));
}

void ArtifactStore::save_histogram(const std::string& id, const VwHistogram& h) const { atomic_write_bytes(hist_path(id), encode(h)); }

PcaModel ArtifactStore::load_pca() const { return load_with_context(pca_path(), "pca.bin", decode_pca); }
Codebook ArtifactStore::load_codebook() const { return load_with_context(codebook_path(), "codebook.bin", decode_codebook); }
GramMatrix ArtifactStore::load_gram() const { return load_with_context(gram_path(), "gram.bin", decode_gram); }
TrainedModel ArtifactStore::load_model() const { return load_with_context(model_path(), "model.bin", decode_model); }

ProximityDistribution ArtifactStore::load_distribution(const std::string& id) const {
    return load_with_context(dist_path(id), "distribution", decode_distribution);
}

VwHistogram ArtifactStore::load_histogram(const std::string& id) const {
    return load_with_context(hist_path(id), "histogram", decode_histogram);
}

}  // namespace apd
