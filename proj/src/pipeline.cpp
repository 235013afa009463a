#include "apd/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "apd/parallel.hpp"
#include "apd/random.hpp"

namespace apd {

namespace fs = std::filesystem;
using nlohmann::json;

StageError::StageError(std::string stage, const std::string& what) : std::runtime_error(stage + ": " + what), stage_(std::move(stage)) {}

namespace {

template <class F>
auto in_stage(const char* name, F&& f) {
    try {
        return f();
    } catch (const StageError&) {
        throw;
    } catch (const ArtifactError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(name, e.what());
    }
}

class Stopwatch {
public:
    Stopwatch() : start_(std::chrono::steady_clock::now()) {}
    double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count(); }

private:
    std::chrono::steady_clock::time_point start_;
};

void record(std::map<std::string, double>* timings, const std::string& key, const Stopwatch& sw) {
    if (timings) (*timings)[key] += sw.seconds();
}

std::size_t grid_count(const GrayImage& img, int patch, int stride) {
    if (img.width < patch || img.height < patch) return 0;
    return static_cast<std::size_t>((img.height - patch) / stride + 1) * static_cast<std::size_t>((img.width - patch) / stride + 1);
}

// Fields fixed at training time; classify/retrieve must not change them.
json training_fields(const RunConfig& c) {
    json j = to_json(c);
    for (const char* k : {"classifiers", "knn_k", "cutoffs", "top_n", "manifest", "out"}) j.erase(k);
    return j;
}

std::string row_mode(const RunConfig& cfg, const std::string& classifier) {
    return classifier == "knn-l1" ? std::string("hard-histogram") : std::string(to_string(cfg.mode));
}

json effective_config(const RunConfig& cfg, const TrainedPipeline& tp) {
    json j = to_json(cfg);
    j["sigma_effective"] = tp.vocab.mode.sigma;
    return j;
}

struct QuerySet {
    std::vector<std::size_t> entries;
    std::vector<Representation> reprs;
    std::vector<std::vector<double>> rows;
    std::vector<std::optional<std::size_t>> self;
};

QuerySet represent_queries(const DatasetManifest& manifest, const TrainedPipeline& tp, const EvalOptions& opts, unsigned threads) {
    QuerySet qs;
    qs.entries = manifest.indices(opts.split);
    if (qs.entries.empty()) throw StageError("classify", std::string("manifest has no ") + to_string(opts.split) + " entries");
    qs.reprs.resize(qs.entries.size());
    qs.rows.resize(qs.entries.size());
    qs.self.resize(qs.entries.size());
    const KernelOptions kopts{tp.config.normalize_kernel, 1};
    in_stage("proximity", [&] {
        parallel_for(qs.entries.size(), threads, [&](std::size_t q) {
            const auto& e = manifest.entries[qs.entries[q]];
            qs.reprs[q] = represent(load_image(manifest.resolve(e)), tp.vocab, tp.config, e.path);
        });
        return 0;
    });
    in_stage("kernels", [&] {
        parallel_for(qs.entries.size(), threads, [&](std::size_t q) { qs.rows[q] = kernel_row(qs.reprs[q].dist, tp.dists, kopts); });
        return 0;
    });
    for (std::size_t q = 0; q < qs.entries.size(); ++q) {
        if (opts.allow_self) continue;
        const auto id = image_id(manifest.entries[qs.entries[q]].path);
        const auto it = std::find(tp.ids.begin(), tp.ids.end(), id);
        if (it != tp.ids.end()) qs.self[q] = static_cast<std::size_t>(it - tp.ids.begin());
    }
    return qs;
}

}  // namespace

ContributionMode resolve_mode(const RunConfig& cfg, const Codebook& cb) {
    ContributionMode m;
    m.variant = cfg.mode;
    m.sigma = cfg.sigma > 0 ? cfg.sigma : cb.mean_nn_dist;
    if (m.variant != Variant::Hard && !(m.sigma > 0))
        throw StageError("contribution", "automatic sigma is zero (codebook reproduces its training data); pass --sigma");
    if (m.variant == Variant::Hard && !(m.sigma > 0)) m.sigma = 1.0;
    m.top_t = cfg.top_t;
    m.epsilon = cfg.epsilon;
    return m;
}

Representation represent(const GrayImage& img, const Vocabulary& vocab, const RunConfig& cfg, const std::string& source) {
    const FeatureSet fs = extract_features(img, cfg.patch, cfg.stride, vocab.pca, source);
    const SoftAssignment sa = assign_all(vocab.codebook, fs, vocab.mode);
    const RankNeighbors rn = rank_neighbors(fs, cfg.rank_r);
    Representation r;
    r.dist = build_distribution(sa, rn, vocab.codebook.size(), cfg.rank_r, BuildOptions{cfg.include_self_pairs});
    if (cfg.normalize_distribution) r.dist = r.dist.normalized();
    ContributionMode hard;
    hard.variant = Variant::Hard;
    r.hist = vw_histogram(vocab.mode.variant == Variant::Hard ? sa : assign_all(vocab.codebook, fs, hard), vocab.codebook.size(), true);
    return r;
}

TrainedPipeline fit_pipeline(const DatasetManifest& manifest, const std::vector<std::size_t>& train, const RunConfig& cfg, unsigned threads,
                             std::map<std::string, double>* timings) {
    cfg.validate();
    if (train.empty()) throw StageError("features", "no training images");

    TrainedPipeline tp;
    tp.config = cfg;
    for (auto t : train) {
        tp.ids.push_back(image_id(manifest.entries[t].path));
        tp.labels.push_back(manifest.entries[t].label);
    }
    if (std::set<std::string>(tp.ids.begin(), tp.ids.end()).size() != tp.ids.size())
        throw StageError("features", "two manifest paths map to the same image id");

    Stopwatch sw;
    std::vector<GrayImage> images(train.size());
    in_stage("features", [&] {
        parallel_for(train.size(), threads, [&](std::size_t t) { images[t] = load_image(manifest.resolve(manifest.entries[train[t]])); });
        for (std::size_t t = 0; t < images.size(); ++t)
            if (grid_count(images[t], cfg.patch, cfg.stride) < 2)
                throw std::invalid_argument("image " + manifest.entries[train[t]].path + " yields fewer than 2 patches");
        return 0;
    });
    record(timings, "load", sw);

    sw = {};
    tp.vocab.pca = in_stage("pca", [&] {
        // choose the PCA subsample by global patch index, then extract only those
        std::vector<std::size_t> offsets(images.size() + 1, 0);
        for (std::size_t t = 0; t < images.size(); ++t) offsets[t + 1] = offsets[t] + grid_count(images[t], cfg.patch, cfg.stride);
        const auto picked = subsample_indices(offsets.back(), cfg.pca_max_samples, mix_seed(cfg.seed, 1));
        std::vector<Descriptor> samples;
        samples.reserve(picked.size());
        std::size_t cursor = 0;
        for (std::size_t t = 0; t < images.size() && cursor < picked.size(); ++t) {
            if (picked[cursor] >= offsets[t + 1]) continue;
            auto patches = extract_patches(images[t], cfg.patch, cfg.stride);
            while (cursor < picked.size() && picked[cursor] < offsets[t + 1]) samples.push_back(std::move(patches[picked[cursor++] - offsets[t]].values));
        }
        return fit_pca(samples, cfg.pca_dim);
    });
    record(timings, "pca", sw);

    sw = {};
    std::vector<FeatureSet> features(images.size());
    in_stage("features", [&] {
        parallel_for(images.size(), threads, [&](std::size_t t) {
            features[t] = extract_features(images[t], cfg.patch, cfg.stride, tp.vocab.pca, manifest.entries[train[t]].path);
        });
        return 0;
    });
    images.clear();
    record(timings, "features", sw);

    sw = {};
    tp.vocab.codebook = in_stage("codebook", [&] {
        std::size_t total = 0;
        for (const auto& f : features) total += f.size();
        const auto picked = subsample_indices(total, cfg.kmeans_max_samples, mix_seed(cfg.seed, 2));
        std::vector<Descriptor> samples;
        samples.reserve(picked.size());
        std::size_t base = 0, cursor = 0;
        for (const auto& f : features) {
            while (cursor < picked.size() && picked[cursor] < base + f.size()) samples.push_back(f.features[picked[cursor++] - base].descriptor);
            base += f.size();
        }
        if (samples.size() < cfg.vocab)
            throw std::invalid_argument("vocabulary size K=" + std::to_string(cfg.vocab) + " exceeds the " + std::to_string(samples.size()) +
                                        " available training patches");
        return kmeans(samples, KMeansOptions{cfg.vocab, cfg.kmeans_max_iter, mix_seed(cfg.seed, 3)});
    });
    tp.vocab.mode = resolve_mode(cfg, tp.vocab.codebook);
    record(timings, "codebook", sw);

    sw = {};
    tp.dists.resize(features.size());
    tp.hists.resize(features.size());
    in_stage("proximity", [&] {
        ContributionMode hard;
        hard.variant = Variant::Hard;
        parallel_for(features.size(), threads, [&](std::size_t t) {
            const auto& fs = features[t];
            const SoftAssignment sa = assign_all(tp.vocab.codebook, fs, tp.vocab.mode);
            const RankNeighbors rn = rank_neighbors(fs, cfg.rank_r);
            tp.dists[t] = build_distribution(sa, rn, tp.vocab.codebook.size(), cfg.rank_r, BuildOptions{cfg.include_self_pairs});
            if (cfg.normalize_distribution) tp.dists[t] = tp.dists[t].normalized();
            tp.hists[t] = vw_histogram(cfg.mode == Variant::Hard ? sa : assign_all(tp.vocab.codebook, fs, hard), tp.vocab.codebook.size(), true);
        });
        return 0;
    });
    record(timings, "proximity", sw);

    sw = {};
    tp.gram = in_stage("kernels", [&] { return gram(tp.dists, tp.ids, KernelOptions{cfg.normalize_kernel, threads}); });
    record(timings, "gram", sw);

    sw = {};
    tp.svm = in_stage("learn", [&] { return svm_train_ovo(tp.gram, tp.labels, SmoOptions{cfg.svm_c, cfg.svm_tol}, threads); });
    record(timings, "svm", sw);
    return tp;
}

std::string predict(const std::string& classifier, const Representation& query, const std::vector<double>& kernel_row,
                    const TrainedPipeline& tp, std::optional<std::size_t> exclude) {
    if (classifier == "svm") return svm_predict(tp.svm, kernel_row);

    const bool l1 = classifier == "knn-l1";
    if (!l1 && classifier != "knn") throw std::invalid_argument("unknown classifier '" + classifier + "'");
    std::vector<double> scores;
    std::vector<std::string> labels;
    for (std::size_t t = 0; t < tp.labels.size(); ++t) {
        if (exclude && *exclude == t) continue;
        scores.push_back(l1 ? l1_distance(query.hist, tp.hists[t]) : kernel_row[t]);
        labels.push_back(tp.labels[t]);
    }
    const std::size_t k = std::min(tp.config.knn_k, scores.size());
    return knn_classify(scores, labels, k, l1 ? ScoreKind::Distance : ScoreKind::Similarity);
}

void cmd_synth(const SyntheticSpec& spec, const fs::path& out) { generate_synthetic(spec, out); }

TrainedPipeline cmd_train(const RunConfig& cfg, unsigned threads) {
    cfg.validate();
    if (cfg.out.empty()) throw std::invalid_argument("train: --out is required");
    const auto manifest = in_stage("manifest", [&] { return load_manifest(cfg.manifest); });

    std::map<std::string, double> timings;
    TrainedPipeline tp = fit_pipeline(manifest, manifest.indices(Split::Train), cfg, threads, &timings);

    ArtifactStore store(cfg.out);
    store.prepare();
    // the directory itself is the output location; leaving it out keeps
    // config.json identical for identical runs written to different places
    json echoed = effective_config(cfg, tp);
    echoed.erase("out");
    atomic_write_text(store.config_path(), echoed.dump(2) + "\n");
    store.save(tp.vocab.pca);
    store.save(tp.vocab.codebook);
    for (std::size_t t = 0; t < tp.ids.size(); ++t) {
        store.save_distribution(tp.ids[t], tp.dists[t]);
        store.save_histogram(tp.ids[t], tp.hists[t]);
    }
    store.save(tp.gram);
    store.save(TrainedModel{tp.ids, tp.labels, tp.svm});
    return tp;
}

TrainedPipeline load_trained(const fs::path& dir, const std::optional<RunConfig>& overrides) {
    ArtifactStore store(dir);
    // magic/type checks on every binary file happen before any computation
    TrainedPipeline tp;
    tp.vocab.pca = store.load_pca();
    tp.vocab.codebook = store.load_codebook();
    const auto model = store.load_model();
    tp.gram = store.load_gram();

    RunConfig stored;
    try {
        stored = load_config(store.config_path());
    } catch (const DataError& e) {
        throw ArtifactError(std::string("config.json: ") + e.what());
    }
    if (overrides && training_fields(*overrides) != training_fields(stored))
        throw ArtifactError("artifact mismatch: training settings differ from " + store.config_path().string());
    tp.config = overrides ? *overrides : stored;

    if (tp.vocab.codebook.size() != stored.vocab) throw ArtifactError("artifact mismatch: codebook size differs from config vocab");
    if (tp.vocab.pca.dim != tp.vocab.codebook.dim()) throw ArtifactError("artifact mismatch: PCA and codebook dimensions differ");
    tp.vocab.mode = resolve_mode(stored, tp.vocab.codebook);

    tp.ids = model.train_ids;
    tp.labels = model.train_labels;
    tp.svm = model.svm;
    if (tp.gram.n != tp.ids.size()) throw ArtifactError("artifact mismatch: gram.bin and model.bin disagree on training size");
    for (const auto& id : tp.ids) {
        tp.dists.push_back(store.load_distribution(id));
        tp.hists.push_back(store.load_histogram(id));
        if (tp.dists.back().K() != stored.vocab || tp.dists.back().R() != stored.rank_r)
            throw ArtifactError("artifact mismatch: distribution " + id + " has wrong K or R");
    }
    return tp;
}

Report cmd_classify(const RunConfig& cfg, const EvalOptions& opts, unsigned threads) {
    cfg.validate();
    Stopwatch total;
    const TrainedPipeline tp = load_trained(cfg.out, cfg);
    const auto manifest = in_stage("manifest", [&] { return load_manifest(cfg.manifest); });
    const QuerySet qs = represent_queries(manifest, tp, opts, threads);

    Report report;
    report.config = effective_config(cfg, tp);
    report.config["split"] = to_string(opts.split);
    report.config["allow_self"] = opts.allow_self;

    std::ostringstream pred_out;
    pred_out << "id\tlabel\tclassifier\tpredicted\n";
    std::vector<std::string> truth;
    for (auto e : qs.entries) truth.push_back(manifest.entries[e].label);
    for (const auto& clf : cfg.classifiers) {
        std::vector<std::string> predicted(qs.entries.size());
        in_stage("learn", [&] {
            for (std::size_t q = 0; q < qs.entries.size(); ++q) predicted[q] = predict(clf, qs.reprs[q], qs.rows[q], tp, qs.self[q]);
            return 0;
        });
        for (std::size_t q = 0; q < qs.entries.size(); ++q)
            pred_out << image_id(manifest.entries[qs.entries[q]].path) << '\t' << truth[q] << '\t' << clf << '\t' << predicted[q] << '\n';
        report.accuracy_by_mode.push_back({row_mode(cfg, clf), clf, cfg.vocab, accuracy(predicted, truth), qs.entries.size(), true, {}});
    }
    report.timings["classify"] = total.seconds();

    ArtifactStore store(cfg.out);
    atomic_write_text(store.root() / "predictions.tsv", pred_out.str());
    write_report(store.report_path(), report);
    return report;
}

Report cmd_retrieve(const RunConfig& cfg, const EvalOptions& opts, unsigned threads) {
    cfg.validate();
    Stopwatch total;
    const TrainedPipeline tp = load_trained(cfg.out, cfg);
    const auto manifest = in_stage("manifest", [&] { return load_manifest(cfg.manifest); });
    const QuerySet qs = represent_queries(manifest, tp, opts, threads);

    std::ostringstream rank_out;
    rank_out.precision(17);
    rank_out << "query\trank\tid\tscore\n";
    // cutoffs longer than the ranked list cannot be scored
    const bool drops_self = std::any_of(qs.self.begin(), qs.self.end(), [](const auto& s) { return s.has_value(); });
    const std::size_t list_len = std::min(cfg.top_n, tp.ids.size() - (drops_self ? 1 : 0));
    std::vector<std::size_t> cutoffs;
    for (auto c : cfg.cutoffs)
        if (c <= list_len) cutoffs.push_back(c);

    std::vector<PrCurve> curves;
    in_stage("retrieve", [&] {
        for (std::size_t q = 0; q < qs.entries.size(); ++q) {
            std::vector<double> scores;
            std::vector<std::string> ids;
            std::unordered_map<std::string, std::string> db_labels;
            for (std::size_t t = 0; t < tp.ids.size(); ++t) {
                if (qs.self[q] && *qs.self[q] == t) continue;
                scores.push_back(qs.rows[q][t]);
                ids.push_back(tp.ids[t]);
                db_labels.emplace(tp.ids[t], tp.labels[t]);
            }
            const auto& entry = manifest.entries[qs.entries[q]];
            const auto res = rank_scores(image_id(entry.path), scores, ids, cfg.top_n);
            for (std::size_t r = 0; r < res.items.size(); ++r)
                rank_out << res.query_id << '\t' << r + 1 << '\t' << res.items[r].first << '\t' << res.items[r].second << '\n';
            if (!cutoffs.empty()) curves.push_back(precision_recall(res, db_labels, entry.label, cutoffs));
        }
        return 0;
    });

    Report report;
    report.config = effective_config(cfg, tp);
    report.config["split"] = to_string(opts.split);
    report.config["allow_self"] = opts.allow_self;
    report.config["cutoffs_scored"] = cutoffs;
    report.pr_table = average_curves(to_string(cfg.mode), curves);
    report.timings["retrieve"] = total.seconds();

    ArtifactStore store(cfg.out);
    atomic_write_text(store.root() / "rankings.tsv", rank_out.str());
    write_report(store.report_path(), report);
    return report;
}

Report cmd_sweep(const RunConfig& cfg, const std::vector<std::size_t>& vocab_sizes, const std::vector<Variant>& modes, unsigned threads) {
    cfg.validate();
    if (cfg.out.empty()) throw std::invalid_argument("sweep: --out is required");
    if (vocab_sizes.empty() || modes.empty()) throw std::invalid_argument("sweep: need at least one vocab size and one mode");
    fs::create_directories(cfg.out);

    Report report;
    report.config = to_json(cfg);
    report.config["vocab_sizes"] = vocab_sizes;
    json mode_names = json::array();
    for (auto m : modes) mode_names.push_back(to_string(m));
    report.config["modes"] = mode_names;

    for (auto k : vocab_sizes) {
        for (auto m : modes) {
            RunConfig cell = cfg;
            cell.vocab = k;
            cell.mode = m;
            const std::string name = "K" + std::to_string(k) + "_" + to_string(m);
            cell.out = (fs::path(cfg.out) / name).string();
            Stopwatch sw;
            try {
                cmd_train(cell, threads);
                const Report r = cmd_classify(cell, EvalOptions{}, threads);
                report.accuracy_by_mode.insert(report.accuracy_by_mode.end(), r.accuracy_by_mode.begin(), r.accuracy_by_mode.end());
            } catch (const std::exception& e) {
                for (const auto& clf : cell.classifiers) {
                    AccuracyRow row;
                    row.mode = row_mode(cell, clf);
                    row.classifier = clf;
                    row.vocab = k;
                    row.ok = false;
                    row.error = e.what();
                    report.accuracy_by_mode.push_back(row);
                }
            }
            report.timings[name] = sw.seconds();
        }
    }
    write_report(fs::path(cfg.out) / "sweep_report.json", report);
    write_report_csv(fs::path(cfg.out) / "sweep_report.csv", report);
    return report;
}

std::string format_sweep_table(const Report& r) {
    std::vector<std::string> columns;
    std::vector<std::size_t> vocabs;
    std::map<std::pair<std::size_t, std::string>, std::string> cells;
    for (const auto& a : r.accuracy_by_mode) {
        const std::string col = a.mode + "/" + a.classifier;
        if (std::find(columns.begin(), columns.end(), col) == columns.end()) columns.push_back(col);
        if (std::find(vocabs.begin(), vocabs.end(), a.vocab) == vocabs.end()) vocabs.push_back(a.vocab);
        char buf[32];
        if (a.ok)
            std::snprintf(buf, sizeof buf, "%.4f", a.accuracy);
        else
            std::snprintf(buf, sizeof buf, "failed");
        cells[{a.vocab, col}] = buf;
    }
    std::ostringstream out;
    out << "vocab";
    for (const auto& c : columns) out << '\t' << c;
    out << '\n';
    for (auto v : vocabs) {
        out << v;
        for (const auto& c : columns) {
            const auto it = cells.find({v, c});
            out << '\t' << (it == cells.end() ? "-" : it->second);
        }
        out << '\n';
    }
    return out.str();
}

CvResult cmd_cross_validate(const RunConfig& cfg, const CvOptions& cv, unsigned threads) {
    cfg.validate();
    const auto manifest = in_stage("manifest", [&] { return load_manifest(cfg.manifest); });
    std::vector<std::string> labels;
    for (const auto& e : manifest.entries) labels.push_back(e.label);
    CvOptions opts = cv;
    if (opts.test_count == 0) opts.test_count = std::max<std::size_t>(1, labels.size() / 5);
    const std::string clf = cfg.classifiers.front();

    return cross_validate(labels, opts, [&](const std::vector<std::size_t>& train, const std::vector<std::size_t>& test) {
        const TrainedPipeline tp = fit_pipeline(manifest, train, cfg, threads);
        std::vector<std::string> predicted(test.size());
        parallel_for(test.size(), threads, [&](std::size_t q) {
            const auto& e = manifest.entries[test[q]];
            const Representation r = represent(load_image(manifest.resolve(e)), tp.vocab, cfg, e.path);
            predicted[q] = predict(clf, r, kernel_row(r.dist, tp.dists, KernelOptions{cfg.normalize_kernel, 1}), tp);
        });
        return predicted;
    });
}

}  // namespace apd
