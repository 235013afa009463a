// apdk: command-line front end for the ambiguous proximity distribution toolkit.
//
// Exit codes: 0 success, 2 usage, 3 data error, 4 artifact mismatch.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "apd/pipeline.hpp"

namespace fs = std::filesystem;

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SharedFlags {
    std::string config;
    unsigned threads = 1;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out, manifest, mode;
    std::optional<double> sigma, epsilon, c, tol;
    std::optional<std::size_t> top_t, vocab, rank_r, pca_dim, k, top_n;
    std::optional<int> patch, stride;
    std::vector<std::string> classifiers;
    std::vector<std::size_t> cutoffs;
    bool self_pairs = false, norm_dist = false, norm_kernel = false;
};

void add_shared(CLI::App* sub, SharedFlags& f) {
    sub->add_option("--config", f.config, "JSON run configuration; flags override it");
    sub->add_option("--seed", f.seed, "random seed");
    sub->add_option("--threads", f.threads, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--out", f.out, "output / artifact directory");
    sub->add_option("--manifest", f.manifest, "dataset manifest (tab-separated)");
    sub->add_option("--mode", f.mode, "contribution mode: hard|kernel|uncertainty|plausibility");
    sub->add_option("--sigma", f.sigma, "Gaussian bandwidth (default: mean quantization distance)");
    sub->add_option("--epsilon", f.epsilon, "weight floor for soft assignment");
    sub->add_option("--top-t", f.top_t, "words kept per feature");
    sub->add_option("--vocab", f.vocab, "codebook size K");
    sub->add_option("--rank-r", f.rank_r, "neighbourhood size R");
    sub->add_option("--patch", f.patch, "patch side in pixels (odd)");
    sub->add_option("--stride", f.stride, "patch grid stride");
    sub->add_option("--pca-dim", f.pca_dim, "reduced descriptor length");
    sub->add_option("--classifier", f.classifiers, "svm|knn|knn-l1 (comma separated)")->delimiter(',');
    sub->add_option("--k", f.k, "neighbours for k-NN");
    sub->add_option("--c", f.c, "SVM regularization C");
    sub->add_option("--tol", f.tol, "SMO KKT tolerance");
    sub->add_option("--cutoffs", f.cutoffs, "precision/recall cutoffs (comma separated)")->delimiter(',');
    sub->add_option("--top-n", f.top_n, "retrieval list length");
    sub->add_flag("--self-pairs", f.self_pairs, "count each feature as its own neighbour");
    sub->add_flag("--normalize-distribution", f.norm_dist, "divide each distribution by its total mass");
    sub->add_flag("--normalize-kernel", f.norm_kernel, "cosine-normalize kernel values");
}

// stored config.json (when `use_stored`) < --config file < command-line flags
apd::RunConfig effective_config(const SharedFlags& f, bool use_stored) {
    apd::RunConfig cfg;
    if (use_stored && f.out) {
        const fs::path stored = fs::path(*f.out) / "config.json";
        if (!fs::exists(stored)) throw apd::ArtifactError("missing artifact config.json: " + stored.string());
        cfg = apd::load_config(stored);
    }
    if (!f.config.empty()) cfg = apd::load_config(f.config, cfg);
    if (f.seed) cfg.seed = *f.seed;
    if (f.out) cfg.out = *f.out;
    if (f.manifest) cfg.manifest = *f.manifest;
    if (f.mode) cfg.mode = apd::parse_variant(*f.mode);
    if (f.sigma) cfg.sigma = *f.sigma;
    if (f.epsilon) cfg.epsilon = *f.epsilon;
    if (f.top_t) cfg.top_t = *f.top_t;
    if (f.vocab) cfg.vocab = *f.vocab;
    if (f.rank_r) cfg.rank_r = *f.rank_r;
    if (f.patch) cfg.patch = *f.patch;
    if (f.stride) cfg.stride = *f.stride;
    if (f.pca_dim) cfg.pca_dim = *f.pca_dim;
    if (!f.classifiers.empty()) cfg.classifiers = f.classifiers;
    if (f.k) cfg.knn_k = *f.k;
    if (f.c) cfg.svm_c = *f.c;
    if (f.tol) cfg.svm_tol = *f.tol;
    if (!f.cutoffs.empty()) cfg.cutoffs = f.cutoffs;
    if (f.top_n) cfg.top_n = *f.top_n;
    if (f.self_pairs) cfg.include_self_pairs = true;
    if (f.norm_dist) cfg.normalize_distribution = true;
    if (f.norm_kernel) cfg.normalize_kernel = true;
    if (cfg.out.empty()) throw UsageError("--out is required");
    try {
        cfg.validate();
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    return cfg;
}

void print_accuracy(const apd::Report& r) {
    for (const auto& a : r.accuracy_by_mode)
        std::printf("%-14s %-7s K=%-4zu accuracy=%.4f (n=%zu)\n", a.mode.c_str(), a.classifier.c_str(), a.vocab, a.accuracy, a.n_test);
}

apd::Split parse_split(const std::string& s) {
    if (s == "train") return apd::Split::Train;
    if (s == "test") return apd::Split::Test;
    throw UsageError("--split must be train or test");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Ambiguous proximity distribution kernels for image classification and retrieval"};
    app.require_subcommand(1);

    apd::SyntheticSpec synth;
    std::string synth_out;
    auto* cmd_synth = app.add_subcommand("synth", "generate the procedural texture dataset");
    cmd_synth->add_option("--classes", synth.classes, "number of classes")->default_val(4);
    cmd_synth->add_option("--per-class", synth.per_class, "images per class")->default_val(30);
    cmd_synth->add_option("--side", synth.side, "image side in pixels")->default_val(64);
    cmd_synth->add_option("--seed", synth.seed, "random seed")->default_val(7);
    cmd_synth->add_option("--out", synth_out, "output directory")->required();

    SharedFlags train_flags, classify_flags, retrieve_flags, sweep_flags, cv_flags;
    auto* cmd_train = app.add_subcommand("train", "learn PCA, codebook, distributions, Gram matrix and SVM");
    add_shared(cmd_train, train_flags);

    std::string classify_split = "test";
    bool classify_self = false;
    auto* cmd_classify = app.add_subcommand("classify", "classify a split with trained artifacts");
    add_shared(cmd_classify, classify_flags);
    cmd_classify->add_option("--split", classify_split, "train|test")->default_val("test");
    cmd_classify->add_flag("--allow-self", classify_self, "let a query match itself in the training set");

    std::string retrieve_split = "test";
    bool retrieve_self = false;
    auto* cmd_retrieve = app.add_subcommand("retrieve", "ranked retrieval against the training set");
    add_shared(cmd_retrieve, retrieve_flags);
    cmd_retrieve->add_option("--split", retrieve_split, "train|test")->default_val("test");
    cmd_retrieve->add_flag("--allow-self", retrieve_self, "keep the query itself in the database");

    std::vector<std::size_t> vocab_sizes;
    std::vector<std::string> sweep_modes;
    auto* cmd_sweep = app.add_subcommand("sweep", "train+classify over vocab sizes x contribution modes");
    add_shared(cmd_sweep, sweep_flags);
    cmd_sweep->add_option("--vocab-sizes", vocab_sizes, "comma separated K values")->delimiter(',')->required();
    cmd_sweep->add_option("--modes", sweep_modes, "comma separated modes")->delimiter(',')->required();

    apd::CvOptions cv_opts;
    auto* cmd_cv = app.add_subcommand("cv", "repeated random-split cross-validation");
    add_shared(cmd_cv, cv_flags);
    cmd_cv->add_option("--repeats", cv_opts.repeats, "number of random splits")->default_val(20);
    cmd_cv->add_option("--test-count", cv_opts.test_count, "test images per split (default 20%)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (cmd_synth->parsed()) {
            try {
                apd::cmd_synth(synth, synth_out);
            } catch (const std::invalid_argument& e) {
                throw UsageError(e.what());
            }
            std::cout << (fs::path(synth_out) / "manifest.tsv").string() << '\n';
        } else if (cmd_train->parsed()) {
            const auto cfg = effective_config(train_flags, false);
            const auto tp = apd::cmd_train(cfg, train_flags.threads);
            std::printf("trained on %zu images: K=%zu sigma=%.6g -> %s\n", tp.ids.size(), tp.vocab.codebook.size(), tp.vocab.mode.sigma,
                        cfg.out.c_str());
        } else if (cmd_classify->parsed()) {
            const auto cfg = effective_config(classify_flags, true);
            print_accuracy(apd::cmd_classify(cfg, {parse_split(classify_split), classify_self}, classify_flags.threads));
        } else if (cmd_retrieve->parsed()) {
            const auto cfg = effective_config(retrieve_flags, true);
            const auto r = apd::cmd_retrieve(cfg, {parse_split(retrieve_split), retrieve_self}, retrieve_flags.threads);
            for (const auto& p : r.pr_table) std::printf("%-14s @%-4zu precision=%.4f recall=%.4f\n", p.mode.c_str(), p.cutoff, p.precision, p.recall);
        } else if (cmd_sweep->parsed()) {
            const auto cfg = effective_config(sweep_flags, false);
            std::vector<apd::Variant> modes;
            for (const auto& m : sweep_modes) {
                try {
                    modes.push_back(apd::parse_variant(m));
                } catch (const std::invalid_argument& e) {
                    throw UsageError(e.what());
                }
            }
            std::cout << apd::format_sweep_table(apd::cmd_sweep(cfg, vocab_sizes, modes, sweep_flags.threads));
        } else if (cmd_cv->parsed()) {
            const auto cfg = effective_config(cv_flags, false);
            const auto res = apd::cmd_cross_validate(cfg, cv_opts, cv_flags.threads);
            nlohmann::json j{{"accuracies", res.accuracies}, {"mean", res.mean}, {"std", res.stddev}, {"config", apd::to_json(cfg)}};
            fs::create_directories(cfg.out);
            apd::atomic_write_text(fs::path(cfg.out) / "cv.json", j.dump(2) + "\n");
            std::printf("accuracy %.4f +- %.4f over %zu repeats\n", res.mean, res.stddev, res.accuracies.size());
        }
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 2;
    } catch (const apd::ArtifactError& e) {
        std::cerr << "artifact error: " << e.what() << '\n';
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
    return 0;
}
