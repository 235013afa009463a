#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "apd/codebook.hpp"
#include "apd/config.hpp"
#include "apd/contribution.hpp"
#include "apd/eval.hpp"
#include "apd/features.hpp"
#include "apd/imageio.hpp"
#include "apd/kernels.hpp"
#include "apd/learn.hpp"
#include "apd/proximity.hpp"
#include "apd/store.hpp"

namespace apd {

/// A failure inside one named pipeline stage (features, pca, codebook, ...).
class StageError : public std::runtime_error {
public:
    StageError(std::string stage, const std::string& what);
    const std::string& stage() const { return stage_; }

private:
    std::string stage_;
};

/// Everything needed to turn an image into its representation.
struct Vocabulary {
    PcaModel pca;
    Codebook codebook;
    ContributionMode mode;  // sigma already resolved
};

struct Representation {
    ProximityDistribution dist;
    VwHistogram hist;  // hard-assignment, L1-normalized word histogram
};

struct TrainedPipeline {
    RunConfig config;
    Vocabulary vocab;
    std::vector<std::string> ids;
    std::vector<std::string> labels;
    std::vector<ProximityDistribution> dists;
    std::vector<VwHistogram> hists;
    GramMatrix gram;
    OvoSvmModel svm;
};

ContributionMode resolve_mode(const RunConfig& cfg, const Codebook& cb);

Representation represent(const GrayImage& img, const Vocabulary& vocab, const RunConfig& cfg, const std::string& source = {});

/// Learns PCA, codebook, training representations, Gram matrix and the SVM from
/// the given manifest entries.
TrainedPipeline fit_pipeline(const DatasetManifest& manifest, const std::vector<std::size_t>& train, const RunConfig& cfg,
                             unsigned threads, std::map<std::string, double>* timings = nullptr);

/// Predicts with one classifier ("svm", "knn", "knn-l1"). `exclude` drops one
/// training item from the neighbour search (used when the query is itself in
/// the training set).
std::string predict(const std::string& classifier, const Representation& query, const std::vector<double>& kernel_row,
                    const TrainedPipeline& tp, std::optional<std::size_t> exclude = std::nullopt);

struct EvalOptions {
    Split split = Split::Test;
    bool allow_self = false;
};

void cmd_synth(const SyntheticSpec& spec, const std::filesystem::path& out);

/// Trains on the manifest's train split and persists every artifact under cfg.out.
TrainedPipeline cmd_train(const RunConfig& cfg, unsigned threads);

/// Loads a trained run from its artifact directory. Training-time settings in
/// `overrides` must agree with the stored config.
TrainedPipeline load_trained(const std::filesystem::path& dir, const std::optional<RunConfig>& overrides = std::nullopt);

/// Evaluates the chosen split with every configured classifier; writes report.json
/// and predictions.tsv into cfg.out.
Report cmd_classify(const RunConfig& cfg, const EvalOptions& opts, unsigned threads);

/// Ranked retrieval of each query against the training database; writes
/// report.json (PR table) and rankings.tsv into cfg.out.
Report cmd_retrieve(const RunConfig& cfg, const EvalOptions& opts, unsigned threads);

/// Cross product of vocab sizes and modes, one train+classify per cell in
/// cfg.out/K<vocab>_<mode>. Failed cells are recorded and the sweep continues.
Report cmd_sweep(const RunConfig& cfg, const std::vector<std::size_t>& vocab_sizes, const std::vector<Variant>& modes, unsigned threads);

/// Text table: one row per vocab size, one column per mode/classifier.
std::string format_sweep_table(const Report& r);

/// Repeated random splits over the whole manifest, retraining the full pipeline
/// per repeat and scoring with the first configured classifier.
CvResult cmd_cross_validate(const RunConfig& cfg, const CvOptions& cv, unsigned threads);

}  // namespace apd
