#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "apd/contribution.hpp"

namespace apd {

/// Every tunable of a train/classify/retrieve run. Serialized losslessly to
/// config.json. Thread count is an execution setting and is not part of it.
struct RunConfig {
    // features
    int patch = 9;
    int stride = 4;
    std::size_t pca_dim = 7;
    std::size_t pca_max_samples = 100000;
    // codebook
    std::size_t vocab = 200;
    int kmeans_max_iter = 100;
    std::size_t kmeans_max_samples = 100000;
    // contribution; sigma <= 0 means "use the codebook's mean quantization distance"
    Variant mode = Variant::Uncertainty;
    double sigma = 0;
    std::size_t top_t = 5;
    double epsilon = 1e-8;
    // proximity
    std::size_t rank_r = 16;
    bool include_self_pairs = false;
    bool normalize_distribution = false;
    // kernels / learning
    bool normalize_kernel = false;
    std::vector<std::string> classifiers{"svm"};  // svm | knn | knn-l1
    std::size_t knn_k = 1;
    double svm_c = 1.0;
    double svm_tol = 1e-3;
    // evaluation
    std::vector<std::size_t> cutoffs{5, 10, 15, 20, 30};
    std::size_t top_n = 1000;
    std::uint64_t seed = 1;
    // paths
    std::string manifest;
    std::string out;

    void validate() const;
};

nlohmann::json to_json(const RunConfig& c);
/// Fields absent from `j` keep the values already in `base`.
RunConfig config_from_json(const nlohmann::json& j, RunConfig base = {});
RunConfig load_config(const std::filesystem::path& path, RunConfig base = {});

}  // namespace apd
