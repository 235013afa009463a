#include "apd/config.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>

#include "apd/imageio.hpp"

namespace apd {

using nlohmann::json;

void RunConfig::validate() const {
    auto fail = [](const std::string& m) { throw std::invalid_argument("config: " + m); };
    if (patch < 1 || patch % 2 == 0) fail("patch must be odd and >= 1");
    if (stride < 1) fail("stride must be >= 1");
    if (pca_dim < 1 || pca_dim > static_cast<std::size_t>(patch) * patch) fail("pca-dim must be in [1, patch^2]");
    if (pca_max_samples < pca_dim + 1) fail("pca_max_samples too small");
    if (vocab < 2) fail("vocab must be >= 2");
    if (kmeans_max_iter < 1) fail("kmeans_max_iter must be >= 1");
    if (kmeans_max_samples < 2) fail("kmeans_max_samples must be >= 2");
    if (sigma < 0) fail("sigma must be >= 0 (0 = automatic)");
    if (top_t < 1) fail("top-t must be >= 1");
    if (epsilon < 0) fail("epsilon must be >= 0");
    if (rank_r < 1) fail("rank-r must be >= 1");
    if (classifiers.empty()) fail("at least one classifier is required");
    for (const auto& c : classifiers)
        if (c != "svm" && c != "knn" && c != "knn-l1") fail("unknown classifier '" + c + "'");
    if (knn_k < 1) fail("k must be >= 1");
    if (!(svm_c > 0)) fail("c must be > 0");
    if (!(svm_tol > 0)) fail("tol must be > 0");
    if (!std::is_sorted(cutoffs.begin(), cutoffs.end())) fail("cutoffs must be ascending");
    if (std::find(cutoffs.begin(), cutoffs.end(), std::size_t{0}) != cutoffs.end()) fail("cutoffs must be >= 1");
    if (top_n < 1) fail("top-n must be >= 1");
}

json to_json(const RunConfig& c) {
    return json{
        {"patch", c.patch},
        {"stride", c.stride},
        {"pca_dim", c.pca_dim},
        {"pca_max_samples", c.pca_max_samples},
        {"vocab", c.vocab},
        {"kmeans_max_iter", c.kmeans_max_iter},
        {"kmeans_max_samples", c.kmeans_max_samples},
        {"mode", to_string(c.mode)},
        {"sigma", c.sigma},
        {"top_t", c.top_t},
        {"epsilon", c.epsilon},
        {"rank_r", c.rank_r},
        {"include_self_pairs", c.include_self_pairs},
        {"normalize_distribution", c.normalize_distribution},
        {"normalize_kernel", c.normalize_kernel},
        {"classifiers", c.classifiers},
        {"knn_k", c.knn_k},
        {"svm_c", c.svm_c},
        {"svm_tol", c.svm_tol},
        {"cutoffs", c.cutoffs},
        {"top_n", c.top_n},
        {"seed", c.seed},
        {"manifest", c.manifest},
        {"out", c.out},
    };
}

RunConfig config_from_json(const json& j, RunConfig c) {
    if (!j.is_object()) throw std::invalid_argument("config: expected a JSON object");
    auto get = [&](const char* key, auto& field) {
        if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    get("patch", c.patch);
    get("stride", c.stride);
    get("pca_dim", c.pca_dim);
    get("pca_max_samples", c.pca_max_samples);
    get("vocab", c.vocab);
    get("kmeans_max_iter", c.kmeans_max_iter);
    get("kmeans_max_samples", c.kmeans_max_samples);
    if (j.contains("mode")) c.mode = parse_variant(j.at("mode").get<std::string>());
    get("sigma", c.sigma);
    get("top_t", c.top_t);
    get("epsilon", c.epsilon);
    get("rank_r", c.rank_r);
    get("include_self_pairs", c.include_self_pairs);
    get("normalize_distribution", c.normalize_distribution);
    get("normalize_kernel", c.normalize_kernel);
    get("classifiers", c.classifiers);
    get("knn_k", c.knn_k);
    get("svm_c", c.svm_c);
    get("svm_tol", c.svm_tol);
    get("cutoffs", c.cutoffs);
    get("top_n", c.top_n);
    get("seed", c.seed);
    get("manifest", c.manifest);
    get("out", c.out);
    return c;
}

RunConfig load_config(const std::filesystem::path& path, RunConfig base) {
    std::ifstream in(path);
    if (!in) throw DataError("unreadable file: " + path.string());
    try {
        return config_from_json(json::parse(in), std::move(base));
    } catch (const json::exception& e) {
        throw DataError("bad config " + path.string() + ": " + e.what());
    }
}

}  // namespace apd
