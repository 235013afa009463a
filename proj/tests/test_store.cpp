#include <gtest/gtest.h>

#include <random>

#include "apd/config.hpp"
#include "apd/store.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace apd;

namespace {

std::string expect_artifact_error(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const ArtifactError& e) {
        return e.what();
    }
    ADD_FAILURE() << "expected ArtifactError";
    return {};
}

}  // namespace

TEST(Store, RoundTrips) {
    std::mt19937_64 rng(71);
    const auto fs = oracle::random_features(rng, 12, 3);
    const auto cb = oracle::random_codebook(rng, 4, 3);
    const auto pd = build_distribution(assign_all(cb, fs, {Variant::Uncertainty, 0.5, 3, 1e-8}), rank_neighbors(fs, 4), 4, 4);
    EXPECT_EQ(decode_distribution(encode(pd)), pd);
    EXPECT_EQ(encode(decode_distribution(encode(pd))), encode(pd));

    const auto back = decode_codebook(encode(cb));
    EXPECT_EQ(back.centroids, cb.centroids);
    EXPECT_EQ(back.mean_nn_dist, cb.mean_nn_dist);

    std::vector<Descriptor> s(20, Descriptor(3));
    for (auto& x : s)
        for (auto& v : x) v = std::uniform_real_distribution<double>(0, 1)(rng);
    const auto pca = fit_pca(s, 2);
    const auto pb = decode_pca(encode(pca));
    EXPECT_EQ(pb.basis, pca.basis);
    EXPECT_EQ(pb.mean, pca.mean);
    EXPECT_EQ(pb.explained_variance, pca.explained_variance);

    GramMatrix g{2, {1, 0.5, 0.5, 2}, {"a", "b"}};
    const auto gb = decode_gram(encode(g));
    EXPECT_EQ(gb.values, g.values);
    EXPECT_EQ(gb.ids, g.ids);

    VwHistogram h{{0.25, 0.75}, true};
    EXPECT_EQ(decode_histogram(encode(h)).bins, h.bins);
    EXPECT_TRUE(decode_histogram(encode(h)).normalized);

    TrainedModel m;
    m.train_ids = {"a", "b"};
    m.train_labels = {"x", "y"};
    m.svm.labels = {"x", "y"};
    m.svm.train_size = 2;
    BinarySvmModel bm;
    bm.support = {0, 1};
    bm.coef = {0.5, -0.5};
    bm.bias = 0.1;
    bm.C = 2;
    bm.positive = "x";
    bm.negative = "y";
    m.svm.models = {bm};
    const auto mb = decode_model(encode(m));
    EXPECT_EQ(mb.train_ids, m.train_ids);
    EXPECT_EQ(mb.svm.models[0].coef, bm.coef);
    EXPECT_EQ(mb.svm.models[0].bias, bm.bias);
    EXPECT_EQ(mb.svm.models[0].positive, "x");
}

TEST(Store, RejectsBadMagicTypeAndTruncation) {
    const auto bytes = encode(Codebook{{{1.0, 2.0}, {3.0, 4.0}}, 10, 0.5});
    auto bad = bytes;
    bad[0] = 'X';
    EXPECT_NE(expect_artifact_error([&] { decode_codebook(bad); }).find("magic"), std::string::npos);
    EXPECT_NE(expect_artifact_error([&] { decode_gram(bytes); }).find("type"), std::string::npos);
    EXPECT_NE(expect_artifact_error([&] { decode_codebook(bytes.substr(0, bytes.size() - 3)); }).find("truncated"), std::string::npos);
    EXPECT_NE(expect_artifact_error([&] { decode_codebook(bytes + "x"); }).find("trailing"), std::string::npos);
    EXPECT_EQ(bytes.substr(0, 5), "APDX1");
}

TEST(Store, DirectoryLayoutAndMissingNames) {
    const auto dir = testutil::scratch("store");
    ArtifactStore store(dir / "run");
    store.prepare();
    EXPECT_NE(expect_artifact_error([&] { store.load_codebook(); }).find("codebook.bin"), std::string::npos);
    store.save(Codebook{{{1.0}, {2.0}}, 2, 0.1});
    EXPECT_EQ(store.load_codebook().size(), 2u);
    EXPECT_FALSE(std::filesystem::exists(dir / "run" / "codebook.bin.tmp"));
    testutil::spit(store.gram_path(), "APDX0garbage");
    EXPECT_NE(expect_artifact_error([&] { store.load_gram(); }).find("gram.bin"), std::string::npos);
    store.save_distribution("img_1", ProximityDistribution(2, 3));
    EXPECT_EQ(store.load_distribution("img_1"), ProximityDistribution(2, 3));
}

TEST(Store, ImageIds) {
    EXPECT_EQ(image_id("images/class00_001.pgm"), "images_class00_001");
    EXPECT_EQ(image_id("a b/c.png"), "a_b_c");
}

TEST(Config, JsonRoundTripAndOverlay) {
    RunConfig c;
    c.vocab = 77;
    c.mode = Variant::Plausibility;
    c.classifiers = {"svm", "knn"};
    c.cutoffs = {1, 2};
    const auto back = config_from_json(to_json(c));
    EXPECT_EQ(to_json(back), to_json(c));
    const auto partial = config_from_json(nlohmann::json{{"rank_r", 3}}, c);
    EXPECT_EQ(partial.rank_r, 3u);
    EXPECT_EQ(partial.vocab, 77u);

    const auto dir = testutil::scratch("cfg");
    testutil::spit(dir / "c.json", R"({"mode": "hard", "sigma": 0.25})");
    const auto loaded = load_config(dir / "c.json");
    EXPECT_EQ(loaded.mode, Variant::Hard);
    EXPECT_EQ(loaded.sigma, 0.25);
    testutil::spit(dir / "bad.json", "{not json");
    EXPECT_THROW(load_config(dir / "bad.json"), DataError);
}

TEST(Config, Validation) {
    RunConfig c;
    EXPECT_NO_THROW(c.validate());
    auto bad = c;
    bad.patch = 8;
    EXPECT_THROW(bad.validate(), std::invalid_argument);
    bad = c;
    bad.classifiers = {"tree"};
    EXPECT_THROW(bad.validate(), std::invalid_argument);
    bad = c;
    bad.cutoffs = {10, 5};
    EXPECT_THROW(bad.validate(), std::invalid_argument);
    bad = c;
    bad.pca_dim = 82;
    EXPECT_THROW(bad.validate(), std::invalid_argument);
}
