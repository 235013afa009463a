#include <gtest/gtest.h>

#include <random>

#include "apd/eval.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace apd;

namespace {

RankedResult ranking(const std::vector<std::string>& ids) {
    RankedResult r{"q", {}};
    double s = static_cast<double>(ids.size());
    for (const auto& id : ids) r.items.push_back({id, s--});
    return r;
}

}  // namespace

TEST(PrecisionRecall, AllTopFiveRelevant) {
    std::vector<std::string> ids;
    std::unordered_map<std::string, std::string> labels;
    for (int i = 0; i < 20; ++i) {
        ids.push_back("i" + std::to_string(i));
        labels[ids.back()] = i < 5 || i >= 15 ? "A" : "B";
    }
    const auto c = precision_recall(ranking(ids), labels, "A", {5});
    EXPECT_EQ(c.precision[0], 1.0);
    EXPECT_EQ(c.recall[0], 0.5);
}

TEST(PrecisionRecall, NoneRelevantRetrieved) {
    std::unordered_map<std::string, std::string> labels{{"a", "B"}, {"b", "B"}, {"c", "A"}};
    const auto c = precision_recall(ranking({"a", "b"}), labels, "A", {1, 2});
    EXPECT_EQ(c.precision, (std::vector<double>{0, 0}));
    EXPECT_EQ(c.recall, (std::vector<double>{0, 0}));
}

TEST(PrecisionRecall, HandCountedTwentyItems) {
    // relevance pattern, R = relevant:  R R . R . | . R . . R | R . . . . | R . R . .
    const std::string pattern = "RR.R..R..RR....R.R..";
    std::vector<std::string> ids;
    std::unordered_map<std::string, std::string> labels;
    for (std::size_t i = 0; i < pattern.size(); ++i) {
        ids.push_back("d" + std::to_string(i));
        labels[ids.back()] = pattern[i] == 'R' ? "q" : "x";
    }
    labels["extra"] = "q";  // relevant but never retrieved
    const auto c = precision_recall(ranking(ids), labels, "q", {5, 10, 15, 20});
    const double total = 9;
    EXPECT_EQ(c.precision, (std::vector<double>{3.0 / 5, 5.0 / 10, 6.0 / 15, 8.0 / 20}));
    EXPECT_EQ(c.recall, (std::vector<double>{3 / total, 5 / total, 6 / total, 8 / total}));
}

TEST(PrecisionRecall, Errors) {
    std::unordered_map<std::string, std::string> labels{{"a", "B"}};
    EXPECT_THROW(precision_recall(ranking({"a"}), labels, "A", {1}), std::invalid_argument);
    labels["b"] = "A";
    EXPECT_THROW(precision_recall(ranking({"a", "b"}), labels, "A", {3}), std::invalid_argument);
}

TEST(PrecisionRecall, RandomInvariants) {
    std::mt19937_64 rng(61);
    std::uniform_int_distribution<int> lab(0, 2);
    for (int t = 0; t < 50; ++t) {
        std::vector<std::string> ids;
        std::unordered_map<std::string, std::string> labels;
        for (int i = 0; i < 30; ++i) {
            ids.push_back(std::to_string(i));
            labels[ids.back()] = std::string(1, static_cast<char>('a' + lab(rng)));
        }
        labels["anchor"] = "a";
        std::shuffle(ids.begin(), ids.end(), rng);
        const std::vector<std::size_t> cuts{5, 10, 15, 20, 30};
        const auto c = precision_recall(ranking(ids), labels, "a", cuts);
        for (std::size_t k = 1; k < cuts.size(); ++k) {
            EXPECT_GE(c.recall[k], c.recall[k - 1]);
            const double hits = c.precision[k] * cuts[k], prev = c.precision[k - 1] * cuts[k - 1];
            EXPECT_NEAR(hits, std::round(hits), 1e-9);
            EXPECT_GE(hits + 1e-9, prev);
        }
    }
}

TEST(Ranking, OrderTiesAndTruncation) {
    const auto r = rank_scores("q", {1, 3, 3, 0.5}, {"d", "c", "b", "a"}, 3);
    ASSERT_EQ(r.items.size(), 3u);
    EXPECT_EQ(r.items[0].first, "b");
    EXPECT_EQ(r.items[1].first, "c");
    EXPECT_EQ(r.items[2].first, "d");
    EXPECT_EQ(rank_scores("q", {1, 2}, {"a", "b"}, 10).items.size(), 2u);
}

TEST(Ranking, RetrieveMatchesIndependentScores) {
    std::mt19937_64 rng(62);
    std::vector<ProximityDistribution> db;
    std::vector<std::string> ids;
    for (int i = 0; i < 10; ++i) {
        const auto fs = oracle::random_features(rng, 8, 2);
        const auto cb = oracle::random_codebook(rng, 4, 2);
        db.push_back(build_distribution(assign_all(cb, fs, {Variant::Hard, 1, 4, 0}), rank_neighbors(fs, 3), 4, 3));
        ids.push_back("img" + std::to_string(i));
    }
    const auto r = retrieve("img4", db[4], db, ids, 10);
    ASSERT_EQ(r.items.size(), 10u);
    EXPECT_EQ(r.items[0].first, "img4");
    std::vector<std::pair<double, std::string>> ref;
    for (int i = 0; i < 10; ++i) ref.push_back({-pdk(db[4], db[i]), ids[i]});
    std::sort(ref.begin(), ref.end());
    for (int i = 0; i < 10; ++i) {
        EXPECT_EQ(r.items[i].first, ref[i].second);
        EXPECT_EQ(r.items[i].second, -ref[i].first);
    }
    const auto again = retrieve("img4", db[4], db, ids, 10, {false, 3});
    EXPECT_EQ(again.items, r.items);
}

TEST(Accuracy, Counts) {
    EXPECT_EQ(accuracy({"A", "B"}, {"A", "B"}), 1.0);
    EXPECT_EQ(accuracy({"B", "A"}, {"A", "B"}), 0.0);
    EXPECT_EQ(accuracy({"A", "B", "A"}, {"A", "A", "A"}), 2.0 / 3.0);
    EXPECT_THROW(accuracy({"A"}, {"A", "B"}), std::invalid_argument);
}

TEST(Report, RoundTripAndOmittedPr) {
    Report r;
    r.config = {{"vocab", 50}};
    r.accuracy_by_mode = {{"hard", "svm", 50, 0.8125, 16, true, ""}, {"uncertainty", "svm", 50, 1.0 / 3.0, 16, true, ""},
                          {"kernel", "svm", 900, 0, 0, false, "codebook: too large"}};
    r.timings["train"] = 0.123456789;
    auto j = to_json(r);
    EXPECT_FALSE(j.contains("pr_table"));
    EXPECT_EQ(j["accuracy_by_mode"].size(), 3u);

    r.pr_table = average_curves("hard", {{{5, 10}, {1.0, 0.5}, {0.2, 0.2}}, {{5, 10}, {0.6, 0.7}, {0.1, 0.3}}});
    ASSERT_EQ(r.pr_table.size(), 2u);
    EXPECT_DOUBLE_EQ(r.pr_table[0].precision, 0.8);
    EXPECT_DOUBLE_EQ(r.pr_table[1].recall, 0.25);

    const auto dir = testutil::scratch("rep");
    write_report(dir / "r.json", r);
    const auto back = read_report(dir / "r.json");
    ASSERT_EQ(back.accuracy_by_mode.size(), 3u);
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_EQ(back.accuracy_by_mode[i].accuracy, r.accuracy_by_mode[i].accuracy);
        EXPECT_EQ(back.accuracy_by_mode[i].ok, r.accuracy_by_mode[i].ok);
        EXPECT_EQ(back.accuracy_by_mode[i].error, r.accuracy_by_mode[i].error);
    }
    ASSERT_EQ(back.pr_table.size(), 2u);
    EXPECT_EQ(back.pr_table[0].precision, r.pr_table[0].precision);
    EXPECT_EQ(back.timings, r.timings);
    EXPECT_EQ(back.config, r.config);

    write_report_csv(dir / "r.csv", r);
    const auto csv = testutil::slurp(dir / "r.csv");
    EXPECT_NE(csv.find("uncertainty"), std::string::npos);
    EXPECT_NE(csv.find("accuracy,kernel,svm,900,,,,,failed\n"), std::string::npos);
}
