#include "apd/eval.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "apd/store.hpp"

namespace apd {

using nlohmann::json;

RankedResult rank_scores(const std::string& query_id, const std::vector<double>& scores, const std::vector<std::string>& ids,
                         std::size_t top_n) {
    if (scores.empty()) throw std::invalid_argument("retrieve: empty database");
    if (scores.size() != ids.size()) throw std::invalid_argument("retrieve: score/id length mismatch");
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return ids[a] < ids[b];
    });
    RankedResult res;
    res.query_id = query_id;
    const std::size_t keep = std::min(top_n, scores.size());
    res.items.reserve(keep);
    for (std::size_t r = 0; r < keep; ++r) res.items.emplace_back(ids[order[r]], scores[order[r]]);
    return res;
}

RankedResult retrieve(const std::string& query_id, const ProximityDistribution& query, const std::vector<ProximityDistribution>& database,
                      const std::vector<std::string>& ids, std::size_t top_n, const KernelOptions& opts) {
    if (database.empty()) throw std::invalid_argument("retrieve: empty database");
    return rank_scores(query_id, kernel_row(query, database, opts), ids, top_n);
}

PrCurve precision_recall(const RankedResult& result, const std::unordered_map<std::string, std::string>& database_labels,
                         const std::string& query_label, const std::vector<std::size_t>& cutoffs) {
    if (!std::is_sorted(cutoffs.begin(), cutoffs.end())) throw std::invalid_argument("precision_recall: cutoffs must be ascending");
    std::size_t total_relevant = 0;
    for (const auto& [id, label] : database_labels)
        if (label == query_label) ++total_relevant;
    if (total_relevant == 0)
        throw std::invalid_argument("precision_recall: query label '" + query_label + "' absent from database; recall undefined");

    PrCurve curve;
    std::size_t hits = 0, seen = 0;
    for (std::size_t c : cutoffs) {
        if (c < 1 || c > result.items.size())
            throw std::invalid_argument("precision_recall: cutoff " + std::to_string(c) + " outside result length " +
                                        std::to_string(result.items.size()));
        for (; seen < c; ++seen) {
            const auto it = database_labels.find(result.items[seen].first);
            if (it == database_labels.end()) throw std::invalid_argument("precision_recall: unknown id " + result.items[seen].first);
            if (it->second == query_label) ++hits;
        }
        curve.cutoffs.push_back(c);
        curve.precision.push_back(static_cast<double>(hits) / static_cast<double>(c));
        curve.recall.push_back(static_cast<double>(hits) / static_cast<double>(total_relevant));
    }
    return curve;
}

double accuracy(const std::vector<std::string>& predictions, const std::vector<std::string>& truth) {
    if (predictions.size() != truth.size()) throw std::invalid_argument("accuracy: length mismatch");
    if (truth.empty()) throw std::invalid_argument("accuracy: empty input");
    std::size_t correct = 0;
    for (std::size_t i = 0; i < truth.size(); ++i)
        if (predictions[i] == truth[i]) ++correct;
    return static_cast<double>(correct) / static_cast<double>(truth.size());
}

std::vector<PrRow> average_curves(const std::string& mode, const std::vector<PrCurve>& curves) {
    std::vector<PrRow> rows;
    if (curves.empty()) return rows;
    const auto& cutoffs = curves.front().cutoffs;
    for (std::size_t c = 0; c < cutoffs.size(); ++c) {
        PrRow row{mode, cutoffs[c], 0, 0};
        for (const auto& cv : curves) {
            if (cv.cutoffs != cutoffs) throw std::invalid_argument("average_curves: curves use different cutoffs");
            row.precision += cv.precision[c];
            row.recall += cv.recall[c];
        }
        row.precision /= static_cast<double>(curves.size());
        row.recall /= static_cast<double>(curves.size());
        rows.push_back(row);
    }
    return rows;
}

json to_json(const Report& r) {
    json j;
    j["config"] = r.config;
    j["accuracy_by_mode"] = json::array();
    for (const auto& a : r.accuracy_by_mode) {
        json row = {{"mode", a.mode}, {"classifier", a.classifier}, {"vocab", a.vocab}, {"n_test", a.n_test}, {"ok", a.ok}};
        if (a.ok)
            row["accuracy"] = a.accuracy;
        else
            row["error"] = a.error;
        j["accuracy_by_mode"].push_back(row);
    }
    if (!r.pr_table.empty()) {
        j["pr_table"] = json::array();
        for (const auto& p : r.pr_table)
            j["pr_table"].push_back({{"mode", p.mode}, {"cutoff", p.cutoff}, {"precision", p.precision}, {"recall", p.recall}});
    }
    j["timings"] = r.timings;
    return j;
}

Report report_from_json(const json& j) {
    Report r;
    r.config = j.value("config", json::object());
    for (const auto& row : j.value("accuracy_by_mode", json::array())) {
        AccuracyRow a;
        a.mode = row.at("mode").get<std::string>();
        a.classifier = row.at("classifier").get<std::string>();
        a.vocab = row.at("vocab").get<std::size_t>();
        a.n_test = row.value("n_test", std::size_t{0});
        a.ok = row.value("ok", true);
        a.accuracy = row.value("accuracy", 0.0);
        a.error = row.value("error", std::string{});
        r.accuracy_by_mode.push_back(a);
    }
    for (const auto& row : j.value("pr_table", json::array()))
        r.pr_table.push_back({row.at("mode").get<std::string>(), row.at("cutoff").get<std::size_t>(), row.at("precision").get<double>(),
                              row.at("recall").get<double>()});
    if (j.contains("timings")) r.timings = j.at("timings").get<std::map<std::string, double>>();
    return r;
}

void write_report(const std::filesystem::path& path, const Report& r) { atomic_write_text(path, to_json(r).dump(2) + "\n"); }

Report read_report(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("unreadable file: " + path.string());
    return report_from_json(json::parse(in));
}

void write_report_csv(const std::filesystem::path& path, const Report& r) {
    std::ostringstream out;
    out.precision(17);
    out << "section,mode,classifier,vocab,cutoff,accuracy,precision,recall,status\n";
    for (const auto& a : r.accuracy_by_mode) {
        out << "accuracy," << a.mode << ',' << a.classifier << ',' << a.vocab << ",,";
        if (a.ok) out << a.accuracy;
        out << ",,," << (a.ok ? "ok" : "failed") << '\n';
    }
    for (const auto& p : r.pr_table)
        out << "pr," << p.mode << ",,," << p.cutoff << ",," << p.precision << ',' << p.recall << ",ok\n";
    atomic_write_text(path, out.str());
}

}  // namespace apd
