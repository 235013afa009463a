#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "apd/kernels.hpp"

namespace apd {

struct RankedResult {
    std::string query_id;
    std::vector<std::pair<std::string, double>> items;  // (database id, score), best first
};

/// Sorts scores descending (ties by id ascending) and keeps the first top_n.
RankedResult rank_scores(const std::string& query_id, const std::vector<double>& scores, const std::vector<std::string>& ids,
                         std::size_t top_n);

RankedResult retrieve(const std::string& query_id, const ProximityDistribution& query, const std::vector<ProximityDistribution>& database,
                      const std::vector<std::string>& ids, std::size_t top_n, const KernelOptions& opts = {});

struct PrCurve {
    std::vector<std::size_t> cutoffs;
    std::vector<double> precision;
    std::vector<double> recall;
};

/// Relevance is label equality with the query. Recall is relative to every
/// relevant item in the database, not just the retrieved ones.
PrCurve precision_recall(const RankedResult& result, const std::unordered_map<std::string, std::string>& database_labels,
                         const std::string& query_label, const std::vector<std::size_t>& cutoffs);

double accuracy(const std::vector<std::string>& predictions, const std::vector<std::string>& truth);

struct AccuracyRow {
    std::string mode;
    std::string classifier;
    std::size_t vocab = 0;
    double accuracy = 0;
    std::size_t n_test = 0;
    bool ok = true;
    std::string error;
};

struct PrRow {
    std::string mode;
    std::size_t cutoff = 0;
    double precision = 0;
    double recall = 0;
};

struct Report {
    nlohmann::json config = nlohmann::json::object();
    std::vector<AccuracyRow> accuracy_by_mode;
    std::vector<PrRow> pr_table;
    std::map<std::string, double> timings;  // seconds
};

nlohmann::json to_json(const Report& r);
Report report_from_json(const nlohmann::json& j);

/// Mean precision and recall per cutoff across queries.
std::vector<PrRow> average_curves(const std::string& mode, const std::vector<PrCurve>& curves);

void write_report(const std::filesystem::path& path, const Report& r);
Report read_report(const std::filesystem::path& path);
/// Flat CSV: one line per accuracy row and per PR row.
void write_report_csv(const std::filesystem::path& path, const Report& r);

}  // namespace apd
