#pragma once

#include "mtrail/history_json.hpp"
#include "mtrail/tracer.hpp"

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mtrail {

struct ExpectedChange {
    std::string commit;
    ChangeKinds kinds;
    std::vector<std::string> opaque_tags;  ///< foreign change types with no mapping
};

/// Ground-truth history of one method, newest first.
struct OracleEntry {
    std::string name;  ///< file stem, used for ordering
    std::string repository;
    std::string start_commit;
    std::string file;
    std::string method_name;
    int start_line = 0;
    std::vector<ExpectedChange> expected;
};

enum class OracleFormat { Native, CodeShovel, CodeTracker };

std::optional<OracleFormat> oracle_format_from_string(std::string_view name) noexcept;

struct OracleLoad {
    std::vector<OracleEntry> entries;      ///< ordered by name
    std::vector<std::string> diagnostics;  ///< one per skipped or lossy file
};

/// Reads every *.json file in `dir`. Malformed files are skipped with a
/// MalformedOracleFile diagnostic.
OracleLoad load_oracle(const std::filesystem::path& dir, OracleFormat format);

/// Strict parser for the native schema. Throws Error(MalformedOracleFile).
OracleEntry parse_native_oracle(std::string_view json_text, std::string name);
OracleEntry parse_codeshovel_oracle(std::string_view json_text, std::string name,
                                    std::vector<std::string>& diagnostics);
OracleEntry parse_codetracker_oracle(std::string_view json_text, std::string name,
                                     std::vector<std::string>& diagnostics);

/// Native oracle JSON (schema/oracle-v1.json), canonical formatting.
std::string to_native_json(const OracleEntry& entry);

struct MetricCounts {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;

    friend bool operator==(const MetricCounts&, const MetricCounts&) = default;
};

/// Percentages rounded half-up to two decimals.
struct Scores {
    double precision = 0;
    double recall = 0;
    double f1 = 0;
};

struct RuntimeStats {
    double mean = 0;
    double median = 0;
    double min = 0;
    double max = 0;
};

/// A (commit, kinds) pair from either side of a comparison.
struct ObservedChange {
    std::string commit;
    ChangeKinds kinds;
    bool opaque = false;  ///< carries only unmapped tags; survives any filter
};

/// Commit-identity comparison after dropping changes with no kind in
/// `kind_filter`. Abbreviated ids (>= 7 chars) match by prefix.
MetricCounts compare(std::span<const ObservedChange> actual, std::span<const ObservedChange> expected,
                     const ChangeKinds& kind_filter);
MetricCounts compare(const MethodHistory& actual, const OracleEntry& expected, const ChangeKinds& kind_filter);
MetricCounts compare(const HistoryDocument& actual, const OracleEntry& expected, const ChangeKinds& kind_filter);

std::vector<ObservedChange> observed(const MethodHistory& history);
std::vector<ObservedChange> observed(const HistoryDocument& document);
std::vector<ObservedChange> observed(const OracleEntry& entry);

double round_half_up_2(double value);

/// Scores from summed counts. Throws Error(EmptyInput).
Scores commit_level_scores(std::span<const MetricCounts> counts);
/// Mean of per-method scores. Throws Error(EmptyInput).
Scores method_level_scores(std::span<const MetricCounts> per_method);
/// Throws Error(EmptyInput).
RuntimeStats runtime_stats(std::span<const double> durations_seconds);

/// One tool's row against one oracle.
struct EvaluationRow {
    std::string oracle;
    std::string tool;
    MetricCounts totals;
    Scores commit_level;
    Scores method_level;
    std::vector<std::pair<std::string, MetricCounts>> per_method;
};

EvaluationRow evaluate_row(std::string oracle, std::string tool,
                           std::vector<std::pair<std::string, MetricCounts>> per_method);

/// Aligned text table: Oracle, Tool, TP, FP, FN, then commit-level and
/// method-level precision/recall/F1.
std::string format_table(std::span<const EvaluationRow> rows);
std::string format_report_json(std::span<const EvaluationRow> rows);

}  // namespace mtrail
