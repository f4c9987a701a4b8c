#include "mtrail/evaluation.hpp"

#include "mtrail/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

namespace fs = std::filesystem;

namespace mtrail {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::optional<OracleFormat> oracle_format_from_string(std::string_view name) noexcept {
    if (name == "native") {
        return OracleFormat::Native;
    }
    if (name == "codeshovel") {
        return OracleFormat::CodeShovel;
    }
    if (name == "codetracker") {
        return OracleFormat::CodeTracker;
    }
    return std::nullopt;
}

namespace {

[[noreturn]] void malformed(const std::string& name, const std::string& why) {
    throw Error(ErrorCode::MalformedOracleFile, name + ": " + why);
}

json parse_json(std::string_view text, const std::string& name) {
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        malformed(name, e.what());
    }
}

void check_unique(const OracleEntry& entry) {
    std::set<std::string> seen;
    for (const auto& change : entry.expected) {
        if (!seen.insert(change.commit).second) {
            malformed(entry.name, "duplicate commit " + change.commit);
        }
    }
}

/// Maps a foreign change-type label onto our kinds; returns false when no
/// mapping exists.
bool map_foreign_kind(std::string label, ChangeKinds& kinds) {
    std::transform(label.begin(), label.end(), label.begin(), [](unsigned char c) { return std::tolower(c); });
    std::erase_if(label, [](char c) { return c == ' ' || c == '_' || c == '-'; });
    if (label.starts_with("y")) {
        label.erase(0, 1);
    }
    struct Rule {
        std::string_view key;
        std::initializer_list<ChangeKind> kinds;
    };
    static const Rule rules[] = {
        {"introduced", {ChangeKind::Introduced}},
        {"bodychange", {ChangeKind::BodyChange}},
        {"rename", {ChangeKind::Rename, ChangeKind::SignatureChange}},
        {"parameterchange", {ChangeKind::ParameterChange, ChangeKind::SignatureChange}},
        {"parametermetachange", {ChangeKind::ParameterChange, ChangeKind::SignatureChange}},
        {"returntypechange", {ChangeKind::SignatureChange}},
        {"modifierchange", {ChangeKind::SignatureChange}},
        {"exceptionschange", {ChangeKind::SignatureChange}},
        {"exceptionchange", {ChangeKind::SignatureChange}},
        {"signaturechange", {ChangeKind::SignatureChange}},
        {"movefromfile", {ChangeKind::MethodMove}},
        {"methodmove", {ChangeKind::MethodMove}},
        {"moved", {ChangeKind::MethodMove}},
        {"move", {ChangeKind::MethodMove}},
        {"containerchange", {ChangeKind::MethodMove}},
        {"filerename", {ChangeKind::FileRename}},
        {"filemove", {ChangeKind::FileRename}},
        {"annotationchange", {ChangeKind::AnnotationChange}},
        {"docchange", {ChangeKind::JavadocChange}},
        {"documentationchange", {ChangeKind::JavadocChange}},
        {"javadocchange", {ChangeKind::JavadocChange}},
        {"formatchange", {ChangeKind::FormattingChange}},
        {"formattingchange", {ChangeKind::FormattingChange}},
        {"mergeresolutionchange", {ChangeKind::MergeResolutionChange}},
    };
    for (const auto& rule : rules) {
        if (label == rule.key) {
            kinds.insert(rule.kinds.begin(), rule.kinds.end());
            return true;
        }
    }
    return false;
}

void add_foreign_label(ExpectedChange& change, const std::string& label) {
    // "Ymultichange(Yrename,Ybodychange)"
    const auto open = label.find('(');
    if (open != std::string::npos && label.back() == ')') {
        std::stringstream inner(label.substr(open + 1, label.size() - open - 2));
        std::string part;
        while (std::getline(inner, part, ',')) {
            add_foreign_label(change, part);
        }
        return;
    }
    if (!map_foreign_kind(label, change.kinds)) {
        change.opaque_tags.push_back(label);
    }
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

template <typename Json>
std::string string_field(const Json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || !it->is_string()) {
        return {};
    }
    return it->template get<std::string>();
}

template <typename Json>
int int_field(const Json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || !it->is_number_integer()) {
        return 0;
    }
    return it->template get<int>();
}

}  // namespace

OracleEntry parse_native_oracle(std::string_view json_text, std::string name) {
    const auto j = parse_json(json_text, name);
    OracleEntry entry;
    entry.name = std::move(name);
    try {
        if (j.at("schema_version").get<std::string>() != "1") {
            malformed(entry.name, "unsupported schema_version");
        }
        entry.repository = j.at("repository").get<std::string>();
        entry.start_commit = j.at("start_commit").get<std::string>();
        entry.file = j.at("file").get<std::string>();
        entry.method_name = j.at("method_name").get<std::string>();
        entry.start_line = j.at("start_line").get<int>();
        for (const auto& item : j.at("expected")) {
            ExpectedChange change;
            change.commit = item.at("commit").get<std::string>();
            for (const auto& kind : item.at("kinds")) {
                const auto parsed = change_kind_from_string(kind.get<std::string>());
                if (!parsed) {
                    malformed(entry.name, "unknown change kind " + kind.get<std::string>());
                }
                change.kinds.insert(*parsed);
            }
            if (change.kinds.empty()) {
                malformed(entry.name, "change " + change.commit + " has no kinds");
            }
            entry.expected.push_back(std::move(change));
        }
    } catch (const json::exception& e) {
        malformed(entry.name, e.what());
    }
    if (entry.expected.empty()) {
        malformed(entry.name, "expected history is empty");
    }
    if (entry.start_line < 1) {
        malformed(entry.name, "start_line must be >= 1");
    }
    check_unique(entry);
    return entry;
}

OracleEntry parse_codeshovel_oracle(std::string_view json_text, std::string name,
                                    std::vector<std::string>& diagnostics) {
    const auto j = parse_json(json_text, name);
    if (!j.is_object() || !j.contains("changeHistory") || !j["changeHistory"].is_array()) {
        malformed(name, "missing changeHistory array");
    }
    OracleEntry entry;
    entry.name = std::move(name);
    entry.repository = string_field(j, "repositoryName");
    entry.start_commit = string_field(j, "startCommitName");
    entry.file = string_field(j, "sourceFilePath");
    entry.method_name = string_field(j, "functionName");
    entry.start_line = int_field(j, "functionStartLine");
    const auto shorts = j.value("changeHistoryShort", json::object());
    for (const auto& commit : j["changeHistory"]) {
        if (!commit.is_string()) {
            malformed(entry.name, "non-string commit in changeHistory");
        }
        ExpectedChange change;
        change.commit = commit.get<std::string>();
        if (auto it = shorts.find(change.commit); it != shorts.end() && it->is_string()) {
            add_foreign_label(change, it->get<std::string>());
        }
        if (!change.opaque_tags.empty()) {
            diagnostics.push_back(entry.name + ": unmapped change types at " + change.commit);
        }
        entry.expected.push_back(std::move(change));
    }
    if (entry.expected.empty()) {
        malformed(entry.name, "changeHistory is empty");
    }
    check_unique(entry);
    return entry;
}

OracleEntry parse_codetracker_oracle(std::string_view json_text, std::string name,
                                     std::vector<std::string>& diagnostics) {
    const auto j = parse_json(json_text, name);
    if (!j.is_object() || !j.contains("expectedChanges") || !j["expectedChanges"].is_array()) {
        malformed(name, "missing expectedChanges array");
    }
    OracleEntry entry;
    entry.name = std::move(name);
    entry.repository = string_field(j, "repositoryName");
    entry.start_commit = string_field(j, "startCommitId");
    entry.file = string_field(j, "filePath");
    entry.method_name = string_field(j, "functionName");
    entry.start_line = int_field(j, "functionStartLine");

    struct Pending {
        ExpectedChange change;
        std::int64_t time = 0;
        std::size_t order = 0;
    };
    std::vector<Pending> pending;
    for (const auto& item : j["expectedChanges"]) {
        const auto commit = string_field(item, "commitId");
        if (commit.empty()) {
            malformed(entry.name, "expected change without commitId");
        }
        auto it = std::find_if(pending.begin(), pending.end(),
                               [&](const Pending& p) { return p.change.commit == commit; });
        if (it == pending.end()) {
            Pending p;
            p.change.commit = commit;
            p.order = pending.size();
            if (auto t = item.find("commitTime"); t != item.end() && t->is_number()) {
                p.time = t->get<std::int64_t>();
            }
            pending.push_back(std::move(p));
            it = pending.end() - 1;
        }
        add_foreign_label(it->change, string_field(item, "changeType"));
    }
    std::stable_sort(pending.begin(), pending.end(), [](const Pending& a, const Pending& b) {
        return a.time != b.time ? a.time > b.time : a.order < b.order;
    });
    for (auto& p : pending) {
        if (!p.change.opaque_tags.empty()) {
            diagnostics.push_back(entry.name + ": unmapped change types at " + p.change.commit);
        }
        entry.expected.push_back(std::move(p.change));
    }
    if (entry.expected.empty()) {
        malformed(entry.name, "expectedChanges is empty");
    }
    return entry;
}

std::string to_native_json(const OracleEntry& entry) {
    ordered_json j;
    j["schema_version"] = "1";
    j["repository"] = entry.repository;
    j["start_commit"] = entry.start_commit;
    j["file"] = entry.file;
    j["method_name"] = entry.method_name;
    j["start_line"] = entry.start_line;
    auto expected = ordered_json::array();
    for (const auto& change : entry.expected) {
        ordered_json item;
        item["commit"] = change.commit;
        auto kinds = ordered_json::array();
        for (const auto kind : change.kinds) {
            kinds.push_back(std::string(to_string(kind)));
        }
        item["kinds"] = std::move(kinds);
        expected.push_back(std::move(item));
    }
    j["expected"] = std::move(expected);
    return j.dump(2) + "\n";
}

OracleLoad load_oracle(const fs::path& dir, OracleFormat format) {
    OracleLoad load;
    std::error_code ec;
    if (!fs::is_directory(dir, ec)) {
        load.diagnostics.push_back(std::string(to_string(ErrorCode::MalformedOracleFile)) + ": " + dir.string() +
                                   " is not a directory");
        return load;
    }
    std::vector<fs::path> files;
    for (const auto& item : fs::directory_iterator(dir)) {
        if (item.is_regular_file() && item.path().extension() == ".json") {
            files.push_back(item.path());
        }
    }
    std::sort(files.begin(), files.end());
    for (const auto& path : files) {
        const auto name = path.stem().string();
        const auto text = read_text(path);
        try {
            switch (format) {
            case OracleFormat::Native:
                load.entries.push_back(parse_native_oracle(text, name));
                break;
            case OracleFormat::CodeShovel:
                load.entries.push_back(parse_codeshovel_oracle(text, name, load.diagnostics));
                break;
            case OracleFormat::CodeTracker:
                load.entries.push_back(parse_codetracker_oracle(text, name, load.diagnostics));
                break;
            }
        } catch (const Error& e) {
            load.diagnostics.push_back(std::string(to_string(e.code())) + ": " + e.what());
        }
    }
    return load;
}

// ---------------------------------------------------------------------------
// Scoring
// ---------------------------------------------------------------------------

namespace {

bool same_commit(const std::string& a, const std::string& b) {
    if (a == b) {
        return true;
    }
    const auto shorter = std::min(a.size(), b.size());
    return shorter >= 7 && a.compare(0, shorter, b, 0, shorter) == 0;
}

bool passes(const ObservedChange& change, const ChangeKinds& filter) {
    if (change.opaque || change.kinds.empty()) {
        return true;
    }
    return std::any_of(change.kinds.begin(), change.kinds.end(),
                       [&](ChangeKind k) { return filter.count(k) != 0; });
}

double ratio_percent(std::size_t numerator, std::size_t denominator) {
    if (denominator == 0) {
        return 100.0;
    }
    return 100.0 * static_cast<double>(numerator) / static_cast<double>(denominator);
}

double harmonic(double p, double r) {
    return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
}

}  // namespace

std::vector<ObservedChange> observed(const MethodHistory& history) {
    std::vector<ObservedChange> out;
    for (const auto& record : history.records) {
        out.push_back({record.commit.id.str(), record.kinds, false});
    }
    return out;
}

std::vector<ObservedChange> observed(const HistoryDocument& document) {
    std::vector<ObservedChange> out;
    for (const auto& record : document.records) {
        ObservedChange change{record.hash, {}, false};
        for (const auto& name : record.kinds) {
            if (auto kind = change_kind_from_string(name)) {
                change.kinds.insert(*kind);
            } else {
                change.opaque = true;
            }
        }
        out.push_back(std::move(change));
    }
    return out;
}

std::vector<ObservedChange> observed(const OracleEntry& entry) {
    std::vector<ObservedChange> out;
    for (const auto& change : entry.expected) {
        out.push_back({change.commit, change.kinds, change.kinds.empty() && !change.opaque_tags.empty()});
    }
    return out;
}

MetricCounts compare(std::span<const ObservedChange> actual, std::span<const ObservedChange> expected,
                     const ChangeKinds& kind_filter) {
    std::vector<const ObservedChange*> a;
    std::vector<const ObservedChange*> e;
    for (const auto& change : actual) {
        if (passes(change, kind_filter)) {
            a.push_back(&change);
        }
    }
    for (const auto& change : expected) {
        if (passes(change, kind_filter)) {
            e.push_back(&change);
        }
    }
    MetricCounts counts;
    std::vector<char> used(e.size(), 0);
    for (const auto* change : a) {
        bool hit = false;
        for (std::size_t k = 0; k < e.size(); ++k) {
            if (!used[k] && same_commit(change->commit, e[k]->commit)) {
                used[k] = 1;
                hit = true;
                break;
            }
        }
        hit ? ++counts.tp : ++counts.fp;
    }
    counts.fn = e.size() - counts.tp;
    return counts;
}

MetricCounts compare(const MethodHistory& actual, const OracleEntry& expected, const ChangeKinds& kind_filter) {
    const auto a = observed(actual);
    const auto e = observed(expected);
    return compare(a, e, kind_filter);
}

MetricCounts compare(const HistoryDocument& actual, const OracleEntry& expected, const ChangeKinds& kind_filter) {
    const auto a = observed(actual);
    const auto e = observed(expected);
    return compare(a, e, kind_filter);
}

double round_half_up_2(double value) {
    // The epsilon keeps values such as 96.805 (stored as 96.80499...) on the
    // half-up side.
    return std::floor(value * 100.0 + 0.5 + 1e-9) / 100.0;
}

Scores commit_level_scores(std::span<const MetricCounts> counts) {
    if (counts.empty()) {
        throw Error(ErrorCode::EmptyInput, "no counts to score");
    }
    MetricCounts total;
    for (const auto& c : counts) {
        total.tp += c.tp;
        total.fp += c.fp;
        total.fn += c.fn;
    }
    const double p = ratio_percent(total.tp, total.tp + total.fp);
    const double r = ratio_percent(total.tp, total.tp + total.fn);
    return {round_half_up_2(p), round_half_up_2(r), round_half_up_2(harmonic(p, r))};
}

Scores method_level_scores(std::span<const MetricCounts> per_method) {
    if (per_method.empty()) {
        throw Error(ErrorCode::EmptyInput, "no methods to score");
    }
    double p_sum = 0;
    double r_sum = 0;
    double f_sum = 0;
    for (const auto& c : per_method) {
        const double p = ratio_percent(c.tp, c.tp + c.fp);
        const double r = ratio_percent(c.tp, c.tp + c.fn);
        p_sum += p;
        r_sum += r;
        f_sum += harmonic(p, r);
    }
    const auto n = static_cast<double>(per_method.size());
    return {round_half_up_2(p_sum / n), round_half_up_2(r_sum / n), round_half_up_2(f_sum / n)};
}

RuntimeStats runtime_stats(std::span<const double> durations_seconds) {
    if (durations_seconds.empty()) {
        throw Error(ErrorCode::EmptyInput, "no durations");
    }
    std::vector<double> sorted(durations_seconds.begin(), durations_seconds.end());
    std::sort(sorted.begin(), sorted.end());
    double sum = 0;
    for (const auto d : sorted) {
        sum += d;
    }
    const auto n = sorted.size();
    const double median = n % 2 == 1 ? sorted[n / 2] : (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0;
    return {round_half_up_2(sum / static_cast<double>(n)), round_half_up_2(median), round_half_up_2(sorted.front()),
            round_half_up_2(sorted.back())};
}

EvaluationRow evaluate_row(std::string oracle, std::string tool,
                           std::vector<std::pair<std::string, MetricCounts>> per_method) {
    EvaluationRow row;
    row.oracle = std::move(oracle);
    row.tool = std::move(tool);
    std::vector<MetricCounts> counts;
    for (const auto& [name, c] : per_method) {
        counts.push_back(c);
        row.totals.tp += c.tp;
        row.totals.fp += c.fp;
        row.totals.fn += c.fn;
    }
    row.commit_level = commit_level_scores(counts);
    row.method_level = method_level_scores(counts);
    row.per_method = std::move(per_method);
    return row;
}

std::string format_table(std::span<const EvaluationRow> rows) {
    const std::vector<std::string> header{"Oracle", "Tool", "TP", "FP", "FN", "P(commit)", "R(commit)",
                                          "F1(commit)", "P(method)", "R(method)", "F1(method)"};
    auto fixed2 = [](double v) {
        std::ostringstream out;
        out << std::fixed << std::setprecision(2) << v;
        return out.str();
    };
    std::vector<std::vector<std::string>> cells{header};
    for (const auto& row : rows) {
        cells.push_back({row.oracle, row.tool, std::to_string(row.totals.tp), std::to_string(row.totals.fp),
                         std::to_string(row.totals.fn), fixed2(row.commit_level.precision),
                         fixed2(row.commit_level.recall), fixed2(row.commit_level.f1),
                         fixed2(row.method_level.precision), fixed2(row.method_level.recall),
                         fixed2(row.method_level.f1)});
    }
    std::vector<std::size_t> width(header.size(), 0);
    for (const auto& line : cells) {
        for (std::size_t c = 0; c < line.size(); ++c) {
            width[c] = std::max(width[c], line[c].size());
        }
    }
    std::ostringstream out;
    for (const auto& line : cells) {
        for (std::size_t c = 0; c < line.size(); ++c) {
            if (c > 0) {
                out << "  ";
            }
            // text columns left-aligned, numbers right-aligned
            if (c < 2) {
                out << std::left << std::setw(static_cast<int>(width[c])) << line[c];
            } else {
                out << std::right << std::setw(static_cast<int>(width[c])) << line[c];
            }
        }
        out << '\n';
    }
    return out.str();
}

std::string format_report_json(std::span<const EvaluationRow> rows) {
    auto scores = [](const Scores& s) {
        ordered_json j;
        j["precision"] = s.precision;
        j["recall"] = s.recall;
        j["f1"] = s.f1;
        return j;
    };
    auto out = ordered_json::array();
    for (const auto& row : rows) {
        ordered_json j;
        j["oracle"] = row.oracle;
        j["tool"] = row.tool;
        j["tp"] = row.totals.tp;
        j["fp"] = row.totals.fp;
        j["fn"] = row.totals.fn;
        j["commit_level"] = scores(row.commit_level);
        j["method_level"] = scores(row.method_level);
        auto methods = ordered_json::array();
        for (const auto& [name, c] : row.per_method) {
            ordered_json m;
            m["name"] = name;
            m["tp"] = c.tp;
            m["fp"] = c.fp;
            m["fn"] = c.fn;
            methods.push_back(std::move(m));
        }
        j["methods"] = std::move(methods);
        out.push_back(std::move(j));
    }
    return out.dump(2) + "\n";
}

}  // namespace mtrail
