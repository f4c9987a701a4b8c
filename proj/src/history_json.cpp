#include "mtrail/history_json.hpp"

#include "mtrail/error.hpp"

#include <json.hpp>

#include <ctime>
#include <cstdio>

namespace mtrail {

using ordered_json = nlohmann::ordered_json;

std::string format_utc(std::int64_t epoch_seconds) {
    const auto t = static_cast<std::time_t>(epoch_seconds);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::int64_t parse_utc(std::string_view iso) {
    std::tm tm{};
    int year = 0;
    int month = 0;
    const std::string text(iso);
    if (std::sscanf(text.c_str(), "%d-%d-%dT%d:%d:%dZ", &year, &month, &tm.tm_mday, &tm.tm_hour, &tm.tm_min,
                    &tm.tm_sec) != 6) {
        throw Error(ErrorCode::InvalidArgument, "not an ISO-8601 UTC timestamp: " + text);
    }
    tm.tm_year = year - 1900;
    tm.tm_mon = month - 1;
    return static_cast<std::int64_t>(timegm(&tm));
}

ConfigEcho echo_config(const TracerConfig& config) {
    ConfigEcho echo;
    echo.threshold_same = config.thresholds.same_file;
    echo.threshold_cross = config.thresholds.cross_file;
    echo.include_formatting = config.include_formatting;
    echo.include_javadoc = config.include_javadoc;
    echo.include_annotations = config.include_annotations;
    if (config.max_commits) {
        echo.max_commits = *config.max_commits;
    }
    return echo;
}

HistoryDocument make_document(const MethodHistory& history, const std::string& repository,
                              const TracerConfig& config) {
    HistoryDocument doc;
    doc.repository = repository;
    doc.origin_commit = history.locator.commit.str();
    doc.file = history.locator.file;
    doc.method = history.start_method ? history.start_method->signature : history.locator.name;
    doc.start_line = history.start_method ? history.start_method->start_line : history.locator.line;
    doc.config = echo_config(config);
    doc.complete = history.complete;
    for (const auto& record : history.records) {
        HistoryRecord out;
        out.hash = record.commit.id.str();
        for (const auto& parent : record.commit.parents) {
            out.parents.push_back(parent.str());
        }
        out.author_name = record.commit.author_name;
        out.author_email = record.commit.author_email;
        out.commit_time = format_utc(record.commit.commit_time);
        out.message = record.commit.message_first_line();
        for (const auto kind : record.kinds) {
            out.kinds.emplace_back(to_string(kind));
        }
        out.file_before = record.file_before;
        out.file_after = record.file_after;
        out.name_before = record.name_before;
        out.name_after = record.name_after;
        out.start_line_after = record.start_line_after;
        out.method_before = record.method_before;
        out.method_after = record.method_after;
        out.contributor = record.contributor;
        doc.records.push_back(std::move(out));
    }
    return doc;
}

namespace {

template <typename T>
ordered_json optional_json(const std::optional<T>& value) {
    return value ? ordered_json(*value) : ordered_json(nullptr);
}

ordered_json method_json(const MethodRecord& m) {
    ordered_json j;
    j["file"] = m.file;
    j["enclosing_type_path"] = m.enclosing_type_path;
    j["name"] = m.name;
    j["parameter_types"] = m.parameter_types;
    j["return_type"] = optional_json(m.return_type);
    j["signature"] = m.signature;
    j["body_text"] = optional_json(m.body_text);
    j["full_text"] = m.full_text;
    j["annotations_text"] = m.annotations_text;
    j["javadoc_text"] = m.javadoc_text;
    j["start_line"] = m.start_line;
    j["end_line"] = m.end_line;
    return j;
}

template <typename Json>
std::optional<std::string> optional_string(const Json& j, const char* key) {
    const auto& v = j.at(key);
    if (v.is_null()) {
        return std::nullopt;
    }
    return v.template get<std::string>();
}

template <typename Json>
MethodRecord method_from(const Json& j) {
    MethodRecord m;
    m.file = j.at("file").template get<std::string>();
    m.enclosing_type_path = j.at("enclosing_type_path").template get<std::string>();
    m.name = j.at("name").template get<std::string>();
    m.parameter_types = j.at("parameter_types").template get<std::vector<std::string>>();
    m.return_type = optional_string(j, "return_type");
    m.signature = j.at("signature").template get<std::string>();
    m.body_text = optional_string(j, "body_text");
    m.full_text = j.at("full_text").template get<std::string>();
    m.annotations_text = j.at("annotations_text").template get<std::string>();
    m.javadoc_text = j.at("javadoc_text").template get<std::string>();
    m.start_line = j.at("start_line").template get<int>();
    m.end_line = j.at("end_line").template get<int>();
    return m;
}

std::string dump(const ordered_json& j) {
    return j.dump(2, ' ', false, nlohmann::json::error_handler_t::replace) + "\n";
}

}  // namespace

std::string serialize(const HistoryDocument& doc) {
    ordered_json j;
    j["schema_version"] = doc.schema_version;
    j["repository"] = doc.repository;
    j["origin_commit"] = doc.origin_commit;
    j["file"] = doc.file;
    j["method"] = doc.method;
    j["start_line"] = doc.start_line;
    ordered_json config;
    config["threshold_same"] = doc.config.threshold_same;
    config["threshold_cross"] = doc.config.threshold_cross;
    config["include_formatting"] = doc.config.include_formatting;
    config["include_javadoc"] = doc.config.include_javadoc;
    config["include_annotations"] = doc.config.include_annotations;
    config["max_commits"] = optional_json(doc.config.max_commits);
    j["config"] = std::move(config);
    auto records = ordered_json::array();
    for (const auto& r : doc.records) {
        ordered_json rec;
        rec["hash"] = r.hash;
        rec["parents"] = r.parents;
        rec["author_name"] = r.author_name;
        rec["author_email"] = r.author_email;
        rec["commit_time"] = r.commit_time;
        rec["message"] = r.message;
        rec["kinds"] = r.kinds;
        rec["file_before"] = r.file_before;
        rec["file_after"] = r.file_after;
        rec["name_before"] = r.name_before;
        rec["name_after"] = r.name_after;
        rec["start_line_after"] = r.start_line_after;
        rec["method_before"] = r.method_before ? method_json(*r.method_before) : ordered_json(nullptr);
        rec["method_after"] = method_json(r.method_after);
        rec["contributor"] = r.contributor;
        records.push_back(std::move(rec));
    }
    j["records"] = std::move(records);
    j["complete"] = doc.complete;
    return dump(j);
}

std::string serialize(const MethodHistory& history, const std::string& repository, const TracerConfig& config) {
    return serialize(make_document(history, repository, config));
}

HistoryDocument deserialize(std::string_view json_text) {
    try {
        const auto j = nlohmann::json::parse(json_text);
        HistoryDocument doc;
        doc.schema_version = j.at("schema_version").get<std::string>();
        doc.repository = j.at("repository").get<std::string>();
        doc.origin_commit = j.at("origin_commit").get<std::string>();
        doc.file = j.at("file").get<std::string>();
        doc.method = j.at("method").get<std::string>();
        doc.start_line = j.at("start_line").get<int>();
        const auto& config = j.at("config");
        doc.config.threshold_same = config.at("threshold_same").get<double>();
        doc.config.threshold_cross = config.at("threshold_cross").get<double>();
        doc.config.include_formatting = config.at("include_formatting").get<bool>();
        doc.config.include_javadoc = config.at("include_javadoc").get<bool>();
        doc.config.include_annotations = config.at("include_annotations").get<bool>();
        if (!config.at("max_commits").is_null()) {
            doc.config.max_commits = config.at("max_commits").get<std::uint64_t>();
        }
        for (const auto& r : j.at("records")) {
            HistoryRecord rec;
            rec.hash = r.at("hash").get<std::string>();
            rec.parents = r.at("parents").get<std::vector<std::string>>();
            rec.author_name = r.at("author_name").get<std::string>();
            rec.author_email = r.at("author_email").get<std::string>();
            rec.commit_time = r.at("commit_time").get<std::string>();
            rec.message = r.at("message").get<std::string>();
            rec.kinds = r.at("kinds").get<std::vector<std::string>>();
            rec.file_before = r.at("file_before").get<std::string>();
            rec.file_after = r.at("file_after").get<std::string>();
            rec.name_before = r.at("name_before").get<std::string>();
            rec.name_after = r.at("name_after").get<std::string>();
            rec.start_line_after = r.at("start_line_after").get<int>();
            if (!r.at("method_before").is_null()) {
                rec.method_before = method_from(r.at("method_before"));
            }
            rec.method_after = method_from(r.at("method_after"));
            rec.contributor = r.at("contributor").get<std::string>();
            doc.records.push_back(std::move(rec));
        }
        doc.complete = j.at("complete").get<bool>();
        return doc;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::InvalidArgument, std::string("malformed history document: ") + e.what());
    }
}

std::string error_document(std::string_view code, std::string_view message) {
    ordered_json j;
    j["error"] = std::string(code);
    j["message"] = std::string(message);
    return dump(j);
}

}  // namespace mtrail
