#pragma once

#include "mtrail/tracer.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mtrail {

/// One entry of the serialized history, commit metadata inlined.
struct HistoryRecord {
    std::string hash;
    std::vector<std::string> parents;
    std::string author_name;
    std::string author_email;
    std::string commit_time;  ///< ISO-8601 UTC, e.g. 2021-03-04T05:06:07Z
    std::string message;      ///< first line only
    std::vector<std::string> kinds;
    std::string file_before;
    std::string file_after;
    std::string name_before;
    std::string name_after;
    int start_line_after = 0;
    std::optional<MethodRecord> method_before;
    MethodRecord method_after;
    std::string contributor;

    friend bool operator==(const HistoryRecord&, const HistoryRecord&) = default;
};

struct ConfigEcho {
    double threshold_same = 0.70;
    double threshold_cross = 0.75;
    bool include_formatting = true;
    bool include_javadoc = true;
    bool include_annotations = true;
    std::optional<std::uint64_t> max_commits;

    friend bool operator==(const ConfigEcho&, const ConfigEcho&) = default;
};

/// Self-describing trace output (schema/history-v1.json).
struct HistoryDocument {
    std::string schema_version = "1";
    std::string repository;
    std::string origin_commit;
    std::string file;
    std::string method;  ///< signature of the traced method
    int start_line = 0;
    ConfigEcho config;
    std::vector<HistoryRecord> records;
    bool complete = false;

    friend bool operator==(const HistoryDocument&, const HistoryDocument&) = default;
};

/// "YYYY-MM-DDTHH:MM:SSZ".
std::string format_utc(std::int64_t epoch_seconds);
std::int64_t parse_utc(std::string_view iso);

ConfigEcho echo_config(const TracerConfig& config);

HistoryDocument make_document(const MethodHistory& history, const std::string& repository,
                              const TracerConfig& config);

/// Canonical text: fixed key order, two-space indent, LF, UTF-8, trailing LF.
std::string serialize(const HistoryDocument& document);
std::string serialize(const MethodHistory& history, const std::string& repository, const TracerConfig& config);

/// Throws Error(InvalidArgument) on malformed input.
HistoryDocument deserialize(std::string_view json_text);

/// {"error": code, "message": message} in canonical form.
std::string error_document(std::string_view code, std::string_view message);

}  // namespace mtrail
