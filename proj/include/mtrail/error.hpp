#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mtrail {

/// Machine-readable failure categories. The names double as the `error`
/// field of the CLI and service error payloads.
enum class ErrorCode {
    CloneFailed,
    NotARepository,
    UnknownCommit,
    AmbiguousAbbreviation,
    FileAbsentAtCommit,
    MethodNotFound,
    ParseFailure,
    StartMethodNotFound,
    StartFileAbsent,
    ParseFailureAtStart,
    BudgetExceeded,
    MalformedOracleFile,
    EmptyInput,
    WorkdirNotEmpty,
    StepInvalid,
    ProcessFailed,
    InvalidArgument,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

inline std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::CloneFailed: return "CloneFailed";
    case ErrorCode::NotARepository: return "NotARepository";
    case ErrorCode::UnknownCommit: return "UnknownCommit";
    case ErrorCode::AmbiguousAbbreviation: return "AmbiguousAbbreviation";
    case ErrorCode::FileAbsentAtCommit: return "FileAbsentAtCommit";
    case ErrorCode::MethodNotFound: return "MethodNotFound";
    case ErrorCode::ParseFailure: return "ParseFailure";
    case ErrorCode::StartMethodNotFound: return "StartMethodNotFound";
    case ErrorCode::StartFileAbsent: return "StartFileAbsent";
    case ErrorCode::ParseFailureAtStart: return "ParseFailureAtStart";
    case ErrorCode::BudgetExceeded: return "BudgetExceeded";
    case ErrorCode::MalformedOracleFile: return "MalformedOracleFile";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::WorkdirNotEmpty: return "WorkdirNotEmpty";
    case ErrorCode::StepInvalid: return "StepInvalid";
    case ErrorCode::ProcessFailed: return "ProcessFailed";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    }
    return "Unknown";
}

}  // namespace mtrail
