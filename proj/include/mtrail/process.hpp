#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace mtrail {

struct ProcessResult {
    int exit_code = -1;
    std::string out;
    std::string err;

    [[nodiscard]] bool ok() const noexcept { return exit_code == 0; }
};

struct ProcessOptions {
    std::filesystem::path cwd;
    std::map<std::string, std::string> env;  ///< added to the inherited environment
    std::string stdin_data;
};

/// Runs `program` (looked up on PATH unless it contains a slash) to completion
/// and captures both streams.
ProcessResult run_process(const std::string& program, const std::vector<std::string>& args,
                          const ProcessOptions& options = {});

/// Runs git with the given arguments in `repo_dir`. Locale and prompts are
/// pinned so output is parseable.
ProcessResult run_git(const std::filesystem::path& repo_dir, const std::vector<std::string>& args,
                      const std::string& stdin_data = {},
                      const std::map<std::string, std::string>& env = {});

/// A long-lived `git cat-file --batch` reader bound to one repository.
class BlobReader {
public:
    explicit BlobReader(std::filesystem::path repo_dir);
    ~BlobReader();
    BlobReader(const BlobReader&) = delete;
    BlobReader& operator=(const BlobReader&) = delete;

    struct Object {
        std::string oid;
        std::string type;
        std::string content;
    };

    /// `spec` is anything cat-file accepts, e.g. "<commit>:<path>". Returns
    /// nullopt when the object is missing.
    std::optional<Object> read(const std::string& spec);

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace mtrail
