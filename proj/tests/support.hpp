#pragma once

#include "mtrail/error.hpp"
#include "mtrail/fixture_forge.hpp"
#include "mtrail/process.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace testing {

namespace fs = std::filesystem;

class TempDir {
public:
    explicit TempDir(const std::string& prefix = "mtrail-test") {
        std::string pattern = (fs::temp_directory_path() / (prefix + "-XXXXXX")).string();
        if (mkdtemp(pattern.data()) == nullptr) {
            throw std::runtime_error("mkdtemp failed");
        }
        path_ = pattern;
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    [[nodiscard]] const fs::path& path() const { return path_; }
    [[nodiscard]] fs::path operator/(const std::string& child) const { return path_ / child; }

private:
    fs::path path_;
};

inline std::string trim(std::string s) {
    while (!s.empty() && (s.back() == '\n' || s.back() == '\r' || s.back() == ' ')) {
        s.pop_back();
    }
    return s;
}

/// git in `repo` with a fixed identity and date; throws on failure.
inline std::string git(const fs::path& repo, const std::vector<std::string>& args, long long when = 1500000000) {
    const auto stamp = "@" + std::to_string(when) + " +0000";
    auto result = mtrail::run_git(repo, args, {},
                                  {{"GIT_AUTHOR_NAME", "Test"},
                                   {"GIT_AUTHOR_EMAIL", "test@example.com"},
                                   {"GIT_COMMITTER_NAME", "Test"},
                                   {"GIT_COMMITTER_EMAIL", "test@example.com"},
                                   {"GIT_AUTHOR_DATE", stamp},
                                   {"GIT_COMMITTER_DATE", stamp}});
    if (!result.ok()) {
        std::string joined;
        for (const auto& a : args) {
            joined += " " + a;
        }
        throw std::runtime_error("git" + joined + ": " + result.err);
    }
    return result.out;
}

inline void write_file(const fs::path& path, const std::string& text) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << text;
}

inline std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

inline void init_repo(const fs::path& repo) {
    fs::create_directories(repo);
    git(repo, {"init", "-q", "-b", "main"});
}

/// Stages everything and commits; returns the new commit id.
inline std::string commit_all(const fs::path& repo, const std::string& message, long long when) {
    git(repo, {"add", "-A"}, when);
    git(repo, {"commit", "-q", "--allow-empty", "-m", message}, when);
    return trim(git(repo, {"rev-parse", "HEAD"}, when));
}

inline const mtrail::Scenario& scenario(const std::string& name) {
    for (const auto& s : mtrail::standard_catalog()) {
        if (s.name == name) {
            return s;
        }
    }
    throw std::runtime_error("no scenario " + name);
}

}  // namespace testing
