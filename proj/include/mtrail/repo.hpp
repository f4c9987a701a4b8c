#pragma once

#include "mtrail/process.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace mtrail {

/// Full 40-hex lowercase object id of a commit.
class CommitId {
public:
    CommitId() = default;
    explicit CommitId(std::string value) : value_(std::move(value)) {}

    [[nodiscard]] const std::string& str() const noexcept { return value_; }
    [[nodiscard]] std::string short_id(std::size_t n = 7) const { return value_.substr(0, n); }
    [[nodiscard]] bool empty() const noexcept { return value_.empty(); }

    /// True for a syntactically valid full id (^[0-9a-f]{40}$).
    [[nodiscard]] static bool is_full_hex(std::string_view s) noexcept;

    friend auto operator<=>(const CommitId&, const CommitId&) = default;

private:
    std::string value_;
};

struct CommitIdHash {
    std::size_t operator()(const CommitId& id) const noexcept {
        return std::hash<std::string>{}(id.str());
    }
};

struct CommitMeta {
    CommitId id;
    std::vector<CommitId> parents;
    std::string author_name;
    std::string author_email;
    std::int64_t commit_time = 0;  ///< UTC seconds since epoch
    std::string message;

    [[nodiscard]] std::string message_first_line() const;
};

enum class DiffKind { Added, Modified, Deleted, Renamed };

std::string_view to_string(DiffKind kind) noexcept;

struct DiffEntry {
    DiffKind kind = DiffKind::Modified;
    std::optional<std::string> old_path;
    std::optional<std::string> new_path;

    friend bool operator==(const DiffEntry&, const DiffEntry&) = default;
};

/// Commits touching one path, with edges to the nearest touching commit on
/// every parent line.
struct FileDag {
    struct ParentLine {
        CommitId parent;                 ///< direct parent in the commit graph
        std::vector<CommitId> nearest;   ///< nearest nodes reachable through that parent
    };

    CommitId start;
    std::string path;
    std::vector<CommitId> nodes;  ///< in topological order, descendants first
    std::map<CommitId, std::vector<CommitId>> ancestors;
    std::map<CommitId, std::vector<ParentLine>> lines;

    [[nodiscard]] bool contains(const CommitId& id) const;
};

/// A blob read at (commit, path).
struct BlobText {
    std::string oid;
    std::string text;  ///< UTF-8, invalid sequences replaced by U+FFFD
};

/// Replaces invalid UTF-8 sequences with U+FFFD.
std::string decode_utf8_lossy(std::string_view bytes);

/// True for URLs and scp-style remotes ("git@host:path"); false for local paths.
bool is_remote_source(std::string_view source);

/// Lowercase hex SHA-256 of `data`.
std::string sha256_hex(std::string_view data);

/// Handle bound to one on-disk repository. Not thread-safe: confine each
/// handle to one worker and open more handles for concurrent readers.
class RepoHandle {
public:
    RepoHandle(std::string source, std::filesystem::path path);
    ~RepoHandle();
    RepoHandle(RepoHandle&&) noexcept;
    RepoHandle& operator=(RepoHandle&&) noexcept;

    [[nodiscard]] const std::string& source() const noexcept { return source_; }
    [[nodiscard]] const std::filesystem::path& path() const noexcept { return path_; }

    CommitMeta resolve_commit(const std::string& ref);

    /// Metadata for an already-resolved id.
    const CommitMeta& commit(const CommitId& id);

    std::string read_file(const CommitId& commit, const std::string& path);
    std::optional<BlobText> read_blob(const CommitId& commit, const std::string& path);

    std::vector<DiffEntry> list_changed_files(const CommitId& commit, const CommitId& parent);

    FileDag build_file_dag(const CommitId& start, const std::string& path);

    /// Position in a topological listing (descendants have smaller values).
    std::size_t topo_index(const CommitId& id);

    /// Unified diff of `file` between `parent` (or the empty tree) and `commit`.
    std::string unified_diff(const CommitId& commit, const std::optional<CommitId>& parent,
                             const std::string& file);

    /// All commits reachable from `start`, descendants first.
    std::vector<CommitId> reachable(const CommitId& start);

private:
    void load_graph(const CommitId& start);
    BlobReader& blobs();

    std::string source_;
    std::filesystem::path path_;
    std::unique_ptr<BlobReader> blob_reader_;
    std::unordered_map<CommitId, CommitMeta, CommitIdHash> commits_;
    std::unordered_map<CommitId, std::size_t, CommitIdHash> topo_;
};

/// Opens a local repository, or clones a remote one into
/// `<cache_dir>/<sha256(url)>/` (once per URL, also under concurrent calls).
RepoHandle open_repository(const std::string& source, const std::filesystem::path& cache_dir);

}  // namespace mtrail
