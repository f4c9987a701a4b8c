#include "mtrail/repo.hpp"

#include "mtrail/error.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cstdio>
#include <future>
#include <set>
#include <sstream>
#include <unordered_set>

namespace fs = std::filesystem;

namespace mtrail {

bool CommitId::is_full_hex(std::string_view s) noexcept {
    return s.size() == 40 && std::all_of(s.begin(), s.end(), [](char c) {
               return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f');
           });
}

std::string CommitMeta::message_first_line() const {
    const auto nl = message.find('\n');
    return nl == std::string::npos ? message : message.substr(0, nl);
}

std::string_view to_string(DiffKind kind) noexcept {
    switch (kind) {
    case DiffKind::Added: return "Added";
    case DiffKind::Modified: return "Modified";
    case DiffKind::Deleted: return "Deleted";
    case DiffKind::Renamed: return "Renamed";
    }
    return "Modified";
}

bool FileDag::contains(const CommitId& id) const {
    return std::find(nodes.begin(), nodes.end(), id) != nodes.end();
}

std::string decode_utf8_lossy(std::string_view bytes) {
    static constexpr std::string_view kReplacement = "\xEF\xBF\xBD";
    std::string out;
    out.reserve(bytes.size());
    std::size_t i = 0;
    const auto n = bytes.size();
    auto cont = [&](std::size_t k) {
        return k < n && (static_cast<unsigned char>(bytes[k]) & 0xC0) == 0x80;
    };
    while (i < n) {
        const auto c = static_cast<unsigned char>(bytes[i]);
        std::size_t len = 0;
        if (c < 0x80) {
            len = 1;
        } else if (c >= 0xC2 && c <= 0xDF) {
            len = cont(i + 1) ? 2 : 0;
        } else if (c >= 0xE0 && c <= 0xEF) {
            if (cont(i + 1) && cont(i + 2)) {
                const auto c1 = static_cast<unsigned char>(bytes[i + 1]);
                const bool overlong = c == 0xE0 && c1 < 0xA0;
                const bool surrogate = c == 0xED && c1 >= 0xA0;
                len = (overlong || surrogate) ? 0 : 3;
            }
        } else if (c >= 0xF0 && c <= 0xF4) {
            if (cont(i + 1) && cont(i + 2) && cont(i + 3)) {
                const auto c1 = static_cast<unsigned char>(bytes[i + 1]);
                const bool overlong = c == 0xF0 && c1 < 0x90;
                const bool too_big = c == 0xF4 && c1 >= 0x90;
                len = (overlong || too_big) ? 0 : 4;
            }
        }
        if (len == 0) {
            out += kReplacement;
            ++i;
        } else {
            out.append(bytes.substr(i, len));
            i += len;
        }
    }
    return out;
}

bool is_remote_source(std::string_view source) {
    if (source.find("://") != std::string_view::npos) {
        return true;
    }
    // scp-like syntax: user@host:path, no slash before the colon
    const auto colon = source.find(':');
    const auto at = source.find('@');
    const auto slash = source.find('/');
    return at != std::string_view::npos && colon != std::string_view::npos && at < colon &&
           (slash == std::string_view::npos || colon < slash);
}

std::string sha256_hex(std::string_view data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr);
    std::string hex;
    hex.reserve(len * 2);
    char buf[3];
    for (unsigned int i = 0; i < len; ++i) {
        std::snprintf(buf, sizeof buf, "%02x", digest[i]);
        hex += buf;
    }
    return hex;
}

namespace {

std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> parts;
    std::size_t pos = 0;
    while (true) {
        const auto next = s.find(sep, pos);
        if (next == std::string_view::npos) {
            parts.emplace_back(s.substr(pos));
            break;
        }
        parts.emplace_back(s.substr(pos, next - pos));
        pos = next + 1;
    }
    return parts;
}

bool is_local_repository(const fs::path& path) {
    std::error_code ec;
    if (!fs::is_directory(path, ec)) {
        return false;
    }
    const auto result = run_git(path, {"rev-parse", "--absolute-git-dir"});
    if (!result.ok()) {
        return false;
    }
    auto git_dir = result.out;
    while (!git_dir.empty() && (git_dir.back() == '\n' || git_dir.back() == '\r')) {
        git_dir.pop_back();
    }
    const auto canonical = fs::weakly_canonical(path, ec);
    const auto git_canonical = fs::weakly_canonical(git_dir, ec);
    // Reject directories that merely sit inside some enclosing repository.
    return git_canonical == canonical || git_canonical == canonical / ".git";
}

struct CloneFlight {
    std::mutex mutex;
    std::map<std::string, std::shared_future<void>> in_flight;
};

CloneFlight& clone_flight() {
    static CloneFlight flight;
    return flight;
}

void clone_into(const std::string& url, const fs::path& target) {
    if (is_local_repository(target)) {
        return;
    }
    std::error_code ec;
    fs::create_directories(target.parent_path(), ec);
    auto staging = target;
    staging += ".partial";
    fs::remove_all(staging, ec);
    const auto result =
        run_git(target.parent_path(), {"clone", "--quiet", "--no-checkout", url, staging.string()});
    if (!result.ok()) {
        fs::remove_all(staging, ec);
        throw Error(ErrorCode::CloneFailed, "clone of " + url + " failed: " + result.err);
    }
    fs::rename(staging, target, ec);
    if (ec) {
        throw Error(ErrorCode::CloneFailed, "cannot move clone into cache: " + ec.message());
    }
}

}  // namespace

RepoHandle open_repository(const std::string& source, const fs::path& cache_dir) {
    if (!is_remote_source(source)) {
        const fs::path path(source);
        if (!is_local_repository(path)) {
            throw Error(ErrorCode::NotARepository, "not a git repository: " + source);
        }
        return RepoHandle(source, fs::weakly_canonical(path));
    }

    const auto target = cache_dir / sha256_hex(source);
    std::shared_future<void> flight;
    bool leader = false;
    std::promise<void> promise;
    {
        auto& state = clone_flight();
        std::lock_guard lock(state.mutex);
        auto it = state.in_flight.find(target.string());
        if (it == state.in_flight.end()) {
            flight = promise.get_future().share();
            state.in_flight.emplace(target.string(), flight);
            leader = true;
        } else {
            flight = it->second;
        }
    }
    if (leader) {
        try {
            clone_into(source, target);
            promise.set_value();
        } catch (...) {
            promise.set_exception(std::current_exception());
        }
        auto& state = clone_flight();
        std::lock_guard lock(state.mutex);
        state.in_flight.erase(target.string());
    }
    flight.get();
    return RepoHandle(source, fs::weakly_canonical(target));
}

RepoHandle::RepoHandle(std::string source, fs::path path)
    : source_(std::move(source)), path_(std::move(path)) {}

RepoHandle::~RepoHandle() = default;
RepoHandle::RepoHandle(RepoHandle&&) noexcept = default;
RepoHandle& RepoHandle::operator=(RepoHandle&&) noexcept = default;

BlobReader& RepoHandle::blobs() {
    if (!blob_reader_) {
        blob_reader_ = std::make_unique<BlobReader>(path_);
    }
    return *blob_reader_;
}

CommitMeta RepoHandle::resolve_commit(const std::string& ref) {
    if (ref.empty() || ref.front() == '-' || ref.find('\n') != std::string::npos) {
        throw Error(ErrorCode::UnknownCommit, "invalid commit reference: '" + ref + "'");
    }
    const auto result = run_git(path_, {"rev-parse", "--verify", "--end-of-options", ref + "^{commit}"});
    if (!result.ok()) {
        if (result.err.find("ambiguous") != std::string::npos) {
            throw Error(ErrorCode::AmbiguousAbbreviation, "ambiguous commit abbreviation: " + ref);
        }
        throw Error(ErrorCode::UnknownCommit, "unknown commit: " + ref);
    }
    auto id = result.out.substr(0, result.out.find('\n'));
    if (!CommitId::is_full_hex(id)) {
        throw Error(ErrorCode::UnknownCommit, "unknown commit: " + ref);
    }
    return commit(CommitId(id));
}

void RepoHandle::load_graph(const CommitId& start) {
    const auto result = run_git(path_, {"log", "-z", "--topo-order",
                                        "--format=%H%x1f%P%x1f%an%x1f%ae%x1f%ct%x1f%B",
                                        start.str(), "--"});
    if (!result.ok()) {
        throw Error(ErrorCode::UnknownCommit, "cannot read history of " + start.str() + ": " + result.err);
    }
    std::size_t next_index = topo_.size();
    for (const auto& record : split(result.out, '\0')) {
        if (record.empty()) {
            continue;
        }
        auto fields = split(record, '\x1f');
        if (fields.size() < 6) {
            continue;
        }
        CommitMeta meta;
        meta.id = CommitId(fields[0]);
        if (commits_.count(meta.id) != 0) {
            continue;
        }
        for (const auto& parent : split(fields[1], ' ')) {
            if (!parent.empty()) {
                meta.parents.emplace_back(parent);
            }
        }
        meta.author_name = decode_utf8_lossy(fields[2]);
        meta.author_email = decode_utf8_lossy(fields[3]);
        meta.commit_time = std::stoll(fields[4]);
        std::string message = fields[5];
        for (std::size_t k = 6; k < fields.size(); ++k) {
            message += '\x1f';
            message += fields[k];
        }
        while (!message.empty() && message.back() == '\n') {
            message.pop_back();
        }
        meta.message = decode_utf8_lossy(message);
        topo_.emplace(meta.id, next_index++);
        commits_.emplace(meta.id, std::move(meta));
    }
}

const CommitMeta& RepoHandle::commit(const CommitId& id) {
    auto it = commits_.find(id);
    if (it == commits_.end()) {
        load_graph(id);
        it = commits_.find(id);
        if (it == commits_.end()) {
            throw Error(ErrorCode::UnknownCommit, "unknown commit: " + id.str());
        }
    }
    return it->second;
}

std::size_t RepoHandle::topo_index(const CommitId& id) {
    commit(id);
    return topo_.at(id);
}

std::optional<BlobText> RepoHandle::read_blob(const CommitId& commit_id, const std::string& path) {
    auto object = blobs().read(commit_id.str() + ":" + path);
    if (!object || object->type != "blob") {
        return std::nullopt;
    }
    return BlobText{object->oid, decode_utf8_lossy(object->content)};
}

std::string RepoHandle::read_file(const CommitId& commit_id, const std::string& path) {
    auto blob = read_blob(commit_id, path);
    if (!blob) {
        throw Error(ErrorCode::FileAbsentAtCommit, path + " does not exist at " + commit_id.str());
    }
    return std::move(blob->text);
}

std::vector<DiffEntry> RepoHandle::list_changed_files(const CommitId& commit_id, const CommitId& parent) {
    commit(commit_id);
    commit(parent);
    const auto result = run_git(path_, {"diff-tree", "-r", "-z", "--no-commit-id", "-M50%",
                                        "--name-status", parent.str(), commit_id.str()});
    if (!result.ok()) {
        throw Error(ErrorCode::UnknownCommit, "diff failed: " + result.err);
    }
    auto fields = split(result.out, '\0');
    std::vector<DiffEntry> entries;
    for (std::size_t i = 0; i + 1 < fields.size();) {
        const auto& status = fields[i];
        if (status.empty()) {
            ++i;
            continue;
        }
        DiffEntry entry;
        switch (status.front()) {
        case 'R':
        case 'C':
            if (i + 2 >= fields.size()) {
                i = fields.size();
                continue;
            }
            entry.old_path = fields[i + 1];
            entry.new_path = fields[i + 2];
            if (status.front() == 'R') {
                entry.kind = DiffKind::Renamed;
            } else {
                entry.kind = DiffKind::Added;
                entry.old_path.reset();
            }
            i += 3;
            break;
        case 'A':
            entry.kind = DiffKind::Added;
            entry.new_path = fields[i + 1];
            i += 2;
            break;
        case 'D':
            entry.kind = DiffKind::Deleted;
            entry.old_path = fields[i + 1];
            i += 2;
            break;
        default:  // M, T
            entry.kind = DiffKind::Modified;
            entry.old_path = fields[i + 1];
            entry.new_path = fields[i + 1];
            i += 2;
            break;
        }
        entries.push_back(std::move(entry));
    }
    std::sort(entries.begin(), entries.end(), [](const DiffEntry& a, const DiffEntry& b) {
        const auto key = [](const DiffEntry& e) {
            return std::pair(e.new_path.value_or(""), e.old_path.value_or(""));
        };
        return key(a) < key(b);
    });
    return entries;
}

std::vector<CommitId> RepoHandle::reachable(const CommitId& start) {
    commit(start);
    std::vector<CommitId> order;
    std::unordered_set<CommitId, CommitIdHash> seen{start};
    std::vector<CommitId> stack{start};
    while (!stack.empty()) {
        auto id = stack.back();
        stack.pop_back();
        order.push_back(id);
        for (const auto& parent : commit(id).parents) {
            if (seen.insert(parent).second) {
                stack.push_back(parent);
            }
        }
    }
    std::sort(order.begin(), order.end(),
              [this](const CommitId& a, const CommitId& b) { return topo_.at(a) < topo_.at(b); });
    return order;
}

FileDag RepoHandle::build_file_dag(const CommitId& start, const std::string& path) {
    const auto order = reachable(start);

    // One batch-check pass gives the blob id of `path` at every reachable commit.
    std::string input;
    for (const auto& id : order) {
        input += id.str() + ":" + path + "\n";
    }
    const auto result = run_git(path_, {"cat-file", "--batch-check=%(objectname) %(objecttype)"}, input);
    if (!result.ok()) {
        throw Error(ErrorCode::ProcessFailed, "cat-file failed: " + result.err);
    }
    std::unordered_map<CommitId, std::string, CommitIdHash> blob;
    {
        std::istringstream lines(result.out);
        std::string line;
        for (const auto& id : order) {
            if (!std::getline(lines, line)) {
                break;
            }
            const auto space = line.find(' ');
            if (space != std::string::npos && line.substr(space + 1) == "blob") {
                blob.emplace(id, line.substr(0, space));
            }
        }
    }
    if (blob.count(start) == 0) {
        throw Error(ErrorCode::FileAbsentAtCommit, path + " does not exist at " + start.str());
    }

    FileDag dag;
    dag.start = start;
    dag.path = path;
    std::unordered_set<CommitId, CommitIdHash> is_node;
    for (const auto& id : order) {
        auto present = blob.find(id);
        if (present == blob.end()) {
            continue;
        }
        const auto& parents = commit(id).parents;
        bool touched = parents.empty() || id == start;
        for (const auto& parent : parents) {
            auto pb = blob.find(parent);
            if (pb == blob.end() || pb->second != present->second) {
                touched = true;
            }
        }
        if (touched) {
            is_node.insert(id);
            dag.nodes.push_back(id);
        }
    }

    // Nearest nodes below each commit, computed ancestors-first.
    std::unordered_map<CommitId, std::vector<CommitId>, CommitIdHash> frontier;
    auto append_unique = [](std::vector<CommitId>& into, const std::vector<CommitId>& from) {
        for (const auto& id : from) {
            if (std::find(into.begin(), into.end(), id) == into.end()) {
                into.push_back(id);
            }
        }
    };
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        if (is_node.count(*it) != 0) {
            frontier[*it] = {*it};
            continue;
        }
        std::vector<CommitId> nearest;
        for (const auto& parent : commit(*it).parents) {
            append_unique(nearest, frontier[parent]);
        }
        frontier[*it] = std::move(nearest);
    }

    for (const auto& node : dag.nodes) {
        std::vector<FileDag::ParentLine> lines;
        std::vector<CommitId> flat;
        for (const auto& parent : commit(node).parents) {
            FileDag::ParentLine line{parent, frontier[parent]};
            append_unique(flat, line.nearest);
            lines.push_back(std::move(line));
        }
        dag.ancestors.emplace(node, std::move(flat));
        dag.lines.emplace(node, std::move(lines));
    }
    return dag;
}

std::string RepoHandle::unified_diff(const CommitId& commit_id, const std::optional<CommitId>& parent,
                                     const std::string& file) {
    commit(commit_id);
    ProcessResult result;
    if (parent) {
        commit(*parent);
        result = run_git(path_, {"diff", "--no-color", "--no-ext-diff", "-M50%", parent->str(),
                                 commit_id.str(), "--", file});
    } else {
        result = run_git(path_, {"diff-tree", "-p", "--no-color", "--root", "--no-commit-id",
                                 commit_id.str(), "--", file});
    }
    if (!result.ok()) {
        throw Error(ErrorCode::UnknownCommit, "diff failed: " + result.err);
    }
    return result.out;
}

}  // namespace mtrail
