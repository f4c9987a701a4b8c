#pragma once

#include "mtrail/java_source.hpp"
#include "mtrail/matcher.hpp"
#include "mtrail/repo.hpp"

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace mtrail {

/// Where to look for the method: (commit, file, name, declaration line).
struct TraversalNode {
    CommitId commit;
    std::string file;
    std::string name;
    int line = 1;
};

struct TracerConfig {
    MatchThresholds thresholds;
    bool include_formatting = true;
    bool include_javadoc = true;
    bool include_annotations = true;
    std::optional<std::size_t> max_commits;  ///< unbounded when empty
};

enum class ChangeKind {
    Introduced,
    BodyChange,
    SignatureChange,
    Rename,
    ParameterChange,
    AnnotationChange,
    JavadocChange,
    FormattingChange,
    FileRename,
    MethodMove,
    MergeResolutionChange,
};

std::string_view to_string(ChangeKind kind) noexcept;
std::optional<ChangeKind> change_kind_from_string(std::string_view name) noexcept;
const std::vector<ChangeKind>& all_change_kinds();

using ChangeKinds = std::set<ChangeKind>;

struct ChangeRecord {
    CommitMeta commit;
    ChangeKinds kinds;
    std::string file_before;
    std::string file_after;
    std::string name_before;
    std::string name_after;
    int start_line_after = 0;
    std::optional<MethodRecord> method_before;
    MethodRecord method_after;
    std::string contributor;  ///< "Name <email>"
};

struct MethodHistory {
    TraversalNode locator;                   ///< commit resolved to a full id
    std::optional<MethodRecord> start_method;
    std::vector<ChangeRecord> records;       ///< newest first
    bool complete = false;
};

/// How the method's file relates between parent and child.
enum class FileRelation { Same, Moved, Renamed };

/// Change kinds between two versions of a method, after the config's
/// include_* filters. Empty means "no change worth recording".
ChangeKinds classify_change(const MethodRecord& before, const MethodRecord& after, FileRelation relation,
                            const TracerConfig& config);

/// Outcome of evaluating one parent line of a commit.
struct ParentMatch {
    CommitId parent;
    MatchResult match;
    FileRelation relation = FileRelation::Same;
};

/// Decision at a merge commit.
struct MergeDecision {
    bool record = false;
    ChangeKinds kinds;
    std::optional<std::size_t> compared_with;  ///< index into the parent matches
};

/// No record when the method equals its version in some parent; otherwise
/// classify against the most similar parent version plus MergeResolutionChange.
MergeDecision resolve_merge(const MethodRecord& at_merge, const std::vector<ParentMatch>& parents,
                            const TracerConfig& config);

/// A dequeued commit where no parent held the method.
struct DeadEnd {
    CommitMeta commit;
    std::string file;
    MethodRecord method;
};

/// Earliest dead end by commit time, ties broken by the smaller commit id.
std::optional<DeadEnd> determine_introduction(const std::vector<DeadEnd>& dead_ends);

class Tracer {
public:
    Tracer(RepoHandle& repo, TracerConfig config, std::shared_ptr<ParseCache> cache = nullptr);

    MethodHistory trace(const TraversalNode& locator);

    [[nodiscard]] const MatchCounters& counters() const noexcept { return matcher_.counters(); }
    /// Commits belonging to any file DAG built during the last trace.
    [[nodiscard]] const std::set<CommitId>& dag_commits() const noexcept { return dag_commits_; }
    [[nodiscard]] bool truncated() const noexcept { return truncated_; }

private:
    struct QueueItem {
        TraversalNode node;
        MethodRecord method;
    };

    void trace_file(const TraversalNode& start, const MethodRecord& start_method);
    std::vector<ParentMatch> match_parents(const CommitMeta& commit, const QueueItem& item);
    void add_record(const CommitMeta& commit, const QueueItem& item, const ParentMatch& parent, ChangeKinds kinds);

    RepoHandle& repo_;
    TracerConfig config_;
    MethodSource source_;
    Matcher matcher_;

    std::set<std::pair<CommitId, std::string>> visited_;
    std::map<CommitId, ChangeRecord> records_;
    std::vector<DeadEnd> dead_ends_;
    std::set<CommitId> dag_commits_;
    std::size_t dequeued_ = 0;
    bool truncated_ = false;
};

/// "Name <email>".
std::string contributor_of(const CommitMeta& commit);

}  // namespace mtrail
