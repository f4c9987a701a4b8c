#include "mtrail/tracer.hpp"

#include "mtrail/error.hpp"

#include <algorithm>
#include <array>
#include <deque>

namespace mtrail {

namespace {

constexpr std::array kKindNames{
    std::pair{ChangeKind::Introduced, std::string_view("Introduced")},
    std::pair{ChangeKind::BodyChange, std::string_view("BodyChange")},
    std::pair{ChangeKind::SignatureChange, std::string_view("SignatureChange")},
    std::pair{ChangeKind::Rename, std::string_view("Rename")},
    std::pair{ChangeKind::ParameterChange, std::string_view("ParameterChange")},
    std::pair{ChangeKind::AnnotationChange, std::string_view("AnnotationChange")},
    std::pair{ChangeKind::JavadocChange, std::string_view("JavadocChange")},
    std::pair{ChangeKind::FormattingChange, std::string_view("FormattingChange")},
    std::pair{ChangeKind::FileRename, std::string_view("FileRename")},
    std::pair{ChangeKind::MethodMove, std::string_view("MethodMove")},
    std::pair{ChangeKind::MergeResolutionChange, std::string_view("MergeResolutionChange")},
};

}  // namespace

std::string_view to_string(ChangeKind kind) noexcept {
    for (const auto& [k, name] : kKindNames) {
        if (k == kind) {
            return name;
        }
    }
    return "Unknown";
}

std::optional<ChangeKind> change_kind_from_string(std::string_view name) noexcept {
    for (const auto& [k, n] : kKindNames) {
        if (n == name) {
            return k;
        }
    }
    return std::nullopt;
}

const std::vector<ChangeKind>& all_change_kinds() {
    static const std::vector<ChangeKind> kinds = [] {
        std::vector<ChangeKind> out;
        for (const auto& entry : kKindNames) {
            out.push_back(entry.first);
        }
        return out;
    }();
    return kinds;
}

std::string contributor_of(const CommitMeta& commit) {
    return commit.author_name + " <" + commit.author_email + ">";
}

ChangeKinds classify_change(const MethodRecord& before, const MethodRecord& after, FileRelation relation,
                            const TracerConfig& config) {
    ChangeKinds kinds;
    if (before.name != after.name) {
        kinds.insert(ChangeKind::Rename);
    }
    if (before.parameter_types != after.parameter_types) {
        kinds.insert(ChangeKind::ParameterChange);
    }
    if (kinds.count(ChangeKind::Rename) || kinds.count(ChangeKind::ParameterChange) ||
        before.return_type != after.return_type) {
        kinds.insert(ChangeKind::SignatureChange);
    }
    const auto body_before = normalize_body(before);
    const auto body_after = normalize_body(after);
    if (body_before != body_after) {
        kinds.insert(ChangeKind::BodyChange);
    } else if (before.body_text != after.body_text) {
        kinds.insert(ChangeKind::FormattingChange);
    }
    if (before.annotations_text != after.annotations_text) {
        kinds.insert(ChangeKind::AnnotationChange);
    }
    if (before.javadoc_text != after.javadoc_text) {
        kinds.insert(ChangeKind::JavadocChange);
    }
    // Modifier or throws-clause edits show up only in the declaration text.
    const auto decl_before = normalize_text(before.declaration_text());
    const auto decl_after = normalize_text(after.declaration_text());
    const bool explained = kinds.count(ChangeKind::SignatureChange) || kinds.count(ChangeKind::BodyChange) ||
                           kinds.count(ChangeKind::AnnotationChange);
    if (decl_before != decl_after && !explained) {
        kinds.insert(ChangeKind::SignatureChange);
    } else if (decl_before == decl_after && before.declaration_text() != after.declaration_text()) {
        kinds.insert(ChangeKind::FormattingChange);
    }

    if (!config.include_formatting) {
        kinds.erase(ChangeKind::FormattingChange);
    }
    if (!config.include_javadoc) {
        kinds.erase(ChangeKind::JavadocChange);
    }
    if (!config.include_annotations) {
        kinds.erase(ChangeKind::AnnotationChange);
    }
    if (relation == FileRelation::Renamed) {
        kinds.insert(ChangeKind::FileRename);
    } else if (relation == FileRelation::Moved) {
        kinds.insert(ChangeKind::MethodMove);
    }
    return kinds;
}

MergeDecision resolve_merge(const MethodRecord& at_merge, const std::vector<ParentMatch>& parents,
                            const TracerConfig& config) {
    MergeDecision decision;
    std::optional<std::size_t> best;
    SimilarityScore best_score;
    for (std::size_t i = 0; i < parents.size(); ++i) {
        const auto& match = parents[i].match;
        if (!match.found()) {
            continue;
        }
        if (match.method->full_text == at_merge.full_text) {
            return decision;
        }
        const auto score = method_similarity(*match.method, at_merge);
        if (!best || score > best_score) {
            best = i;
            best_score = score;
        }
    }
    if (!best) {
        return decision;
    }
    decision.kinds = classify_change(*parents[*best].match.method, at_merge, parents[*best].relation, config);
    if (!decision.kinds.empty()) {
        decision.kinds.insert(ChangeKind::MergeResolutionChange);
        decision.record = true;
        decision.compared_with = best;
    }
    return decision;
}

std::optional<DeadEnd> determine_introduction(const std::vector<DeadEnd>& dead_ends) {
    const DeadEnd* earliest = nullptr;
    for (const auto& candidate : dead_ends) {
        if (earliest == nullptr || candidate.commit.commit_time < earliest->commit.commit_time ||
            (candidate.commit.commit_time == earliest->commit.commit_time &&
             candidate.commit.id < earliest->commit.id)) {
            earliest = &candidate;
        }
    }
    if (earliest == nullptr) {
        return std::nullopt;
    }
    return *earliest;
}

Tracer::Tracer(RepoHandle& repo, TracerConfig config, std::shared_ptr<ParseCache> cache)
    : repo_(repo),
      config_(config),
      source_(repo, std::move(cache)),
      matcher_(source_, config.thresholds) {}

MethodHistory Tracer::trace(const TraversalNode& locator) {
    visited_.clear();
    records_.clear();
    dead_ends_.clear();
    dag_commits_.clear();
    dequeued_ = 0;
    truncated_ = false;

    const auto start_commit = repo_.resolve_commit(locator.commit.str());
    TraversalNode start = locator;
    start.commit = start_commit.id;

    auto parsed = source_.parsed(start.commit, start.file);
    if (!parsed) {
        throw Error(ErrorCode::StartFileAbsent, start.file + " does not exist at " + start.commit.str());
    }
    if (!parsed->parse_ok) {
        std::string message = "cannot parse " + start.file + " at " + start.commit.str();
        for (const auto& d : parsed->diagnostics) {
            message += "; " + d;
        }
        throw Error(ErrorCode::ParseFailureAtStart, message);
    }
    const MethodRecord* start_method = nullptr;
    try {
        start_method = &find_method(*parsed, start.name, start.line);
    } catch (const Error& e) {
        throw Error(ErrorCode::StartMethodNotFound, e.what());
    }

    trace_file(start, *start_method);

    MethodHistory history;
    history.locator = start;
    history.start_method = *start_method;
    if (!truncated_) {
        if (auto intro = determine_introduction(dead_ends_)) {
            ChangeRecord record;
            record.commit = intro->commit;
            record.kinds = {ChangeKind::Introduced};
            record.file_before = intro->file;
            record.file_after = intro->file;
            record.name_before = intro->method.name;
            record.name_after = intro->method.name;
            record.start_line_after = intro->method.start_line;
            record.method_after = intro->method;
            record.contributor = contributor_of(intro->commit);
            records_[intro->commit.id] = std::move(record);
            history.complete = true;
        }
    }
    for (auto& [id, record] : records_) {
        history.records.push_back(std::move(record));
    }
    records_.clear();
    std::sort(history.records.begin(), history.records.end(), [this](const ChangeRecord& a, const ChangeRecord& b) {
        if (a.commit.commit_time != b.commit.commit_time) {
            return a.commit.commit_time > b.commit.commit_time;
        }
        return repo_.topo_index(a.commit.id) < repo_.topo_index(b.commit.id);
    });
    return history;
}

std::vector<ParentMatch> Tracer::match_parents(const CommitMeta& commit, const QueueItem& item) {
    std::vector<ParentMatch> out;
    for (const auto& parent : commit.parents) {
        ParentMatch pm;
        pm.parent = parent;
        pm.match = matcher_.find_by_signature_match(parent, item.node.file, item.method);
        if (!pm.match.found()) {
            pm.match = matcher_.find_by_body_match(parent, item.node.file, item.method,
                                                   config_.thresholds.same_file);
        }
        if (!pm.match.found()) {
            pm.match = matcher_.alt_file_match(commit.id, parent, item.method);
            if (pm.match.found()) {
                pm.relation = FileRelation::Moved;
                for (const auto& entry : repo_.list_changed_files(commit.id, parent)) {
                    if (entry.kind == DiffKind::Renamed && entry.old_path == pm.match.source_file &&
                        entry.new_path == item.node.file) {
                        pm.relation = FileRelation::Renamed;
                    }
                }
            }
        }
        out.push_back(std::move(pm));
    }
    return out;
}

void Tracer::add_record(const CommitMeta& commit, const QueueItem& item, const ParentMatch& parent,
                        ChangeKinds kinds) {
    if (records_.count(commit.id) != 0) {
        return;
    }
    ChangeRecord record;
    record.commit = commit;
    record.kinds = std::move(kinds);
    record.file_before = parent.match.source_file.value_or(item.node.file);
    record.file_after = item.node.file;
    record.name_before = parent.match.method->name;
    record.name_after = item.method.name;
    record.start_line_after = item.method.start_line;
    record.method_before = parent.match.method;
    record.method_after = item.method;
    record.contributor = contributor_of(commit);
    records_.emplace(commit.id, std::move(record));
}

void Tracer::trace_file(const TraversalNode& start, const MethodRecord& start_method) {
    if (!visited_.insert({start.commit, start.file}).second) {
        return;
    }
    const auto dag = repo_.build_file_dag(start.commit, start.file);
    dag_commits_.insert(dag.nodes.begin(), dag.nodes.end());

    std::deque<QueueItem> queue;
    queue.push_back({start, start_method});
    while (!queue.empty()) {
        if (config_.max_commits && dequeued_ >= *config_.max_commits) {
            truncated_ = true;
            return;
        }
        auto item = std::move(queue.front());
        queue.pop_front();
        ++dequeued_;

        const auto& commit = repo_.commit(item.node.commit);
        auto matches = match_parents(commit, item);
        const bool any_found =
            std::any_of(matches.begin(), matches.end(), [](const ParentMatch& m) { return m.match.found(); });
        if (!any_found) {
            dead_ends_.push_back({commit, item.node.file, item.method});
            continue;
        }

        if (matches.size() == 1) {
            const auto& only = matches.front();
            if (only.match.method->full_text != item.method.full_text || only.match.source_file) {
                auto kinds = classify_change(*only.match.method, item.method, only.relation, config_);
                if (!kinds.empty()) {
                    add_record(commit, item, only, std::move(kinds));
                }
            }
        } else {
            const auto decision = resolve_merge(item.method, matches, config_);
            if (decision.record) {
                add_record(commit, item, matches[*decision.compared_with], decision.kinds);
            }
        }

        const auto lines = dag.lines.find(item.node.commit);
        for (const auto& pm : matches) {
            if (!pm.match.found()) {
                continue;
            }
            const auto& found = *pm.match.method;
            if (pm.match.source_file) {
                if (truncated_) {
                    return;
                }
                TraversalNode moved{pm.parent, *pm.match.source_file, found.name, found.start_line};
                trace_file(moved, found);
                continue;
            }
            if (lines == dag.lines.end()) {
                continue;
            }
            for (const auto& line : lines->second) {
                if (line.parent != pm.parent) {
                    continue;
                }
                for (const auto& ancestor : line.nearest) {
                    if (visited_.insert({ancestor, item.node.file}).second) {
                        queue.push_back({TraversalNode{ancestor, item.node.file, found.name, found.start_line},
                                         found});
                    }
                }
            }
        }
    }
}

}  // namespace mtrail
