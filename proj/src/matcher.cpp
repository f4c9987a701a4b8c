#include "mtrail/matcher.hpp"

#include "mtrail/error.hpp"

#include <cstdlib>

namespace mtrail {

SimilarityScore method_similarity(const MethodRecord& x, const MethodRecord& y) {
    return jaro_winkler(normalize_text(x.declaration_text()), normalize_text(y.declaration_text()));
}

void MatchThresholds::validate() const {
    if (!(same_file > 0.0 && same_file <= cross_file && cross_file <= 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "thresholds must satisfy 0 < same_file <= cross_file <= 1");
    }
}

MethodSource::MethodSource(RepoHandle& repo, std::shared_ptr<ParseCache> cache)
    : repo_(repo), cache_(cache ? std::move(cache) : std::make_shared<ParseCache>()) {}

std::shared_ptr<const ParsedFile> MethodSource::parsed(const CommitId& commit, const std::string& file) {
    auto blob = repo_.read_blob(commit, file);
    if (!blob) {
        return nullptr;
    }
    return cache_->get_or_parse(blob->oid, file, blob->text, commit.str());
}

std::optional<std::pair<const MethodRecord*, SimilarityScore>> best_body_candidate(
    const std::vector<MethodRecord>& candidates, const MethodRecord& target, double threshold) {
    const MethodRecord* best = nullptr;
    SimilarityScore best_score;
    const auto target_text = normalize_text(target.declaration_text());
    auto better_tie = [&](const MethodRecord& a, const MethodRecord& b) {
        const bool a_name = a.name == target.name;
        const bool b_name = b.name == target.name;
        if (a_name != b_name) {
            return a_name;
        }
        const int da = std::abs(a.start_line - target.start_line);
        const int db = std::abs(b.start_line - target.start_line);
        if (da != db) {
            return da < db;
        }
        return a.start_line < b.start_line;
    };
    for (const auto& candidate : candidates) {
        const auto score = jaro_winkler(normalize_text(candidate.declaration_text()), target_text);
        if (!(score.value() > threshold)) {
            continue;
        }
        if (best == nullptr || score > best_score || (score == best_score && better_tie(candidate, *best))) {
            best = &candidate;
            best_score = score;
        }
    }
    if (best == nullptr) {
        return std::nullopt;
    }
    return std::pair(best, best_score);
}

Matcher::Matcher(MethodSource& source, MatchThresholds thresholds)
    : source_(source), thresholds_(thresholds) {
    thresholds_.validate();
}

std::shared_ptr<const ParsedFile> Matcher::load(const CommitId& commit, const std::string& file,
                                                MatchResult& result) {
    auto parsed = source_.parsed(commit, file);
    if (!parsed) {
        result.diagnostics.push_back(std::string(to_string(ErrorCode::FileAbsentAtCommit)) + ": " + file +
                                     " at " + commit.short_id());
        return nullptr;
    }
    if (!parsed->parse_ok) {
        std::string message = std::string(to_string(ErrorCode::ParseFailure)) + ": " + file + " at " +
                              commit.short_id();
        for (const auto& d : parsed->diagnostics) {
            message += "; " + d;
        }
        result.diagnostics.push_back(std::move(message));
        return nullptr;
    }
    return parsed;
}

MatchResult Matcher::find_by_signature_match(const CommitId& commit, const std::string& file,
                                             const MethodRecord& target) {
    ++counters_.signature;
    MatchResult result;
    auto parsed = load(commit, file, result);
    if (!parsed) {
        return result;
    }
    for (const auto& method : parsed->methods) {
        if (method.signature == target.signature) {
            result.method = method;
            result.score = SimilarityScore(1.0);
            return result;
        }
    }
    return result;
}

MatchResult Matcher::find_by_body_match(const CommitId& commit, const std::string& file,
                                        const MethodRecord& target, double threshold) {
    ++counters_.body;
    MatchResult result;
    auto parsed = load(commit, file, result);
    if (!parsed) {
        return result;
    }
    if (auto best = best_body_candidate(parsed->methods, target, threshold)) {
        result.method = *best->first;
        result.score = best->second;
    }
    return result;
}

MatchResult Matcher::alt_file_match(const CommitId& commit, const CommitId& parent, const MethodRecord& target) {
    ++counters_.alt_file;
    MatchResult best;
    for (const auto& entry : source_.repo().list_changed_files(commit, parent)) {
        if (!entry.old_path) {
            continue;  // the file did not exist on the parent side
        }
        const auto& candidate = *entry.old_path;
        if (candidate == target.file || !candidate.ends_with(".java")) {
            continue;
        }
        auto match = find_by_body_match(parent, candidate, target, thresholds_.cross_file);
        best.diagnostics.insert(best.diagnostics.end(), match.diagnostics.begin(), match.diagnostics.end());
        if (match.found() && match.score > best.score) {
            best.method = std::move(match.method);
            best.score = match.score;
            best.source_file = candidate;
        }
    }
    return best;
}

}  // namespace mtrail
