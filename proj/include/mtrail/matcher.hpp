#pragma once

#include "mtrail/java_source.hpp"
#include "mtrail/repo.hpp"
#include "mtrail/similarity.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace mtrail {

/// Case-sensitive Jaro-Winkler over the Javadoc-free, normalized method text
/// (annotations, signature and body).
SimilarityScore method_similarity(const MethodRecord& x, const MethodRecord& y);

struct MatchThresholds {
    double same_file = 0.70;
    double cross_file = 0.75;

    /// Throws Error(InvalidArgument) unless 0 < same_file <= cross_file <= 1.
    void validate() const;
};

struct MatchResult {
    std::optional<MethodRecord> method;
    SimilarityScore score;
    std::optional<std::string> source_file;  ///< set by alt_file_match only
    std::vector<std::string> diagnostics;

    [[nodiscard]] bool found() const noexcept { return method.has_value(); }
};

/// How often each cascade stage ran.
struct MatchCounters {
    std::size_t signature = 0;
    std::size_t body = 0;
    std::size_t alt_file = 0;
};

/// Parsed view of files at commits, backed by a repository and a parse cache.
class MethodSource {
public:
    MethodSource(RepoHandle& repo, std::shared_ptr<ParseCache> cache);

    /// nullptr when the file does not exist at `commit`.
    std::shared_ptr<const ParsedFile> parsed(const CommitId& commit, const std::string& file);

    [[nodiscard]] RepoHandle& repo() noexcept { return repo_; }

private:
    RepoHandle& repo_;
    std::shared_ptr<ParseCache> cache_;
};

/// Picks the best body-similarity candidate strictly above `threshold`.
/// Ties: same simple name as the target, then nearest start line, then the
/// lower start line.
std::optional<std::pair<const MethodRecord*, SimilarityScore>> best_body_candidate(
    const std::vector<MethodRecord>& candidates, const MethodRecord& target, double threshold);

class Matcher {
public:
    Matcher(MethodSource& source, MatchThresholds thresholds);

    MatchResult find_by_signature_match(const CommitId& commit, const std::string& file,
                                        const MethodRecord& target);
    MatchResult find_by_body_match(const CommitId& commit, const std::string& file, const MethodRecord& target,
                                   double threshold);
    MatchResult alt_file_match(const CommitId& commit, const CommitId& parent, const MethodRecord& target);

    [[nodiscard]] const MatchThresholds& thresholds() const noexcept { return thresholds_; }
    [[nodiscard]] const MatchCounters& counters() const noexcept { return counters_; }

private:
    std::shared_ptr<const ParsedFile> load(const CommitId& commit, const std::string& file, MatchResult& result);

    MethodSource& source_;
    MatchThresholds thresholds_;
    MatchCounters counters_;
};

}  // namespace mtrail
