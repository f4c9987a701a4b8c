#pragma once

#include "mtrail/evaluation.hpp"
#include "mtrail/tracer.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace mtrail {

enum class StepKind {
    InitFile,
    EditBody,
    RenameMethod,
    ChangeParams,
    MoveMethodToFile,
    RenameFile,
    AddOverload,
    MergeBranches,
    FormatOnly,
    EditJavadoc,
    EditAnnotation,
    TouchOtherFile,
};

std::string_view to_string(StepKind kind) noexcept;

enum class MergeResolution { TakeOurs, TakeTheirs, EditedResolution };

std::string_view to_string(MergeResolution resolution) noexcept;

struct ScenarioStep {
    StepKind kind = StepKind::InitFile;
    MergeResolution resolution = MergeResolution::TakeOurs;  ///< MergeBranches only
    /// "deferred" on InitFile leaves the traced method out of the first file;
    /// "dual-introduction" on MergeBranches adds it on both branches;
    /// "retarget" on AddOverload makes the new overload the traced method.
    std::string variant;
    /// Optional replacement fragment: new name, statement, annotation or
    /// Javadoc sentence, depending on the kind.
    std::string text;
};

struct ExpectedRecord {
    CommitId commit;
    std::int64_t commit_time = 0;
    ChangeKinds kinds;
};

struct GroundTruth {
    TraversalNode locator;                 ///< the traced method at HEAD
    std::vector<ExpectedRecord> expected;  ///< newest first
};

struct BuiltScenario {
    std::filesystem::path repo;
    GroundTruth truth;
};

/// Epoch of the first generated commit; step i is committed 60*i seconds later.
inline constexpr std::int64_t kForgeEpoch = 1600000000;

/// Creates a git repository in `workdir` (which must be empty or absent) by
/// replaying `steps`. Throws Error(WorkdirNotEmpty) or Error(StepInvalid).
BuiltScenario build_scenario(const std::vector<ScenarioStep>& steps, const std::filesystem::path& workdir);

struct Scenario {
    std::string name;
    std::vector<ScenarioStep> steps;
};

/// Every step kind on its own plus the documented combinations.
const std::vector<Scenario>& standard_catalog();

/// Ground truth as a native oracle entry.
OracleEntry to_oracle(const GroundTruth& truth, const std::string& name, const std::string& repository);

}  // namespace mtrail
