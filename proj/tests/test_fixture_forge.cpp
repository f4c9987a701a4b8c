#include "mtrail/error.hpp"
#include "mtrail/fixture_forge.hpp"
#include "support.hpp"

#include <catch_amalgamated.hpp>

#include <set>

using namespace mtrail;
using namespace testing;

namespace {

ErrorCode build_error(const std::vector<ScenarioStep>& steps, const std::filesystem::path& dir) {
    try {
        build_scenario(steps, dir);
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("build succeeded");
    return ErrorCode::InvalidArgument;
}

std::string git_out(const std::filesystem::path& repo, const std::vector<std::string>& args) {
    return trim(git(repo, args));
}

}  // namespace

TEST_CASE("catalog covers every step kind") {
    std::set<StepKind> kinds;
    std::set<MergeResolution> resolutions;
    std::set<std::string> names;
    std::size_t combos = 0;
    for (const auto& s : standard_catalog()) {
        CHECK(names.insert(s.name).second);
        combos += s.name.rfind("combo-", 0) == 0 ? 1 : 0;
        for (const auto& step : s.steps) {
            kinds.insert(step.kind);
            if (step.kind == StepKind::MergeBranches) {
                resolutions.insert(step.resolution);
            }
        }
    }
    CHECK(kinds.size() == 12);
    CHECK(resolutions.size() == 3);
    CHECK(combos >= 6);
}

TEST_CASE("built repositories are valid and linear where expected") {
    TempDir tmp;
    const auto built = build_scenario(scenario("combo-chain").steps, tmp / "repo");
    CHECK(git_out(built.repo, {"fsck", "--strict", "--no-dangling", "--no-progress"}).empty());
    CHECK(git_out(built.repo, {"status", "--porcelain"}).empty());
    CHECK(git_out(built.repo, {"rev-list", "--count", "HEAD"}) == "5");
    CHECK(git_out(built.repo, {"rev-parse", "--abbrev-ref", "HEAD"}) == "main");
    CHECK(git_out(built.repo, {"log", "-1", "--format=%an <%ae>"}) == "Fixture Forge <forge@example.com>");
    CHECK(built.truth.expected.size() == 5);
    CHECK(built.truth.locator.commit.str() == git_out(built.repo, {"rev-parse", "HEAD"}));
    CHECK(built.truth.expected.back().commit_time == kForgeEpoch);
}

TEST_CASE("merge scenarios produce real merge commits") {
    TempDir tmp;
    const auto built = build_scenario(scenario("merge-take-ours").steps, tmp / "repo");
    CHECK(git_out(built.repo, {"fsck", "--strict", "--no-dangling", "--no-progress"}).empty());
    const auto merges = git_out(built.repo, {"rev-list", "--merges", "HEAD"});
    REQUIRE_FALSE(merges.empty());
    CHECK(git_out(built.repo, {"branch", "--format=%(refname:short)"}) == "main");
    // the truth never lists a merge commit when the resolution keeps a parent's version
    for (const auto& r : built.truth.expected) {
        CHECK(r.commit.str() != merges);
    }
    REQUIRE(built.truth.expected.size() == 3);
    CHECK(built.truth.expected[0].kinds == ChangeKinds{ChangeKind::BodyChange});

    const auto edited = build_scenario(scenario("merge-edited").steps, tmp / "edited");
    const auto merge = git_out(edited.repo, {"rev-list", "--merges", "HEAD"});
    CHECK(edited.truth.expected.front().commit.str() == merge);
    CHECK(edited.truth.expected.front().kinds.count(ChangeKind::MergeResolutionChange) == 1);
}

TEST_CASE("single-step truths") {
    TempDir tmp;
    const auto init = build_scenario({{StepKind::InitFile}}, tmp / "init");
    REQUIRE(init.truth.expected.size() == 1);
    CHECK(init.truth.expected[0].kinds == ChangeKinds{ChangeKind::Introduced});

    const auto fmt = build_scenario({{StepKind::InitFile}, {StepKind::FormatOnly}}, tmp / "fmt");
    REQUIRE(fmt.truth.expected.size() == 2);
    CHECK(fmt.truth.expected[0].kinds == ChangeKinds{ChangeKind::FormattingChange});
    CHECK(fmt.truth.expected[1].kinds == ChangeKinds{ChangeKind::Introduced});

    const auto other = build_scenario({{StepKind::InitFile}, {StepKind::TouchOtherFile}}, tmp / "other");
    CHECK(other.truth.expected.size() == 1);
    CHECK(git_out(other.repo, {"rev-list", "--count", "HEAD"}) == "2");
}

TEST_CASE("same steps give the same commits") {
    TempDir tmp;
    for (const char* name : {"combo-mixed", "combo-merge-resolution"}) {
        const auto a = build_scenario(scenario(name).steps, tmp / (std::string(name) + "-a"));
        const auto b = build_scenario(scenario(name).steps, tmp / (std::string(name) + "-b"));
        CHECK(a.truth.locator.commit == b.truth.locator.commit);
        REQUIRE(a.truth.expected.size() == b.truth.expected.size());
        for (std::size_t i = 0; i < a.truth.expected.size(); ++i) {
            CHECK(a.truth.expected[i].commit == b.truth.expected[i].commit);
        }
    }
}

TEST_CASE("invalid scripts and workdirs") {
    TempDir tmp;
    CHECK(build_error({}, tmp / "a") == ErrorCode::StepInvalid);
    CHECK(build_error({{StepKind::EditBody}}, tmp / "b") == ErrorCode::StepInvalid);
    CHECK(build_error({{StepKind::InitFile}, {StepKind::InitFile}}, tmp / "c") == ErrorCode::StepInvalid);
    CHECK(build_error({{StepKind::InitFile, MergeResolution::TakeOurs, "sideways"}}, tmp / "d") ==
          ErrorCode::StepInvalid);
    CHECK(build_error({{StepKind::InitFile, MergeResolution::TakeOurs, "deferred"}}, tmp / "e") ==
          ErrorCode::StepInvalid);
    write_file(tmp / "busy" / "x.txt", "occupied");
    CHECK(build_error({{StepKind::InitFile}}, tmp / "busy") == ErrorCode::WorkdirNotEmpty);
}

TEST_CASE("ground truth converts to a native oracle") {
    TempDir tmp;
    const auto built = build_scenario(scenario("rename-file").steps, tmp / "repo");
    const auto entry = to_oracle(built.truth, "rename-file", "rename-file");
    CHECK(entry.repository == "rename-file");
    CHECK(entry.start_commit == built.truth.locator.commit.str());
    CHECK(entry.file == built.truth.locator.file);
    CHECK(entry.method_name == built.truth.locator.name);
    CHECK(entry.start_line == built.truth.locator.line);
    REQUIRE(entry.expected.size() == built.truth.expected.size());
    CHECK(entry.expected.front().kinds == ChangeKinds{ChangeKind::FileRename});
    CHECK(parse_native_oracle(to_native_json(entry), "x").expected.size() == entry.expected.size());
}
