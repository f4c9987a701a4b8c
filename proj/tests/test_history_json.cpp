#include "mtrail/error.hpp"
#include "mtrail/history_json.hpp"
#include "support.hpp"

#include <catch_amalgamated.hpp>
#include <json.hpp>

#include <cstdlib>
#include <fstream>

using namespace mtrail;
using namespace testing;

namespace {

std::string traced(const std::string& name, const TracerConfig& config = {}) {
    TempDir tmp;
    const auto built = build_scenario(scenario(name).steps, tmp / "repo");
    RepoHandle repo = open_repository(built.repo.string(), tmp / "cache");
    Tracer tracer(repo, config);
    return serialize(tracer.trace(built.truth.locator), name, config);
}

}  // namespace

TEST_CASE("utc timestamps") {
    CHECK(format_utc(0) == "1970-01-01T00:00:00Z");
    CHECK(format_utc(1600000000) == "2020-09-13T12:26:40Z");
    CHECK(parse_utc("2020-09-13T12:26:40Z") == 1600000000);
    for (std::int64_t t : {0LL, 951782400LL, 1700000000LL, 4102444799LL}) {
        CHECK(parse_utc(format_utc(t)) == t);
    }
    CHECK_THROWS_AS(parse_utc("yesterday"), Error);
}

TEST_CASE("round trip preserves every field") {
    for (const char* name : {"combo-chain", "combo-merge-resolution", "init-only"}) {
        DYNAMIC_SECTION(name) {
            const auto text = traced(name);
            const auto doc = deserialize(text);
            CHECK(serialize(doc) == text);
            CHECK(deserialize(serialize(doc)) == doc);
            CHECK(doc.schema_version == "1");
            CHECK(doc.complete);
            CHECK(doc.origin_commit.size() == 40);
        }
    }
}

TEST_CASE("canonical layout") {
    const auto text = traced("edit-body");
    CHECK(text.back() == '\n');
    CHECK(text.find('\r') == std::string::npos);
    CHECK(text.rfind("{\n  \"schema_version\": \"1\",\n  \"repository\": \"edit-body\",", 0) == 0);
    const auto j = nlohmann::json::parse(text);
    CHECK(j["records"].size() == 2);
    CHECK(j["records"][0]["kinds"] == nlohmann::json::array({"BodyChange"}));
    CHECK(j["records"][1]["kinds"] == nlohmann::json::array({"Introduced"}));
    CHECK(j["records"][1]["method_before"].is_null());
    CHECK(j["config"]["max_commits"].is_null());
    CHECK(j["records"][0]["commit_time"].get<std::string>().back() == 'Z');
}

TEST_CASE("empty history document") {
    MethodHistory history;
    history.locator = {CommitId(std::string(40, 'a')), "A.java", "f", 3};
    history.complete = false;
    TracerConfig config;
    config.max_commits = 7;
    const auto text = serialize(history, "repo", config);
    const auto doc = deserialize(text);
    CHECK(doc.records.empty());
    CHECK_FALSE(doc.complete);
    CHECK(doc.config.max_commits == 7u);
    CHECK(doc.start_line == 3);
    CHECK(serialize(doc) == text);
}

TEST_CASE("malformed documents are rejected") {
    for (const char* bad : {"", "[]", "{\"schema_version\":\"1\"}", "not json",
                            "{\"schema_version\":1,\"repository\":\"r\"}"}) {
        try {
            deserialize(bad);
            FAIL("accepted: " << bad);
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::InvalidArgument);
        }
    }
}

TEST_CASE("error document") {
    const auto text = error_document("UnknownCommit", "no commit \"x\"");
    const auto j = nlohmann::json::parse(text);
    CHECK(j["error"] == "UnknownCommit");
    CHECK(j["message"] == "no commit \"x\"");
    CHECK(text.rfind("{\n  \"error\"", 0) == 0);
}

// Regenerate with MTRAIL_UPDATE_GOLDEN=1 after an intended format change.
TEST_CASE("golden output for the chain scenario") {
    const auto path = std::filesystem::path(MTRAIL_SOURCE_DIR) / "tests" / "golden" / "combo-chain.json";
    const auto text = traced("combo-chain");
    if (std::getenv("MTRAIL_UPDATE_GOLDEN") != nullptr) {
        std::filesystem::create_directories(path.parent_path());
        std::ofstream(path, std::ios::binary) << text;
    }
    REQUIRE(std::filesystem::exists(path));
    CHECK(read_file(path) == text);
}
