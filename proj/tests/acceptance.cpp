// One line per acceptance criterion: PASS, FAIL or SKIP, then a short reason.
// Exit status is nonzero when anything fails.

#include "mtrail/error.hpp"
#include "mtrail/evaluation.hpp"
#include "mtrail/fixture_forge.hpp"
#include "mtrail/history_json.hpp"
#include "mtrail/similarity.hpp"
#include "mtrail/tracer.hpp"
#include "reference_jaro.hpp"
#include "reference_rows.hpp"
#include "support.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <random>
#include <sstream>

using namespace mtrail;
using namespace testing;
using Clock = std::chrono::steady_clock;

namespace {

enum class Verdict { Pass, Fail, Skip };

struct Outcome {
    Verdict verdict;
    std::string detail;
};

Outcome pass(std::string d) { return {Verdict::Pass, std::move(d)}; }
Outcome fail(std::string d) { return {Verdict::Fail, std::move(d)}; }
Outcome skip(std::string d) { return {Verdict::Skip, std::move(d)}; }

double since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

std::string fmt(double v, int digits = 3) {
    std::ostringstream out;
    out.setf(std::ios::fixed);
    out.precision(digits);
    out << v;
    return out.str();
}

std::string commit_pairs(const std::vector<std::pair<std::string, ChangeKinds>>& v) {
    std::string s;
    for (const auto& [c, kinds] : v) {
        s += c.substr(0, 7) + "{";
        for (auto k : kinds) {
            s += std::string(to_string(k)) + ",";
        }
        s += "} ";
    }
    return s;
}

Outcome published_arithmetic() {
    const auto start = Clock::now();
    int bad = 0;
    std::string first;
    for (const auto& row : kReferenceRows) {
        const MetricCounts c{row.tp, row.fp, row.fn};
        const auto s = commit_level_scores(std::span(&c, 1));
        const double oracle_p = percent_hundredths(row.tp, row.tp + row.fp) / 100.0;
        const double oracle_r = percent_hundredths(row.tp, row.tp + row.fn) / 100.0;
        const double oracle_f = percent_hundredths(2 * row.tp, 2 * row.tp + row.fp + row.fn) / 100.0;
        const bool ok = std::abs(s.precision - row.precision) <= 0.01 + 1e-9 &&
                        std::abs(s.recall - row.recall) <= 0.01 + 1e-9 && std::abs(s.f1 - row.f1) <= 0.01 + 1e-9 &&
                        std::abs(s.precision - oracle_p) < 1e-9 && std::abs(s.recall - oracle_r) < 1e-9 &&
                        std::abs(s.f1 - oracle_f) < 1e-9;
        if (!ok) {
            ++bad;
            if (first.empty()) {
                first = std::string(row.oracle) + "/" + row.tool + " gave " + fmt(s.precision, 2) + "/" +
                        fmt(s.recall, 2) + "/" + fmt(s.f1, 2);
            }
        }
    }
    const double t = since(start);
    if (bad > 0) {
        return fail(std::to_string(bad) + " of 18 rows differ, first: " + first);
    }
    if (t >= 1.0) {
        return fail("took " + fmt(t) + " s");
    }
    return pass("18 of 18 rows within 0.01 in " + fmt(t) + " s");
}

Outcome similarity_oracle() {
    const auto start = Clock::now();
    std::mt19937 rng(424242);
    std::uniform_int_distribution<int> length(0, 12);
    std::uniform_int_distribution<int> letter(0, 3);
    auto random = [&] {
        std::string s(static_cast<std::size_t>(length(rng)), ' ');
        for (auto& c : s) {
            c = static_cast<char>('a' + letter(rng));
        }
        return s;
    };
    double worst = 0;
    for (int i = 0; i < 10000; ++i) {
        const auto a = random();
        const auto b = random();
        worst = std::max(worst, std::abs(jaro(a, b).value() - reference_jaro(a, b)));
        worst = std::max(worst, std::abs(jaro_winkler(a, b).value() - reference_jaro_winkler(a, b)));
    }
    const double martha = jaro_winkler("MARTHA", "MARHTA").value();
    const double t = since(start);
    if (worst > 1e-12) {
        return fail("max deviation " + std::to_string(worst));
    }
    if (std::abs(martha - 0.961111) > 5e-7) {
        return fail("MARTHA/MARHTA = " + fmt(martha, 6));
    }
    if (t >= 10.0) {
        return fail("took " + fmt(t) + " s");
    }
    return pass("10000 pairs exact to 1e-12, MARTHA/MARHTA " + fmt(martha, 6) + ", " + fmt(t) + " s");
}

Outcome scenario_suite(const fs::path& work) {
    std::size_t ok = 0;
    double slowest = 0;
    std::string failures;
    const auto& catalog = standard_catalog();
    for (const auto& s : catalog) {
        try {
            const auto built = build_scenario(s.steps, work / "suite" / s.name);
            const auto start = Clock::now();
            RepoHandle repo = open_repository(built.repo.string(), work / "cache");
            Tracer tracer(repo, {});
            const auto history = tracer.trace(built.truth.locator);
            const double t = since(start);
            slowest = std::max(slowest, t);

            std::vector<std::pair<std::string, ChangeKinds>> got;
            std::vector<std::pair<std::string, ChangeKinds>> want;
            for (const auto& r : history.records) got.emplace_back(r.commit.id.str(), r.kinds);
            for (const auto& r : built.truth.expected) want.emplace_back(r.commit.str(), r.kinds);

            const auto entry = to_oracle(built.truth, s.name, s.name);
            ChangeKinds all(all_change_kinds().begin(), all_change_kinds().end());
            const auto counts = compare(history, entry, all);
            if (counts.fp == 0 && counts.fn == 0 && got == want && t < 5.0) {
                ++ok;
            } else {
                failures += " " + s.name + " (fp=" + std::to_string(counts.fp) + " fn=" + std::to_string(counts.fn) +
                            " got " + commit_pairs(got) + "want " + commit_pairs(want) + " " + fmt(t) + " s)";
            }
        } catch (const std::exception& e) {
            failures += " " + s.name + " (" + e.what() + ")";
        }
    }
    if (ok != catalog.size()) {
        return fail(std::to_string(ok) + "/" + std::to_string(catalog.size()) + " exact;" + failures);
    }
    return pass(std::to_string(ok) + " scenarios at precision = recall = 1, slowest " + fmt(slowest) + " s");
}

Outcome merge_semantics(const fs::path& work) {
    auto traced = [&](const std::string& name) {
        const auto built = build_scenario(scenario(name).steps, work / "merge" / name);
        RepoHandle repo = open_repository(built.repo.string(), work / "cache");
        Tracer tracer(repo, {});
        return tracer.trace(built.truth.locator);
    };
    std::string problems;
    for (const char* name : {"merge-take-ours", "merge-take-theirs"}) {
        const auto h = traced(name);
        for (const auto& r : h.records) {
            if (r.commit.parents.size() > 1) {
                problems += std::string(" ") + name + " recorded merge " + r.commit.id.short_id();
            }
        }
    }
    const auto edited = traced("merge-edited");
    std::size_t merge_records = 0;
    for (const auto& r : edited.records) {
        if (r.commit.parents.size() > 1) {
            ++merge_records;
            if (!r.kinds.count(ChangeKind::MergeResolutionChange)) {
                problems += " edited merge lacks MergeResolutionChange";
            }
        }
    }
    if (merge_records != 1) {
        problems += " edited resolution gave " + std::to_string(merge_records) + " merge records";
    }
    if (!problems.empty()) {
        return fail(problems.substr(1));
    }
    return pass("parent-identical merges silent; edited resolution has one MergeResolutionChange record");
}

Outcome determinism(const fs::path& work) {
    std::size_t runs = 0;
    for (const auto& s : standard_catalog()) {
        const auto built = build_scenario(s.steps, work / "det" / s.name);
        const auto& loc = built.truth.locator;
        const std::vector<std::string> args{"--repo", built.repo.string(), "--commit", loc.commit.str(), "--file",
                                            loc.file, "--method", loc.name, "--line", std::to_string(loc.line)};
        const auto a = run_process(MTRAIL_CLI, args);
        const auto b = run_process(MTRAIL_CLI, args);
        if (a.exit_code != 0 || b.exit_code != 0) {
            return fail(s.name + ": exit " + std::to_string(a.exit_code) + "/" + std::to_string(b.exit_code));
        }
        if (a.out != b.out) {
            return fail(s.name + ": consecutive runs differ");
        }
        ++runs;
        if (s.name == "combo-chain") {
            const auto golden = fs::path(MTRAIL_SOURCE_DIR) / "tests" / "golden" / "combo-chain.json";
            if (!fs::exists(golden)) {
                return fail("golden file missing");
            }
            // the golden file was produced with repository = scenario name
            auto doc = deserialize(a.out);
            doc.repository = "combo-chain";
            if (serialize(doc) != read_file(golden)) {
                return fail("combo-chain differs from the golden file");
            }
        }
    }
    return pass(std::to_string(runs) + " scenarios byte-identical across two CLI runs; golden file matches");
}

Outcome checkstyle_smoke(const fs::path& work) {
    const char* source = std::getenv("MTRAIL_CHECKSTYLE_REPO");
    if (source == nullptr || *source == '\0') {
        return skip("set MTRAIL_CHECKSTYLE_REPO to a checkstyle clone or URL (needs the network otherwise)");
    }
    const auto start = Clock::now();
    try {
        RepoHandle repo = open_repository(source, work / "clones");
        const auto origin = repo.resolve_commit("119fd4");
        const std::string file = "src/main/java/com/puppycrawl/tools/checkstyle/Checker.java";
        const auto parsed = parse_methods(repo.read_file(origin.id, file), file);
        const MethodRecord* target = nullptr;
        for (const auto& m : parsed.methods) {
            if (m.name == "fireErrors") {
                target = &m;
                break;
            }
        }
        if (target == nullptr) {
            return fail("fireErrors not found at 119fd4");
        }
        Tracer tracer(repo, {});
        const auto history = tracer.trace({origin.id, file, "fireErrors", target->start_line});
        const double t = since(start);
        bool renamed = false;
        std::string introduced;
        for (const auto& r : history.records) {
            if (r.kinds.count(ChangeKind::Rename) && r.name_before == "displayErrors") {
                renamed = true;
            }
            if (r.kinds.count(ChangeKind::Introduced)) {
                introduced = r.commit.id.str();
            }
        }
        if (!renamed) {
            return fail("no rename from displayErrors");
        }
        if (introduced.rfind("0fd69", 0) != 0) {
            return fail("introduction at " + introduced.substr(0, 7));
        }
        if (t > 120.0) {
            return fail("took " + fmt(t) + " s");
        }
        return pass("rename from displayErrors found, introduced at " + introduced.substr(0, 7) + ", " + fmt(t) + " s");
    } catch (const std::exception& e) {
        return fail(e.what());
    }
}

Outcome runtime_sanity(const fs::path& work) {
    std::string manifest;
    for (const auto& s : standard_catalog()) {
        const auto built = build_scenario(s.steps, work / "bench" / s.name);
        const auto& loc = built.truth.locator;
        manifest += built.repo.string() + "\t" + loc.commit.str() + "\t" + loc.file + "\t" + loc.name + "\t" +
                    std::to_string(loc.line) + "\n";
    }
    write_file(work / "bench.tsv", manifest);
    const auto r = run_process(MTRAIL_CLI, {"bench", "--manifest", (work / "bench.tsv").string(), "--cache-dir",
                                            (work / "bench-cache").string()});
    if (r.exit_code != 0) {
        return fail("bench exited " + std::to_string(r.exit_code) + ": " + r.err);
    }
    const auto j = nlohmann::json::parse(r.out);
    std::vector<double> seconds;
    for (const auto& run : j["runs"]) {
        if (run["exit_code"] != 0) {
            return fail("a traced run failed");
        }
        seconds.push_back(run["seconds"].get<double>());
    }
    const auto raw_min = *std::min_element(seconds.begin(), seconds.end());
    const auto raw_max = *std::max_element(seconds.begin(), seconds.end());
    const auto& s = j["runtime_stats"];
    const double mn = s["min"], md = s["median"], mean = s["mean"], mx = s["max"];
    if (!(mn <= md && md <= mx && mn <= mean && mean <= mx)) {
        return fail("stats out of order");
    }
    if (raw_min >= 1.0 || raw_max >= 10.0) {
        return fail("min " + fmt(raw_min) + " s, max " + fmt(raw_max) + " s");
    }
    return pass(std::to_string(seconds.size()) + " cold runs: min " + fmt(raw_min) + " s, median " + fmt(md, 2) +
                " s, max " + fmt(raw_max) + " s");
}

}  // namespace

int main() {
    TempDir work("mtrail-acceptance");
    struct Criterion {
        const char* name;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria{
        {"published-arithmetic", published_arithmetic},
        {"similarity-oracle", similarity_oracle},
        {"scenario-suite", [&] { return scenario_suite(work.path()); }},
        {"merge-semantics", [&] { return merge_semantics(work.path()); }},
        {"determinism", [&] { return determinism(work.path()); }},
        {"checkstyle-smoke", [&] { return checkstyle_smoke(work.path()); }},
        {"runtime-sanity", [&] { return runtime_sanity(work.path()); }},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = fail(std::string("exception: ") + e.what());
        }
        const char* tag = o.verdict == Verdict::Pass ? "PASS" : o.verdict == Verdict::Fail ? "FAIL" : "SKIP";
        failed += o.verdict == Verdict::Fail ? 1 : 0;
        std::cout << tag << " " << c.name << ": " << o.detail << std::endl;
    }
    return failed == 0 ? 0 : 1;
}
